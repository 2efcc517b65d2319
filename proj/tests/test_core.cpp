#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "oracles.hpp"
#include "sedbox/errors.hpp"
#include "sedbox/rng.hpp"
#include "sedbox/types.hpp"

using namespace sedbox;

namespace {

Box make_box(double onset, double offset, int class_id = 0, double score = 1.0) {
    return Box{onset, offset - onset, class_id, score};
}

}  // namespace

TEST_CASE("iou of identical intervals is exactly one") {
    const Box a = make_box(0.0, 1.0);
    CHECK(iou(a, a) == 1.0);
    const Box b = make_box(3.721, 4.003);
    CHECK(iou(b, b) == 1.0);
}

TEST_CASE("iou of disjoint and touching intervals is zero") {
    CHECK(iou(make_box(0.0, 1.0), make_box(2.0, 3.0)) == 0.0);
    CHECK(iou(make_box(0.0, 1.0), make_box(1.0, 2.0)) == 0.0);
}

TEST_CASE("iou of half-overlapping intervals") {
    CHECK(iou(make_box(0.0, 1.0), make_box(0.5, 1.5)) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou ignores class labels") {
    CHECK(iou(make_box(0.0, 1.0, 0), make_box(0.0, 1.0, 5)) == 1.0);
}

TEST_CASE("iou is symmetric on random boxes") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Box a = oracle::random_box(rng);
        const Box b = oracle::random_box(rng);
        CHECK(iou(a, b) == iou(b, a));
        CHECK(iou(a, b) >= 0.0);
        CHECK(iou(a, b) <= 1.0);
    }
}

TEST_CASE("overlap counting matches the examples") {
    EventSet events;
    events.vocab = ClassVocab({"call"});
    events.clip_duration = 10.0;

    SUBCASE("two disjoint boxes") {
        events.boxes = {make_box(0.0, 1.0), make_box(2.0, 3.0)};
        CHECK(count_pairwise_overlaps(events) == 0);
    }
    SUBCASE("chain of three") {
        events.boxes = {make_box(0.0, 2.0), make_box(1.0, 3.0), make_box(2.5, 4.0)};
        CHECK(count_pairwise_overlaps(events) == 2);
    }
    SUBCASE("same-source pairs excluded") {
        events.boxes = {make_box(0.0, 1.0), make_box(0.0, 1.0)};
        const std::vector<int> sources{3, 3};
        CHECK(count_pairwise_overlaps(events, sources) == 0);
        const std::vector<int> distinct{3, 4};
        CHECK(count_pairwise_overlaps(events, distinct) == 1);
    }
    SUBCASE("touching boxes do not overlap") {
        events.boxes = {make_box(0.0, 1.0), make_box(1.0, 2.0)};
        CHECK(count_pairwise_overlaps(events) == 0);
    }
}

TEST_CASE("overlap counting agrees with brute force up to n = 200") {
    Rng rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(200));
        EventSet events;
        events.vocab = ClassVocab({"call"});
        events.clip_duration = 100.0;
        for (int i = 0; i < n; ++i) {
            events.boxes.push_back(oracle::random_box(rng));
        }
        CHECK(count_pairwise_overlaps(events) ==
              oracle::brute_force_overlaps(events.boxes));
    }
}

TEST_CASE("cross-source counting agrees with brute force") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(100));
        EventSet events;
        events.vocab = ClassVocab({"call"});
        events.clip_duration = 100.0;
        std::vector<int> sources;
        for (int i = 0; i < n; ++i) {
            events.boxes.push_back(oracle::random_box(rng, 1, 5.0));
            sources.push_back(static_cast<int>(rng.uniform_int(4)));
        }
        std::size_t expected = 0;
        for (std::size_t i = 0; i < events.boxes.size(); ++i) {
            for (std::size_t j = i + 1; j < events.boxes.size(); ++j) {
                if (sources[i] != sources[j] && overlaps(events.boxes[i], events.boxes[j])) {
                    ++expected;
                }
            }
        }
        CHECK(count_pairwise_overlaps(events, sources) == expected);
    }
}

TEST_CASE("event set validation rejects bad boxes") {
    EventSet events;
    events.vocab = ClassVocab({"call"});
    events.clip_duration = 10.0;

    events.boxes = {Box{0.0, 0.0, 0, 1.0}};
    CHECK_THROWS_AS(events.validate(), ValidationError);

    events.boxes = {Box{-1.0, 1.0, 0, 1.0}};
    CHECK_THROWS_AS(events.validate(), ValidationError);

    events.boxes = {Box{9.5, 1.0, 0, 1.0}};
    CHECK_THROWS_AS(events.validate(), ValidationError);

    events.boxes = {Box{0.0, 1.0, 7, 1.0}};
    CHECK_THROWS_AS(events.validate(), ValidationError);

    events.boxes = {Box{0.0, 1.0, 0, 1.5}};
    CHECK_THROWS_AS(events.validate(), ValidationError);

    events.boxes = {Box{0.0, 1.0, 0, 1.0}};
    CHECK_NOTHROW(events.validate());
}

TEST_CASE("normalize orders by onset, duration, class") {
    EventSet events;
    events.vocab = ClassVocab({"a", "b"});
    events.clip_duration = 10.0;
    events.boxes = {make_box(2.0, 3.0, 1), make_box(1.0, 4.0, 0), make_box(1.0, 2.0, 1),
                    make_box(1.0, 2.0, 0)};
    events.normalize();
    CHECK(events.boxes[0].onset == 1.0);
    CHECK(events.boxes[0].duration == 1.0);
    CHECK(events.boxes[0].class_id == 0);
    CHECK(events.boxes[1].class_id == 1);
    CHECK(events.boxes[2].duration == 3.0);
    CHECK(events.boxes[3].onset == 2.0);
}

TEST_CASE("class vocabulary validates names") {
    CHECK_THROWS_AS(ClassVocab(std::vector<std::string>{}), ValidationError);
    CHECK_THROWS_AS(ClassVocab({"a", "a"}), ValidationError);
    CHECK_THROWS_AS(ClassVocab({""}), ValidationError);
    const ClassVocab vocab({"zf", "noise"});
    CHECK(vocab.size() == 2);
    CHECK(vocab.index_of("noise") == 1);
    CHECK(!vocab.index_of("missing").has_value());
    CHECK(vocab.name(0) == "zf");
    CHECK_THROWS_AS(vocab.name(2), ValidationError);
}

TEST_CASE("rng reproduces sequences for equal seed and stream") {
    Rng a(42, 7);
    Rng b(42, 7);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next() == b.next());
    }
}

TEST_CASE("rng streams and substreams differ") {
    Rng a(42, 0);
    Rng b(42, 1);
    int equal = 0;
    for (int i = 0; i < 100; ++i) {
        if (a.next() == b.next()) {
            ++equal;
        }
    }
    CHECK(equal == 0);

    Rng base(42);
    Rng s0 = base.substream(0);
    Rng s1 = base.substream(1);
    CHECK(s0.next() != s1.next());
    CHECK(base.substream(0).next() == base.substream(0).next());
}

TEST_CASE("rng uniforms respect their ranges") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform(-3.0, 9.0);
        CHECK(v >= -3.0);
        CHECK(v < 9.0);
        const auto k = rng.uniform_int(17);
        CHECK(k < 17);
    }
}
