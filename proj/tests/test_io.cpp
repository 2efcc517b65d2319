#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sedbox/errors.hpp"
#include "sedbox/prediction_io.hpp"
#include "sedbox/selection_table.hpp"
#include "sedbox/wav.hpp"

using namespace sedbox;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test binary run.
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sedbox_io_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path file(const std::string& name) const { return path / name; }
};

const TempDir& scratch() {
    static TempDir dir;
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

double quantize6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

TEST_CASE("selection table with only a header is empty") {
    const auto path = scratch().file("empty.txt");
    write_text(path, "Selection\tBegin Time (s)\tEnd Time (s)\tAnnotation\n");
    const EventSet events = read_selection_table(path);
    CHECK(events.boxes.empty());
}

TEST_CASE("selection table maps fields onto boxes") {
    const auto path = scratch().file("one.txt");
    write_text(path,
               "Selection\tView\tChannel\tBegin Time (s)\tEnd Time (s)\tLow Freq (Hz)\t"
               "High Freq (Hz)\tAnnotation\n"
               "1\tSpectrogram 1\t1\t1.000000\t1.110000\t500\t8000\tzf\n");
    const EventSet events = read_selection_table(path);
    REQUIRE(events.boxes.size() == 1);
    CHECK(events.boxes[0].onset == 1.0);
    CHECK(events.boxes[0].duration == doctest::Approx(0.11).epsilon(1e-12));
    CHECK(events.vocab.name(events.boxes[0].class_id) == "zf");
    CHECK(events.boxes[0].score == 1.0);
}

TEST_CASE("rows with end before begin are rejected with the line number") {
    const auto path = scratch().file("bad_row.txt");
    write_text(path,
               "Begin Time (s)\tEnd Time (s)\tAnnotation\n"
               "1.0\t2.0\tzf\n"
               "3.0\t2.5\tzf\n");
    CHECK_THROWS_WITH_AS(read_selection_table(path), doctest::Contains(":3"),
                         ValidationError);
}

TEST_CASE("missing required columns are named") {
    const auto path = scratch().file("no_annotation.txt");
    write_text(path, "Begin Time (s)\tEnd Time (s)\n1.0\t2.0\n");
    CHECK_THROWS_WITH_AS(read_selection_table(path), doctest::Contains("Annotation"),
                         ValidationError);
}

TEST_CASE("unparsable numbers are rejected") {
    const auto path = scratch().file("nan_row.txt");
    write_text(path,
               "Begin Time (s)\tEnd Time (s)\tAnnotation\n"
               "1.0\tabc\tzf\n");
    CHECK_THROWS_AS(read_selection_table(path), ValidationError);
}

TEST_CASE("unknown classes are rejected under a fixed vocabulary") {
    const auto path = scratch().file("unknown_class.txt");
    write_text(path,
               "Begin Time (s)\tEnd Time (s)\tAnnotation\n"
               "1.0\t2.0\theron\n");
    CHECK_THROWS_AS(read_selection_table(path, ClassVocab({"zf"})), ValidationError);
    CHECK_NOTHROW(read_selection_table(path, ClassVocab({"heron", "zf"})));
}

TEST_CASE("selection tables round-trip at six decimals") {
    Rng rng(71);
    EventSet events;
    events.vocab = ClassVocab({"a", "b", "c"});
    events.clip_duration = 100.0;
    for (int i = 0; i < 40; ++i) {
        Box box = oracle::random_box(rng, 3, 50.0);
        box.onset = quantize6(box.onset);
        box.duration = std::max(1e-6, quantize6(box.duration));
        box.score = quantize6(box.score);
        events.boxes.push_back(box);
    }
    events.normalize();

    const auto path = scratch().file("roundtrip.txt");
    write_selection_table(events, path);
    const EventSet reread = read_selection_table(path, events.vocab);
    REQUIRE(reread.boxes.size() == events.boxes.size());
    for (std::size_t i = 0; i < events.boxes.size(); ++i) {
        CHECK(reread.boxes[i].onset == doctest::Approx(events.boxes[i].onset).epsilon(1e-9));
        CHECK(reread.boxes[i].offset() ==
              doctest::Approx(events.boxes[i].offset()).epsilon(1e-9));
        CHECK(reread.boxes[i].class_id == events.boxes[i].class_id);
        CHECK(reread.boxes[i].score ==
              doctest::Approx(events.boxes[i].score).epsilon(1e-9));
    }

    // A second write of the reread table is byte-identical.
    const auto again = scratch().file("roundtrip2.txt");
    write_selection_table(reread, again);
    std::ifstream f1(path, std::ios::binary);
    std::ifstream f2(again, std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
    const std::string bytes2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);
}

TEST_CASE("annotations are trimmed") {
    const auto path = scratch().file("trim.txt");
    write_text(path,
               "Begin Time (s)\tEnd Time (s)\tAnnotation\n"
               "1.0\t2.0\t zf \n");
    const EventSet events = read_selection_table(path);
    CHECK(events.vocab.name(events.boxes[0].class_id) == "zf");
}

TEST_CASE("minimal prediction file round-trips") {
    FramePredictions preds;
    preds.frame_rate = 50.0;
    preds.direction = Direction::backward;
    preds.p_det = Eigen::ArrayXd::Constant(1, 0.25);
    preds.dur_reg = Eigen::ArrayXd::Constant(1, 0.125);
    preds.class_logits = Eigen::MatrixXd::Constant(1, 1, -1.5);
    const ClassVocab vocab({"zf"});

    const auto path = scratch().file("one_frame.csv");
    write_predictions(preds, vocab, path);
    const PredictionFile reread = read_predictions(path);
    CHECK(reread.predictions.frames() == 1);
    CHECK(reread.predictions.direction == Direction::backward);
    CHECK(reread.vocab == vocab);
    CHECK(reread.predictions.p_det[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("prediction files round-trip within 1e-9 per field") {
    Rng rng(72);
    FramePredictions preds;
    preds.frame_rate = 50.0;
    const Eigen::Index t = 200;
    preds.p_det.resize(t);
    preds.dur_reg.resize(t);
    preds.class_logits.resize(t, 3);
    for (Eigen::Index i = 0; i < t; ++i) {
        preds.p_det[i] = rng.uniform();
        preds.dur_reg[i] = rng.uniform(0.0, 2.0);
        for (int c = 0; c < 3; ++c) {
            preds.class_logits(i, c) = rng.uniform(-20.0, 20.0);
        }
    }
    const ClassVocab vocab({"a", "b", "c"});
    const auto path = scratch().file("roundtrip.csv");
    write_predictions(preds, vocab, path);
    const PredictionFile reread = read_predictions(path);
    REQUIRE(reread.predictions.frames() == t);
    for (Eigen::Index i = 0; i < t; ++i) {
        CHECK(std::abs(reread.predictions.p_det[i] - preds.p_det[i]) <= 1e-9);
        CHECK(std::abs(reread.predictions.dur_reg[i] - preds.dur_reg[i]) <= 1e-9);
        for (int c = 0; c < 3; ++c) {
            CHECK(std::abs(reread.predictions.class_logits(i, c) -
                           preds.class_logits(i, c)) <= 1e-9);
        }
    }
}

TEST_CASE("prediction validation rejects bad rows") {
    const auto path = scratch().file("bad_preds.csv");
    SUBCASE("probability outside [0, 1]") {
        write_text(path,
                   "frame_rate,50.0\ndirection,forward\nclasses,zf\n"
                   "frame,p_det,dur_reg,logit_zf\n"
                   "0,1.5,0.1,0.0\n");
        CHECK_THROWS_AS(read_predictions(path), ValidationError);
    }
    SUBCASE("non-contiguous frame indices") {
        write_text(path,
                   "frame_rate,50.0\ndirection,forward\nclasses,zf\n"
                   "frame,p_det,dur_reg,logit_zf\n"
                   "0,0.5,0.1,0.0\n"
                   "2,0.5,0.1,0.0\n");
        CHECK_THROWS_AS(read_predictions(path), ValidationError);
    }
    SUBCASE("wrong column count") {
        write_text(path,
                   "frame_rate,50.0\ndirection,forward\nclasses,zf\n"
                   "frame,p_det,dur_reg,logit_zf\n"
                   "0,0.5,0.1\n");
        CHECK_THROWS_AS(read_predictions(path), ValidationError);
    }
    SUBCASE("bad direction") {
        write_text(path,
                   "frame_rate,50.0\ndirection,sideways\nclasses,zf\n"
                   "frame,p_det,dur_reg,logit_zf\n");
        CHECK_THROWS_AS(read_predictions(path), ValidationError);
    }
}

TEST_CASE("one second of silence is sixteen thousand zeros") {
    PcmClip clip;
    clip.sample_rate = 16000.0;
    clip.samples = Eigen::ArrayXd::Zero(16000);
    const auto path = scratch().file("silence.wav");
    write_wav(clip, path);
    const PcmClip reread = read_wav(path);
    CHECK(reread.sample_rate == 16000.0);
    REQUIRE(reread.samples.size() == 16000);
    CHECK((reread.samples == 0.0).all());
}

TEST_CASE("full-scale negative maps to minus one") {
    PcmClip clip;
    clip.sample_rate = 8000.0;
    clip.samples = Eigen::ArrayXd::Constant(4, -1.0);
    const auto path = scratch().file("fullscale.wav");
    write_wav(clip, path);
    const PcmClip reread = read_wav(path);
    CHECK(reread.samples[0] == -1.0);
}

TEST_CASE("wav io is sample-exact for 16-bit data") {
    Rng rng(73);
    PcmClip clip;
    clip.sample_rate = 16000.0;
    clip.samples.resize(2000);
    for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
        const auto value = static_cast<std::int16_t>(
            static_cast<std::int64_t>(rng.uniform_int(65536)) - 32768);
        clip.samples[i] = static_cast<double>(value) / 32768.0;
    }
    const auto path = scratch().file("exact.wav");
    write_wav(clip, path);
    const PcmClip reread = read_wav(path);
    REQUIRE(reread.samples.size() == clip.samples.size());
    CHECK((reread.samples == clip.samples).all());
}

TEST_CASE("stereo and non-PCM files are rejected") {
    // Hand-build a stereo header.
    PcmClip clip;
    clip.sample_rate = 8000.0;
    clip.samples = Eigen::ArrayXd::Zero(4);
    const auto path = scratch().file("stereo.wav");
    write_wav(clip, path);
    std::fstream file(path, std::ios::in | std::ios::out | std::ios::binary);
    file.seekp(22);
    const char two = 2;
    file.write(&two, 1);
    file.close();
    CHECK_THROWS_AS(read_wav(path), ValidationError);
}

TEST_CASE("malformed RIFF containers are io errors") {
    const auto path = scratch().file("garbage.wav");
    write_text(path, "this is not a wav file at all");
    CHECK_THROWS_AS(read_wav(path), IoError);
    CHECK_THROWS_AS(read_wav(scratch().file("missing.wav")), IoError);
}

TEST_CASE("extra riff chunks are skipped") {
    PcmClip clip;
    clip.sample_rate = 8000.0;
    clip.samples = Eigen::ArrayXd::Constant(4, 0.5);
    const auto path = scratch().file("chunky.wav");
    write_wav(clip, path);

    // Splice a LIST chunk between fmt and data.
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const std::string list = std::string("LIST") + std::string(1, 4) +
                             std::string(3, '\0') + "INFO";
    bytes.insert(36, list);
    const std::uint32_t riff_size = static_cast<std::uint32_t>(bytes.size() - 8);
    bytes[4] = static_cast<char>(riff_size & 0xFF);
    bytes[5] = static_cast<char>((riff_size >> 8) & 0xFF);
    bytes[6] = static_cast<char>((riff_size >> 16) & 0xFF);
    bytes[7] = static_cast<char>((riff_size >> 24) & 0xFF);
    write_text(path, bytes);

    const PcmClip reread = read_wav(path);
    REQUIRE(reread.samples.size() == 4);
    CHECK(reread.samples[0] == doctest::Approx(0.5).epsilon(1e-4));
}
