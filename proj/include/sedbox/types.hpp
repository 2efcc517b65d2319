#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sedbox {

// One detected or annotated event on the time axis. Ground-truth
// annotations carry score 1.0.
struct Box {
    double onset = 0.0;     // seconds, >= 0
    double duration = 0.0;  // seconds, > 0
    int class_id = 0;
    double score = 1.0;     // in [0, 1]

    double offset() const { return onset + duration; }
};

// Strict interval overlap; intervals touching only at an endpoint do not
// overlap, consistent with their IoU being zero.
bool overlaps(const Box& a, const Box& b);

// Intersection-over-union of the two time intervals. Class labels are
// ignored. 1.0 for identical intervals, 0.0 when disjoint or touching.
double iou(const Box& a, const Box& b);

class ClassVocab {
  public:
    ClassVocab() = default;
    // Names must be unique and non-empty; throws ValidationError otherwise.
    explicit ClassVocab(std::vector<std::string> names);

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int class_id) const;
    std::optional<int> index_of(std::string_view name) const;
    const std::vector<std::string>& names() const { return names_; }

    bool operator==(const ClassVocab&) const = default;

  private:
    std::vector<std::string> names_;
};

// Ordered collection of events for one recording.
struct EventSet {
    std::vector<Box> boxes;
    double clip_duration = 0.0;
    ClassVocab vocab;

    // Sorts boxes by (onset, duration, class_id); parsers and generators
    // produce normalized sets.
    void normalize();

    // Checks box invariants, class ids against the vocab, and containment
    // in [0, clip_duration]; throws ValidationError naming the first
    // offending box.
    void validate() const;
};

// Number of unordered interval pairs that strictly overlap. Inputs are
// parallel arrays of interval starts and ends (end > start), in any order.
std::size_t count_pairwise_overlaps(std::span<const double> onsets,
                                    std::span<const double> offsets);

// Same count over an EventSet. When source_labels is non-empty it must be
// parallel to events.boxes, and pairs sharing a label are excluded.
std::size_t count_pairwise_overlaps(const EventSet& events,
                                    std::span<const int> source_labels = {});

}  // namespace sedbox
