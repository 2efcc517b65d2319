#include "sedbox/types.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "sedbox/errors.hpp"

namespace sedbox {

bool overlaps(const Box& a, const Box& b) {
    return a.onset < b.offset() && b.onset < a.offset();
}

double iou(const Box& a, const Box& b) {
    const double intersection =
        std::min(a.offset(), b.offset()) - std::max(a.onset, b.onset);
    if (intersection <= 0.0) {
        return 0.0;
    }
    const double union_length =
        std::max(a.offset(), b.offset()) - std::min(a.onset, b.onset);
    return intersection / union_length;
}

ClassVocab::ClassVocab(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) {
        throw ValidationError("class vocabulary must contain at least one name");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& name : names_) {
        if (name.empty()) {
            throw ValidationError("class names must be non-empty");
        }
        if (!seen.insert(name).second) {
            throw ValidationError("duplicate class name '" + name + "'");
        }
    }
}

const std::string& ClassVocab::name(int class_id) const {
    if (class_id < 0 || class_id >= size()) {
        throw ValidationError("class id " + std::to_string(class_id) +
                              " outside vocabulary of size " + std::to_string(size()));
    }
    return names_[static_cast<std::size_t>(class_id)];
}

std::optional<int> ClassVocab::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

void EventSet::normalize() {
    std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
        return std::tie(a.onset, a.duration, a.class_id) <
               std::tie(b.onset, b.duration, b.class_id);
    });
}

void EventSet::validate() const {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const Box& box = boxes[i];
        const std::string where = "box " + std::to_string(i);
        if (!(box.duration > 0.0) || !std::isfinite(box.duration)) {
            throw ValidationError(where + ": duration must be positive and finite");
        }
        if (box.onset < 0.0 || !std::isfinite(box.onset)) {
            throw ValidationError(where + ": onset must be non-negative and finite");
        }
        if (box.offset() > clip_duration) {
            throw ValidationError(where + ": offset " + std::to_string(box.offset()) +
                                  " exceeds clip duration " + std::to_string(clip_duration));
        }
        if (box.class_id < 0 || box.class_id >= vocab.size()) {
            throw ValidationError(where + ": class id outside vocabulary");
        }
        if (box.score < 0.0 || box.score > 1.0) {
            throw ValidationError(where + ": score must lie in [0, 1]");
        }
    }
}

std::size_t count_pairwise_overlaps(std::span<const double> onsets,
                                    std::span<const double> offsets) {
    const std::size_t n = onsets.size();
    std::vector<std::pair<double, double>> intervals;
    intervals.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        intervals.emplace_back(onsets[i], offsets[i]);
    }
    std::sort(intervals.begin(), intervals.end());

    std::vector<double> sorted_onsets(n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted_onsets[i] = intervals[i].first;
    }

    // With onsets ascending, interval i strictly overlaps exactly those
    // later intervals whose onset lies below offset_i.
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto first_clear = std::lower_bound(
            sorted_onsets.begin() + static_cast<std::ptrdiff_t>(i) + 1,
            sorted_onsets.end(), intervals[i].second);
        count += static_cast<std::size_t>(
            first_clear - (sorted_onsets.begin() + static_cast<std::ptrdiff_t>(i) + 1));
    }
    return count;
}

std::size_t count_pairwise_overlaps(const EventSet& events,
                                    std::span<const int> source_labels) {
    const std::size_t n = events.boxes.size();
    std::vector<double> onsets(n);
    std::vector<double> offsets(n);
    for (std::size_t i = 0; i < n; ++i) {
        onsets[i] = events.boxes[i].onset;
        offsets[i] = events.boxes[i].offset();
    }
    const std::size_t total = count_pairwise_overlaps(onsets, offsets);
    if (source_labels.empty()) {
        return total;
    }
    if (source_labels.size() != n) {
        throw ValidationError("source labels must be parallel to the event list");
    }

    // Cross-source count = all pairs minus the pairs within each source.
    std::unordered_map<int, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < n; ++i) {
        by_source[source_labels[i]].push_back(i);
    }
    std::size_t within = 0;
    std::vector<double> sub_onsets;
    std::vector<double> sub_offsets;
    for (const auto& [label, members] : by_source) {
        if (members.size() < 2) {
            continue;
        }
        sub_onsets.clear();
        sub_offsets.clear();
        for (std::size_t i : members) {
            sub_onsets.push_back(onsets[i]);
            sub_offsets.push_back(offsets[i]);
        }
        within += count_pairwise_overlaps(sub_onsets, sub_offsets);
    }
    return total - within;
}

}  // namespace sedbox
