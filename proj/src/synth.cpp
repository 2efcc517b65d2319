#include "sedbox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "sedbox/errors.hpp"

namespace sedbox {

void SynthSpec::validate() const {
    if (!(clip_duration > 0.0)) {
        throw ValidationError("clip duration must be positive");
    }
    if (n_calls < 1) {
        throw ValidationError("at least one call is required");
    }
    if (target_overlap_ratio < 0.0 || target_overlap_ratio > 1.0) {
        throw ValidationError("target overlap ratio must lie in [0, 1]");
    }
    if (call_durations.empty()) {
        throw ValidationError("call duration list must be non-empty");
    }
    for (double d : call_durations) {
        if (!(d > 0.0)) {
            throw ValidationError("call durations must be positive");
        }
    }
    if (snr_range_db.first > snr_range_db.second) {
        throw ValidationError("SNR range low bound exceeds high bound");
    }
    if (tolerance < 0.0) {
        throw ValidationError("tolerance must be non-negative");
    }
    if (max_retries < 1) {
        throw ValidationError("at least one retry must be allowed");
    }
    if (class_name.empty()) {
        throw ValidationError("class name must be non-empty");
    }
}

namespace {

constexpr int kRejectionAttempts = 1000;

struct PlacedCall {
    double onset;
    double duration;
    int call_index;

    double offset() const { return onset + duration; }
};

bool overlaps_interval(const PlacedCall& call, double onset, double offset) {
    return call.onset < offset && onset < call.offset();
}

struct AttemptResult {
    bool complete = false;
    std::vector<PlacedCall> calls;
    std::size_t overlap_pairs = 0;
};

AttemptResult attempt_placement(const SynthSpec& spec,
                                std::span<const double> durations,
                                std::span<const int> call_indices, Rng& rng) {
    const int n = spec.n_calls;
    const int seed_count =
        spec.target_overlap_ratio > 0.2
            ? static_cast<int>(std::ceil(0.25 * static_cast<double>(n)))
            : 0;

    AttemptResult result;
    result.calls.reserve(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        const double dur = durations[i];
        const double max_onset = spec.clip_duration - dur;
        double onset = 0.0;
        if (i < seed_count || result.calls.empty()) {
            onset = rng.uniform(0.0, max_onset);
        } else {
            const double ratio = static_cast<double>(result.overlap_pairs) /
                                 static_cast<double>(result.calls.size());
            if (ratio < spec.target_overlap_ratio) {
                // Straddle a uniformly chosen existing call; clamping back
                // into the clip preserves the overlap.
                const PlacedCall& anchor =
                    result.calls[rng.uniform_int(result.calls.size())];
                onset = rng.uniform(anchor.onset - dur, anchor.offset());
                onset = std::clamp(onset, 0.0, max_onset);
            } else {
                bool found = false;
                for (int tries = 0; tries < kRejectionAttempts && !found; ++tries) {
                    onset = rng.uniform(0.0, max_onset);
                    found = std::none_of(
                        result.calls.begin(), result.calls.end(),
                        [&](const PlacedCall& call) {
                            return overlaps_interval(call, onset, onset + dur);
                        });
                }
                if (!found) {
                    return result;  // incomplete; caller retries
                }
            }
        }

        const double offset = onset + dur;
        for (const PlacedCall& call : result.calls) {
            if (overlaps_interval(call, onset, offset)) {
                ++result.overlap_pairs;
            }
        }
        result.calls.push_back(PlacedCall{onset, dur, call_indices[i]});
    }
    result.complete = true;
    return result;
}

}  // namespace

Placement place_events(const SynthSpec& spec, const Rng& rng) {
    spec.validate();
    const int n = spec.n_calls;
    const bool fixed_durations =
        spec.call_durations.size() == static_cast<std::size_t>(n);

    if (fixed_durations) {
        const double total =
            std::accumulate(spec.call_durations.begin(), spec.call_durations.end(), 0.0);
        if (total >= spec.clip_duration) {
            throw GenerationError(
                "total call duration " + std::to_string(total) +
                    " s does not fit the " + std::to_string(spec.clip_duration) +
                    " s clip",
                0.0);
        }
    }

    double best_gap = std::numeric_limits<double>::infinity();
    double best_ratio = 0.0;

    std::vector<double> durations(static_cast<std::size_t>(n));
    std::vector<int> call_indices(static_cast<std::size_t>(n));

    for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
        Rng stream = rng.substream(static_cast<std::uint64_t>(attempt));

        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const int pick =
                fixed_durations
                    ? i
                    : static_cast<int>(stream.uniform_int(spec.call_durations.size()));
            call_indices[static_cast<std::size_t>(i)] = pick;
            durations[static_cast<std::size_t>(i)] =
                spec.call_durations[static_cast<std::size_t>(pick)];
            total += durations[static_cast<std::size_t>(i)];
        }
        if (total >= spec.clip_duration) {
            continue;
        }

        AttemptResult result = attempt_placement(spec, durations, call_indices, stream);
        if (!result.complete) {
            continue;
        }

        const double achieved = static_cast<double>(result.overlap_pairs) /
                                static_cast<double>(n);
        const double gap = std::abs(achieved - spec.target_overlap_ratio);
        if (gap < best_gap) {
            best_gap = gap;
            best_ratio = achieved;
        }
        if (gap > spec.tolerance) {
            continue;
        }

        Placement placement;
        placement.attempts = attempt + 1;
        placement.achieved_ratio = achieved;
        placement.events.clip_duration = spec.clip_duration;
        placement.events.vocab = ClassVocab({spec.class_name});

        std::sort(result.calls.begin(), result.calls.end(),
                  [](const PlacedCall& a, const PlacedCall& b) {
                      return std::tie(a.onset, a.duration, a.call_index) <
                             std::tie(b.onset, b.duration, b.call_index);
                  });
        for (const PlacedCall& call : result.calls) {
            Box box;
            box.onset = call.onset;
            box.duration = call.duration;
            box.class_id = 0;
            box.score = 1.0;
            placement.events.boxes.push_back(box);
            placement.call_index.push_back(call.call_index);
        }
        return placement;
    }

    throw GenerationError(
        "no placement within " + std::to_string(spec.tolerance) + " of ratio " +
            std::to_string(spec.target_overlap_ratio) + " after " +
            std::to_string(spec.max_retries) + " retries; best achieved ratio " +
            std::to_string(best_ratio),
        best_ratio);
}

double achieved_overlap_ratio(const EventSet& events) {
    if (events.boxes.empty()) {
        throw ValidationError("overlap ratio is undefined for an empty event set");
    }
    return static_cast<double>(count_pairwise_overlaps(events)) /
           static_cast<double>(events.boxes.size());
}

namespace {

double rms(const Eigen::ArrayXd& samples) {
    return std::sqrt(samples.square().mean());
}

}  // namespace

double gain_for_snr(const PcmClip& call, const PcmClip& background_segment,
                    double snr_db) {
    if (call.samples.size() == 0 || background_segment.samples.size() == 0) {
        throw ValidationError("audio clips must be non-empty");
    }
    if (call.sample_rate != background_segment.sample_rate) {
        throw ValidationError("call and background sample rates differ");
    }
    const double rms_call = rms(call.samples);
    const double rms_background = rms(background_segment.samples);
    if (rms_call == 0.0 || rms_background == 0.0) {
        throw ValidationError("degenerate audio: zero RMS");
    }
    return rms_background / rms_call * std::pow(10.0, snr_db / 20.0);
}

MixResult mix(const PcmClip& background, std::span<const PcmClip> calls,
              const EventSet& events, const SynthSpec& spec, Rng& rng) {
    spec.validate();
    if (calls.size() != events.boxes.size()) {
        throw ValidationError("calls must correspond 1:1 with events");
    }
    if (background.samples.size() == 0) {
        throw ValidationError("background must be non-empty");
    }

    MixResult result;
    result.mixture.sample_rate = background.sample_rate;
    result.mixture.samples = background.samples;

    for (std::size_t k = 0; k < calls.size(); ++k) {
        const PcmClip& call = calls[k];
        if (call.sample_rate != background.sample_rate) {
            throw ValidationError("call " + std::to_string(k) +
                                  ": sample rate differs from the background");
        }
        const Eigen::Index start = static_cast<Eigen::Index>(
            std::llround(events.boxes[k].onset * background.sample_rate));
        const Eigen::Index length = call.samples.size();
        if (start < 0 || start + length > background.samples.size()) {
            throw ValidationError("call " + std::to_string(k) +
                                  " extends past the background track");
        }

        PcmClip segment;
        segment.sample_rate = background.sample_rate;
        segment.samples = background.samples.segment(start, length);

        const double snr = rng.uniform(spec.snr_range_db.first, spec.snr_range_db.second);
        const double gain = gain_for_snr(call, segment, snr);
        result.mixture.samples.segment(start, length) += gain * call.samples;
    }

    result.clipped_samples = static_cast<std::size_t>(
        (result.mixture.samples > 1.0 || result.mixture.samples < -1.0).count());
    result.mixture.samples = result.mixture.samples.min(1.0).max(-1.0);
    return result;
}

}  // namespace sedbox
