#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sedbox/rng.hpp"
#include "sedbox/types.hpp"

namespace sedbox {

struct SynthSpec {
    double clip_duration = 60.0;
    int n_calls = 1;
    double target_overlap_ratio = 0.0;  // overlapping pairs per call
    // One duration per call when sized n_calls; otherwise calls draw from
    // this list uniformly with replacement.
    std::vector<double> call_durations;
    std::pair<double, double> snr_range_db{-15.0, 0.0};
    double tolerance = 0.005;  // accepted |achieved - target| after placement
    int max_retries = 100;
    std::string class_name = "call";

    void validate() const;
};

struct PcmClip {
    Eigen::ArrayXd samples;  // in [-1, 1]
    double sample_rate = 16000.0;

    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct Placement {
    EventSet events;               // normalized (sorted by onset)
    std::vector<int> call_index;   // per box: index into the duration list used
    double achieved_ratio = 0.0;
    int attempts = 0;              // placement attempts consumed (>= 1)
};

// Places n_calls events in [0, clip_duration]. Calls are appended one at a
// time: while the running overlap ratio sits below the target, the next
// call is placed across a uniformly chosen existing call; otherwise its
// onset is rejection-sampled until it overlaps nothing. When the target
// exceeds 0.2 the first 25% of calls are scattered uniformly to avoid
// clumping. Whole placements that miss the target by more than
// spec.tolerance are discarded and retried on the next RNG substream, up
// to max_retries; exhaustion raises GenerationError carrying the best
// ratio seen. Identical (spec, rng) inputs reproduce bit-identical output.
Placement place_events(const SynthSpec& spec, const Rng& rng);

// Overlapping pairs divided by event count. Throws on an empty set.
double achieved_overlap_ratio(const EventSet& events);

// Linear gain g such that 20*log10(rms(g * call) / rms(background)) equals
// snr_db. Throws when either signal has zero RMS.
double gain_for_snr(const PcmClip& call, const PcmClip& background_segment,
                    double snr_db);

struct MixResult {
    PcmClip mixture;
    std::size_t clipped_samples = 0;
};

// Adds each call into the background at its event's onset, scaled to an
// SNR drawn uniformly from spec.snr_range_db against the clean background
// under the call. calls[k] corresponds to events.boxes[k]. The result is
// hard-clipped to [-1, 1] with clipped samples counted.
MixResult mix(const PcmClip& background, std::span<const PcmClip> calls,
              const EventSet& events, const SynthSpec& spec, Rng& rng);

}  // namespace sedbox
