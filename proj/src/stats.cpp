#include "sedbox/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sedbox/errors.hpp"

namespace sedbox {

OverlapModelInput OverlapModelInput::from_density(int n, double density,
                                                  double window, int sources) {
    if (n < 1) {
        throw ValidationError("vocalization count must be at least 1");
    }
    OverlapModelInput input;
    input.window = window;
    input.sources = sources;
    input.durations.assign(static_cast<std::size_t>(n),
                           density * window / static_cast<double>(n));
    input.validate();
    return input;
}

double OverlapModelInput::density() const {
    return std::accumulate(durations.begin(), durations.end(), 0.0) / window;
}

void OverlapModelInput::validate() const {
    if (durations.empty()) {
        throw ValidationError("duration list must be non-empty");
    }
    for (double d : durations) {
        if (!(d > 0.0)) {
            throw ValidationError("durations must be positive");
        }
    }
    if (!(window > 0.0)) {
        throw ValidationError("window length must be positive");
    }
    if (sources < 2) {
        throw ValidationError("overlaps require at least two sources");
    }
}

double pairwise_overlap_probability(double l1, double l2, double window) {
    if (!(l1 > 0.0) || !(l2 > 0.0) || !(window > 0.0)) {
        throw ValidationError("durations and window must be positive");
    }
    if (l1 + l2 > window) {
        throw ValidationError("combined duration " + std::to_string(l1 + l2) +
                              " s exceeds the window; the overlap probability "
                              "would exceed one");
    }
    return (l1 + l2) / window;
}

double expected_overlaps_uniform(const OverlapModelInput& input) {
    input.validate();
    return input.density() * static_cast<double>(input.n() - 1);
}

double prob_different_sources(int n, int sources) {
    if (n < 1) {
        throw ValidationError("vocalization count must be at least 1");
    }
    if (sources < 2) {
        throw ValidationError("overlaps require at least two sources");
    }
    return std::max(0.0, 1.0 - 1.0 / static_cast<double>(sources) -
                             1.0 / static_cast<double>(n));
}

double expected_overlaps(const OverlapModelInput& input) {
    input.validate();
    return expected_overlaps_uniform(input) *
           prob_different_sources(input.n(), input.sources);
}

namespace {

// Overlapping pairs among intervals given as (onset, offset) sorted by
// onset: interval i overlaps exactly the later intervals whose onset lies
// strictly below offset_i.
std::size_t count_sorted_pairs(const std::vector<std::pair<double, double>>& intervals) {
    const std::size_t n = intervals.size();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cutoff = intervals[i].second;
        std::size_t lo = i + 1;
        std::size_t hi = n;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (intervals[mid].first < cutoff) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        count += lo - (i + 1);
    }
    return count;
}

}  // namespace

MonteCarloResult monte_carlo_overlaps(const OverlapModelInput& input, long trials,
                                      const Rng& rng, bool cross_source_only) {
    input.validate();
    if (trials < 1) {
        throw ValidationError("at least one trial is required");
    }
    for (double d : input.durations) {
        if (d > input.window) {
            throw ValidationError("duration " + std::to_string(d) +
                                  " s does not fit the window");
        }
    }

    const std::size_t n = input.durations.size();
    const int sources = input.sources;

    std::vector<std::pair<double, double>> all(n);
    std::vector<std::vector<std::pair<double, double>>> per_source(
        static_cast<std::size_t>(sources));
    std::vector<double> counts(static_cast<std::size_t>(trials));

    for (long trial = 0; trial < trials; ++trial) {
        Rng stream = rng.substream(static_cast<std::uint64_t>(trial));
        for (auto& bucket : per_source) {
            bucket.clear();
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double onset = stream.uniform() * (input.window - input.durations[i]);
            all[i] = {onset, onset + input.durations[i]};
            if (cross_source_only) {
                const auto source = stream.uniform_int(static_cast<std::uint64_t>(sources));
                per_source[static_cast<std::size_t>(source)].push_back(all[i]);
            }
        }
        std::sort(all.begin(), all.end());
        std::size_t pairs = count_sorted_pairs(all);
        if (cross_source_only) {
            for (auto& bucket : per_source) {
                if (bucket.size() > 1) {
                    std::sort(bucket.begin(), bucket.end());
                    pairs -= count_sorted_pairs(bucket);
                }
            }
        }
        counts[static_cast<std::size_t>(trial)] = static_cast<double>(pairs);
    }

    MonteCarloResult result;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    result.mean = total / static_cast<double>(trials);
    if (trials > 1) {
        double ss = 0.0;
        for (double c : counts) {
            const double d = c - result.mean;
            ss += d * d;
        }
        const double variance = ss / static_cast<double>(trials - 1);
        result.std_error = std::sqrt(variance / static_cast<double>(trials));
    }
    return result;
}

PairedTResult paired_t_statistic(std::span<const double> expected,
                                 std::span<const double> observed,
                                 TDenominator denominator) {
    if (expected.size() != observed.size()) {
        throw ValidationError("expected and observed lists differ in length");
    }
    const std::size_t n = expected.size();
    if (n < 2) {
        throw ValidationError("at least two paired values are required");
    }

    PairedTResult result;
    for (std::size_t i = 0; i < n; ++i) {
        result.mean_diff += expected[i] - observed[i];
    }
    result.mean_diff /= static_cast<double>(n);

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (expected[i] - observed[i]) - result.mean_diff;
        ss += d * d;
    }
    result.sd_diff = std::sqrt(ss / static_cast<double>(n));

    const double root = denominator == TDenominator::paper_sqrt_n_minus_1
                            ? std::sqrt(static_cast<double>(n - 1))
                            : std::sqrt(static_cast<double>(n));
    if (result.sd_diff == 0.0) {
        result.degenerate = true;
        result.t = result.mean_diff == 0.0
                       ? 0.0
                       : std::copysign(std::numeric_limits<double>::infinity(),
                                       result.mean_diff);
    } else {
        result.t = result.mean_diff / (result.sd_diff / root);
    }
    return result;
}

}  // namespace sedbox
