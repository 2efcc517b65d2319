#pragma once

#include <span>
#include <vector>

#include "sedbox/rng.hpp"

namespace sedbox {

// Inputs of the expected-overlap model: n vocalizations with the given
// durations scattered in a window of the given length, produced by a pool
// of identical sources.
struct OverlapModelInput {
    std::vector<double> durations;  // seconds, all positive
    double window = 60.0;           // seconds
    int sources = 8;

    // n equal durations chosen so the density sum(l)/window equals d.
    static OverlapModelInput from_density(int n, double density, double window,
                                          int sources);

    int n() const { return static_cast<int>(durations.size()); }
    double density() const;

    void validate() const;
};

// Probability that two independent uniformly placed vocalizations of the
// given durations overlap: (l1 + l2) / window. Throws when l1 + l2 exceeds
// the window (the model would yield a probability above one).
double pairwise_overlap_probability(double l1, double l2, double window);

// Expected overlapping pairs for uniform independent onsets, ignoring
// sources: density * (n - 1).
double expected_overlaps_uniform(const OverlapModelInput& input);

// Probability that two vocalizations come from different sources under the
// per-source Poisson count model: 1 - 1/sources - 1/n, clamped at zero.
double prob_different_sources(int n, int sources);

// Expected cross-source overlapping pairs:
// density * (n - 1) * max(0, 1 - 1/sources - 1/n).
double expected_overlaps(const OverlapModelInput& input);

struct MonteCarloResult {
    double mean = 0.0;
    double std_error = 0.0;  // standard error of the mean
};

// Simulates the model: per trial, onsets are uniform in [0, window - l_i]
// and each call takes a uniform source among the pool (a multinomial split
// of n, standing in for the Poisson model at fixed n). Counts strictly
// overlapping pairs, excluding same-source pairs unless cross_source_only
// is false. Trials run on per-trial RNG substreams, so results do not
// depend on batching.
MonteCarloResult monte_carlo_overlaps(const OverlapModelInput& input, long trials,
                                      const Rng& rng, bool cross_source_only = true);

enum class TDenominator {
    paper_sqrt_n_minus_1,  // t = mean / (sd / sqrt(N - 1))
    standard_sqrt_n,       // t = mean / (sd / sqrt(N))
};

struct PairedTResult {
    double mean_diff = 0.0;
    double sd_diff = 0.0;  // population standard deviation (divides by N)
    double t = 0.0;
    bool degenerate = false;  // sd was zero; t is 0 or +/-infinity
};

// Paired difference statistic over expected - observed. The standard
// deviation divides by N and the default t divides the standard deviation
// by sqrt(N - 1), matching the arithmetic used for the bundled reference counts digit for digit;
// the sqrt(N) alternative is available for comparison.
PairedTResult paired_t_statistic(std::span<const double> expected,
                                 std::span<const double> observed,
                                 TDenominator denominator = TDenominator::paper_sqrt_n_minus_1);

}  // namespace sedbox
