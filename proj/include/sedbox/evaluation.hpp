#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sedbox/types.hpp"

namespace sedbox {

enum class MatchingMode { greedy_by_score, max_cardinality };

// How the 1001-interval average precision is discretized: over evenly
// spaced recall levels (default), or over evenly spaced score thresholds
// (sensitivity variant).
enum class ApInterpolation { recall_levels, score_thresholds };

struct EvalConfig {
    std::vector<double> iou_thresholds{0.5, 0.8};  // ascending
    int num_points = 1001;
    MatchingMode matching_mode = MatchingMode::greedy_by_score;
    ApInterpolation ap_interpolation = ApInterpolation::recall_levels;

    void validate() const;
};

// Matches predictions to ground truth within one recording. Greedy mode
// walks predictions by descending score and gives each the unmatched
// same-class truth of highest IoU at or above the threshold;
// max-cardinality mode solves the same edge set as a bipartite matching
// problem. Each truth box matches at most one prediction. Returns
// (pred index, truth index) pairs sorted by prediction index.
std::vector<std::pair<int, int>> match_events(
    const EventSet& preds, const EventSet& truth, double iou_threshold,
    MatchingMode mode = MatchingMode::greedy_by_score);

// Average precision for one class, pooling predictions across recordings
// and ranking them by score. Returns nullopt when the class never occurs
// in the ground truth.
std::optional<double> average_precision(std::span<const EventSet> preds,
                                        std::span<const EventSet> truths,
                                        int class_id, double iou_threshold,
                                        const EvalConfig& cfg = {});

struct PrPoint {
    double score = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct ClassResult {
    int class_id = 0;
    std::optional<double> ap;     // absent when the class has no truth boxes
    std::size_t truth_count = 0;
    std::size_t pred_count = 0;
    std::size_t matched = 0;
    std::vector<PrPoint> pr_curve;
};

struct ThresholdResult {
    double iou_threshold = 0.0;
    double map = 0.0;  // unweighted mean over classes present in truth
    std::vector<ClassResult> per_class;
};

struct EvalReport {
    std::vector<ThresholdResult> thresholds;
};

// Full evaluation at every configured IoU threshold. preds and truths are
// parallel per-recording lists sharing one vocabulary.
EvalReport evaluate(std::span<const EventSet> preds, std::span<const EventSet> truths,
                    const EvalConfig& cfg = {});

}  // namespace sedbox
