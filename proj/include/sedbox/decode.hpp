#pragma once

#include <vector>

#include <Eigen/Core>

#include "sedbox/predictions.hpp"
#include "sedbox/types.hpp"

namespace sedbox {

enum class UnmatchedPolicy { keep_forward, keep_both, drop };

struct DecodeConfig {
    // Low by default so that evaluation can sweep scores; deployments set
    // a task-specific threshold.
    double detection_threshold = 0.01;
    double softnms_sigma = 0.5;
    double softnms_score_floor = 0.005;
    double fusion_iou_threshold = 0.5;
    UnmatchedPolicy unmatched_policy = UnmatchedPolicy::keep_forward;

    // Throws ValidationError when a field is outside its range.
    void validate() const;
};

// Indices t with p[t] >= threshold, p[t] > p[t-1] and p[t] >= p[t+1];
// boundary frames compare only against the neighbor that exists. On a flat
// plateau only the leftmost index qualifies.
std::vector<Eigen::Index> find_peaks(const Eigen::Ref<const Eigen::ArrayXd>& p_det,
                                     double threshold);

// One box per detection peak. Forward predictions anchor the onset at the
// peak; backward predictions anchor the offset, with the onset clamped at
// zero. Peaks with non-positive regressed duration are discarded. Class is
// the argmax of the peak's logits (ties to the lowest id); score is the
// peak's detection probability.
std::vector<Box> boxes_from_predictions(const FramePredictions& preds,
                                        const DecodeConfig& cfg = {});

// Gaussian soft non-maximal suppression with per-class decay
// exp(-iou^2 / sigma). Boxes whose decayed score falls below the floor are
// dropped; survivors keep their decayed score. Output is sorted by onset.
std::vector<Box> soft_nms(std::vector<Box> boxes, const DecodeConfig& cfg = {});

}  // namespace sedbox
