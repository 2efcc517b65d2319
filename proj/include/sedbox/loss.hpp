#pragma once

#include <vector>

#include <Eigen/Core>

#include "sedbox/predictions.hpp"
#include "sedbox/types.hpp"

namespace sedbox {

struct LossConfig {
    double alpha = 2.0;    // exponent on the predicted probability terms
    double beta = 4.0;     // penalty reduction near onsets
    double s = 6.0;        // Gaussian sharpness of the detection target
    double lambda = 1.0;   // weight of the duration regression term
    double rho = 1.0;      // weight of the classification term
    double epsilon = 1e-7; // probability clamp applied before logarithms
};

// Per-frame training targets built from an EventSet. p_target is exactly 1
// at every onset frame; dur_target and class_target are parallel to
// onset_frames.
struct TargetSeries {
    double frame_rate = 50.0;
    Eigen::ArrayXd p_target;
    std::vector<int> onset_frames;   // strictly increasing
    Eigen::ArrayXd dur_target;       // seconds, one entry per onset frame
    std::vector<int> class_target;   // one entry per onset frame

    Eigen::Index frames() const { return p_target.size(); }
};

// Smooths every event onset with a Gaussian of width duration^2/s (in
// frames) and takes the pointwise maximum across events. Onsets are rounded
// to the nearest frame; when two events collide on a frame the longer one
// keeps the duration and class targets. Throws ValidationError when an
// event rounds outside [0, num_frames).
TargetSeries build_targets(const EventSet& events, double frame_rate,
                           Eigen::Index num_frames, const LossConfig& cfg = {});

struct LossValue {
    double loss = 0.0;
    Eigen::ArrayXd grad;
};

struct MatrixLossValue {
    double loss = 0.0;
    Eigen::MatrixXd grad;
};

// Penalty-reduced focal detection loss over all frames, averaged by frame
// count, with the exact derivative with respect to each predicted
// probability. Probabilities are clamped to [epsilon, 1 - epsilon] before
// logs; the gradient is zero where the clamp is active.
LossValue detection_loss(const Eigen::Ref<const Eigen::ArrayXd>& p_hat,
                         const TargetSeries& targets, const LossConfig& cfg = {});

// Mean L1 duration error over onset frames only; zero loss and gradient
// when there are no onsets. The subgradient at exact equality is zero.
LossValue regression_loss(const Eigen::Ref<const Eigen::ArrayXd>& dur_reg,
                          const TargetSeries& targets, const LossConfig& cfg = {});

// Mean categorical cross-entropy over onset frames only.
MatrixLossValue classification_loss(
    const Eigen::Ref<const Eigen::MatrixXd>& class_logits,
    const TargetSeries& targets, const LossConfig& cfg = {});

struct TotalLoss {
    double loss = 0.0;
    double detection = 0.0;
    double regression = 0.0;
    double classification = 0.0;
    Eigen::ArrayXd d_p_det;
    Eigen::ArrayXd d_dur_reg;
    Eigen::MatrixXd d_class_logits;
};

// detection + lambda * regression + rho * classification, with gradients
// for all three prediction heads.
TotalLoss total_loss(const FramePredictions& preds, const TargetSeries& targets,
                     const LossConfig& cfg = {});

}  // namespace sedbox
