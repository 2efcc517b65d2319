#include "sedbox/predictions.hpp"

#include <string>

#include "sedbox/errors.hpp"

namespace sedbox {

void FramePredictions::validate() const {
    if (!(frame_rate > 0.0)) {
        throw ValidationError("frame rate must be positive");
    }
    const Eigen::Index t = p_det.size();
    if (dur_reg.size() != t || class_logits.rows() != t) {
        throw ValidationError("prediction arrays disagree on frame count: p_det " +
                              std::to_string(t) + ", dur_reg " +
                              std::to_string(dur_reg.size()) + ", class_logits " +
                              std::to_string(class_logits.rows()));
    }
    if (class_logits.cols() < 1) {
        throw ValidationError("at least one class logit column is required");
    }
    for (Eigen::Index i = 0; i < t; ++i) {
        if (p_det[i] < 0.0 || p_det[i] > 1.0) {
            throw ValidationError("p_det[" + std::to_string(i) + "] = " +
                                  std::to_string(p_det[i]) + " outside [0, 1]");
        }
        if (dur_reg[i] < 0.0) {
            throw ValidationError("dur_reg[" + std::to_string(i) + "] is negative");
        }
    }
}

}  // namespace sedbox
