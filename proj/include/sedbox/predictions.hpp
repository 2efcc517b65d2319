#pragma once

#include <Eigen/Core>

namespace sedbox {

// Forward predictions score event onsets; backward predictions score event
// offsets, with the regression giving how long ago the event started.
enum class Direction { forward, backward };

// Per-frame model outputs for one recording and one direction, at a fixed
// frame rate. All arrays share the frame count T; class_logits is T x C.
struct FramePredictions {
    double frame_rate = 50.0;       // frames per second
    Eigen::ArrayXd p_det;           // detection probability, in [0, 1]
    Eigen::ArrayXd dur_reg;         // regressed duration in seconds, >= 0
    Eigen::MatrixXd class_logits;   // T x C
    Direction direction = Direction::forward;

    Eigen::Index frames() const { return p_det.size(); }
    Eigen::Index classes() const { return class_logits.cols(); }

    // Throws ValidationError on shape mismatch or out-of-range entries.
    void validate() const;
};

}  // namespace sedbox
