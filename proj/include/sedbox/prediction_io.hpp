#pragma once

#include <filesystem>

#include "sedbox/predictions.hpp"
#include "sedbox/types.hpp"

namespace sedbox {

// Frame predictions plus the class names its logit columns refer to; the
// hand-off format between an encoder and this toolkit.
struct PredictionFile {
    FramePredictions predictions;
    ClassVocab vocab;
};

// CSV layout: three metadata lines (frame_rate, direction, classes joined
// by ';'), a column header, then one row per frame with contiguous indices
// from zero: frame, p_det, dur_reg, one logit per class. Values are
// written with nine decimal places, so a round trip agrees to 1e-9 per
// field.
PredictionFile read_predictions(const std::filesystem::path& path);

void write_predictions(const FramePredictions& preds, const ClassVocab& vocab,
                       const std::filesystem::path& path);

}  // namespace sedbox
