#include "sedbox/decode.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "sedbox/errors.hpp"

namespace sedbox {

void DecodeConfig::validate() const {
    if (detection_threshold < 0.0 || detection_threshold > 1.0) {
        throw ValidationError("detection threshold must lie in [0, 1]");
    }
    if (!(softnms_sigma > 0.0)) {
        throw ValidationError("soft-NMS sigma must be positive");
    }
    if (softnms_score_floor < 0.0 || softnms_score_floor > 1.0) {
        throw ValidationError("soft-NMS score floor must lie in [0, 1]");
    }
    if (!(fusion_iou_threshold > 0.0) || fusion_iou_threshold > 1.0) {
        throw ValidationError("fusion IoU threshold must lie in (0, 1]");
    }
}

std::vector<Eigen::Index> find_peaks(const Eigen::Ref<const Eigen::ArrayXd>& p_det,
                                     double threshold) {
    std::vector<Eigen::Index> peaks;
    const Eigen::Index n = p_det.size();
    for (Eigen::Index t = 0; t < n; ++t) {
        if (p_det[t] < threshold) {
            continue;
        }
        if (t > 0 && !(p_det[t] > p_det[t - 1])) {
            continue;
        }
        if (t + 1 < n && !(p_det[t] >= p_det[t + 1])) {
            continue;
        }
        peaks.push_back(t);
    }
    return peaks;
}

std::vector<Box> boxes_from_predictions(const FramePredictions& preds,
                                        const DecodeConfig& cfg) {
    cfg.validate();
    preds.validate();

    std::vector<Box> boxes;
    for (Eigen::Index peak : find_peaks(preds.p_det, cfg.detection_threshold)) {
        const double duration = preds.dur_reg[peak];
        if (duration <= 0.0) {
            continue;
        }
        Box box;
        box.score = preds.p_det[peak];
        const double anchor = static_cast<double>(peak) / preds.frame_rate;
        if (preds.direction == Direction::forward) {
            box.onset = anchor;
            box.duration = duration;
        } else {
            box.onset = std::max(0.0, anchor - duration);
            box.duration = anchor - box.onset;
            if (box.duration <= 0.0) {
                continue;
            }
        }
        int best = 0;
        for (Eigen::Index c = 1; c < preds.classes(); ++c) {
            if (preds.class_logits(peak, c) > preds.class_logits(peak, best)) {
                best = static_cast<int>(c);
            }
        }
        box.class_id = best;
        boxes.push_back(box);
    }
    return boxes;
}

namespace {

bool selection_order(const Box& a, const Box& b) {
    // Highest score first; onset, duration and class break exact ties.
    return std::tie(b.score, a.onset, a.duration, a.class_id) <
           std::tie(a.score, b.onset, b.duration, b.class_id);
}

}  // namespace

std::vector<Box> soft_nms(std::vector<Box> boxes, const DecodeConfig& cfg) {
    cfg.validate();

    std::vector<Box> remaining = std::move(boxes);
    std::vector<Box> kept;
    kept.reserve(remaining.size());

    while (!remaining.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < remaining.size(); ++i) {
            if (selection_order(remaining[i], remaining[best])) {
                best = i;
            }
        }
        const Box chosen = remaining[best];
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
        kept.push_back(chosen);

        std::vector<Box> survivors;
        survivors.reserve(remaining.size());
        for (Box& other : remaining) {
            if (other.class_id == chosen.class_id) {
                const double overlap = iou(chosen, other);
                if (overlap > 0.0) {
                    other.score *= std::exp(-overlap * overlap / cfg.softnms_sigma);
                }
            }
            if (other.score >= cfg.softnms_score_floor) {
                survivors.push_back(other);
            }
        }
        remaining = std::move(survivors);
    }

    std::sort(kept.begin(), kept.end(), [](const Box& a, const Box& b) {
        return std::tie(a.onset, a.duration, a.class_id, a.score) <
               std::tie(b.onset, b.duration, b.class_id, b.score);
    });
    return kept;
}

}  // namespace sedbox
