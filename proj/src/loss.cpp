#include "sedbox/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sedbox/errors.hpp"

namespace sedbox {

namespace {

void require_frames(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        throw ValidationError(std::string(what) + " has " + std::to_string(got) +
                              " frames but targets have " + std::to_string(want));
    }
}

}  // namespace

TargetSeries build_targets(const EventSet& events, double frame_rate,
                           Eigen::Index num_frames, const LossConfig& cfg) {
    if (!(frame_rate > 0.0)) {
        throw ValidationError("frame rate must be positive");
    }
    if (num_frames < 0) {
        throw ValidationError("frame count must be non-negative");
    }

    TargetSeries targets;
    targets.frame_rate = frame_rate;
    targets.p_target = Eigen::ArrayXd::Zero(num_frames);

    struct OnsetEntry {
        double duration;
        int class_id;
    };
    std::map<int, OnsetEntry> onsets;

    for (std::size_t i = 0; i < events.boxes.size(); ++i) {
        const Box& box = events.boxes[i];
        const long frame = std::lround(box.onset * frame_rate);
        if (frame < 0 || frame >= num_frames) {
            throw ValidationError("event " + std::to_string(i) + " (onset " +
                                  std::to_string(box.onset) + " s) maps to frame " +
                                  std::to_string(frame) + " outside [0, " +
                                  std::to_string(num_frames) + ")");
        }
        const int onset_frame = static_cast<int>(frame);
        const double dur_frames = box.duration * frame_rate;
        const double inv_width = cfg.s / (dur_frames * dur_frames);

        // exp underflows to zero beyond this radius; skip those frames.
        const double radius = std::sqrt(745.0 / inv_width);
        const Eigen::Index lo =
            std::max<Eigen::Index>(0, onset_frame - static_cast<Eigen::Index>(radius) - 1);
        const Eigen::Index hi = std::min<Eigen::Index>(
            num_frames - 1, onset_frame + static_cast<Eigen::Index>(radius) + 1);
        for (Eigen::Index t = lo; t <= hi; ++t) {
            const double dt = static_cast<double>(t) - static_cast<double>(onset_frame);
            const double value = std::exp(-dt * dt * inv_width);
            targets.p_target[t] = std::max(targets.p_target[t], value);
        }

        auto [it, inserted] = onsets.try_emplace(onset_frame, OnsetEntry{box.duration, box.class_id});
        if (!inserted && box.duration > it->second.duration) {
            it->second = OnsetEntry{box.duration, box.class_id};
        }
    }

    targets.onset_frames.reserve(onsets.size());
    targets.dur_target.resize(static_cast<Eigen::Index>(onsets.size()));
    targets.class_target.reserve(onsets.size());
    Eigen::Index k = 0;
    for (const auto& [frame, entry] : onsets) {
        targets.onset_frames.push_back(frame);
        targets.dur_target[k++] = entry.duration;
        targets.class_target.push_back(entry.class_id);
        targets.p_target[frame] = 1.0;  // exp(0) already, kept exact
    }
    return targets;
}

LossValue detection_loss(const Eigen::Ref<const Eigen::ArrayXd>& p_hat,
                         const TargetSeries& targets, const LossConfig& cfg) {
    const Eigen::Index t_count = targets.frames();
    require_frames(p_hat.size(), t_count, "p_hat");

    LossValue out;
    out.grad = Eigen::ArrayXd::Zero(t_count);
    if (t_count == 0) {
        return out;
    }

    std::vector<bool> is_onset(static_cast<std::size_t>(t_count), false);
    for (int frame : targets.onset_frames) {
        is_onset[static_cast<std::size_t>(frame)] = true;
    }

    const double lo = cfg.epsilon;
    const double hi = 1.0 - cfg.epsilon;
    double total = 0.0;
    for (Eigen::Index t = 0; t < t_count; ++t) {
        const double raw = p_hat[t];
        const double q = std::clamp(raw, lo, hi);
        const bool interior = raw > lo && raw < hi;
        double term;
        double dterm;
        if (is_onset[static_cast<std::size_t>(t)]) {
            const double one_minus = 1.0 - q;
            const double pow_a = std::pow(one_minus, cfg.alpha);
            term = pow_a * std::log(q);
            dterm = -cfg.alpha * std::pow(one_minus, cfg.alpha - 1.0) * std::log(q) +
                    pow_a / q;
        } else {
            const double penalty = std::pow(1.0 - targets.p_target[t], cfg.beta);
            const double pow_a = std::pow(q, cfg.alpha);
            const double log1mq = std::log1p(-q);
            term = penalty * pow_a * log1mq;
            dterm = penalty * (cfg.alpha * std::pow(q, cfg.alpha - 1.0) * log1mq -
                               pow_a / (1.0 - q));
        }
        total += term;
        if (interior) {
            out.grad[t] = -dterm / static_cast<double>(t_count);
        }
    }
    out.loss = -total / static_cast<double>(t_count);
    return out;
}

LossValue regression_loss(const Eigen::Ref<const Eigen::ArrayXd>& dur_reg,
                          const TargetSeries& targets, const LossConfig&) {
    require_frames(dur_reg.size(), targets.frames(), "dur_reg");

    LossValue out;
    out.grad = Eigen::ArrayXd::Zero(dur_reg.size());
    const std::size_t k = targets.onset_frames.size();
    if (k == 0) {
        return out;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const int frame = targets.onset_frames[i];
        const double diff = dur_reg[frame] - targets.dur_target[static_cast<Eigen::Index>(i)];
        total += std::abs(diff);
        if (diff > 0.0) {
            out.grad[frame] = 1.0 / static_cast<double>(k);
        } else if (diff < 0.0) {
            out.grad[frame] = -1.0 / static_cast<double>(k);
        }
    }
    out.loss = total / static_cast<double>(k);
    return out;
}

MatrixLossValue classification_loss(
    const Eigen::Ref<const Eigen::MatrixXd>& class_logits,
    const TargetSeries& targets, const LossConfig&) {
    require_frames(class_logits.rows(), targets.frames(), "class_logits");
    const Eigen::Index c_count = class_logits.cols();

    MatrixLossValue out;
    out.grad = Eigen::MatrixXd::Zero(class_logits.rows(), c_count);
    const std::size_t k = targets.onset_frames.size();
    if (k == 0) {
        return out;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const int frame = targets.onset_frames[i];
        const int truth = targets.class_target[i];
        if (truth < 0 || truth >= c_count) {
            throw ValidationError("class target " + std::to_string(truth) +
                                  " at frame " + std::to_string(frame) +
                                  " outside [0, " + std::to_string(c_count) + ")");
        }
        const Eigen::ArrayXd row = class_logits.row(frame).array();
        const double peak = row.maxCoeff();
        const Eigen::ArrayXd shifted = row - peak;
        const double denom = shifted.exp().sum();
        const double log_denom = std::log(denom);
        total += log_denom - shifted[truth];

        Eigen::ArrayXd softmax = shifted.exp() / denom;
        softmax[truth] -= 1.0;
        out.grad.row(frame) = (softmax / static_cast<double>(k)).matrix().transpose();
    }
    out.loss = total / static_cast<double>(k);
    return out;
}

TotalLoss total_loss(const FramePredictions& preds, const TargetSeries& targets,
                     const LossConfig& cfg) {
    LossValue det = detection_loss(preds.p_det, targets, cfg);
    LossValue reg = regression_loss(preds.dur_reg, targets, cfg);
    MatrixLossValue cls = classification_loss(preds.class_logits, targets, cfg);

    TotalLoss out;
    out.detection = det.loss;
    out.regression = reg.loss;
    out.classification = cls.loss;
    out.loss = det.loss + cfg.lambda * reg.loss + cfg.rho * cls.loss;
    out.d_p_det = std::move(det.grad);
    out.d_dur_reg = cfg.lambda * reg.grad;
    out.d_class_logits = cfg.rho * cls.grad;
    return out;
}

}  // namespace sedbox
