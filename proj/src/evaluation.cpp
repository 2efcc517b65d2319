#include "sedbox/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "sedbox/errors.hpp"
#include "sedbox/matching.hpp"

namespace sedbox {

void EvalConfig::validate() const {
    if (iou_thresholds.empty()) {
        throw ValidationError("at least one IoU threshold is required");
    }
    for (double t : iou_thresholds) {
        if (!(t > 0.0) || t > 1.0) {
            throw ValidationError("IoU thresholds must lie in (0, 1]");
        }
    }
    if (!std::is_sorted(iou_thresholds.begin(), iou_thresholds.end())) {
        throw ValidationError("IoU thresholds must be sorted ascending");
    }
    if (num_points < 2) {
        throw ValidationError("num_points must be at least 2");
    }
}

namespace {

std::vector<int> greedy_pred_order(const std::vector<Box>& boxes) {
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::tie(boxes[b].score, boxes[a].onset, boxes[a].duration, a) <
               std::tie(boxes[a].score, boxes[b].onset, boxes[b].duration, b);
    });
    return order;
}

std::vector<std::pair<int, int>> greedy_match(const EventSet& preds,
                                              const EventSet& truth,
                                              double iou_threshold) {
    std::vector<bool> truth_used(truth.boxes.size(), false);
    std::vector<std::pair<int, int>> pairs;
    for (int pi : greedy_pred_order(preds.boxes)) {
        const Box& pred = preds.boxes[pi];
        int best_truth = -1;
        double best_iou = 0.0;
        for (std::size_t ti = 0; ti < truth.boxes.size(); ++ti) {
            if (truth_used[ti] || truth.boxes[ti].class_id != pred.class_id) {
                continue;
            }
            const double overlap = iou(pred, truth.boxes[ti]);
            if (overlap < iou_threshold) {
                continue;
            }
            if (overlap > best_iou) {
                best_iou = overlap;
                best_truth = static_cast<int>(ti);
            }
        }
        if (best_truth >= 0) {
            truth_used[best_truth] = true;
            pairs.emplace_back(pi, best_truth);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

struct PooledPred {
    double score;
    double onset;
    double duration;
    int recording;
    bool matched;
};

// Per-class prediction flags for one recording, under the configured
// matching mode.
void flag_recording(const EventSet& preds, const EventSet& truth, int class_id,
                    double iou_threshold, MatchingMode mode, int recording,
                    std::vector<PooledPred>& pool, std::size_t& truth_count) {
    EventSet pred_subset;
    pred_subset.vocab = preds.vocab;
    pred_subset.clip_duration = preds.clip_duration;
    EventSet truth_subset;
    truth_subset.vocab = truth.vocab;
    truth_subset.clip_duration = truth.clip_duration;
    for (const Box& box : preds.boxes) {
        if (box.class_id == class_id) {
            pred_subset.boxes.push_back(box);
        }
    }
    for (const Box& box : truth.boxes) {
        if (box.class_id == class_id) {
            truth_subset.boxes.push_back(box);
        }
    }
    truth_count += truth_subset.boxes.size();

    std::vector<bool> matched(pred_subset.boxes.size(), false);
    for (const auto& [pi, ti] : match_events(pred_subset, truth_subset, iou_threshold, mode)) {
        matched[pi] = true;
    }
    for (std::size_t i = 0; i < pred_subset.boxes.size(); ++i) {
        const Box& box = pred_subset.boxes[i];
        pool.push_back(PooledPred{box.score, box.onset, box.duration, recording, matched[i]});
    }
}

struct RankedCurve {
    std::vector<PrPoint> points;   // one per pooled prediction, rank order
    std::size_t truth_count = 0;
    std::size_t matched = 0;
};

RankedCurve ranked_curve(std::span<const EventSet> preds, std::span<const EventSet> truths,
                         int class_id, double iou_threshold, MatchingMode mode) {
    RankedCurve curve;
    std::vector<PooledPred> pool;
    for (std::size_t r = 0; r < preds.size(); ++r) {
        flag_recording(preds[r], truths[r], class_id, iou_threshold, mode,
                       static_cast<int>(r), pool, curve.truth_count);
    }
    std::sort(pool.begin(), pool.end(), [](const PooledPred& a, const PooledPred& b) {
        return std::tie(b.score, a.onset, a.duration, a.recording) <
               std::tie(a.score, b.onset, b.duration, b.recording);
    });

    std::size_t tp = 0;
    std::size_t fp = 0;
    curve.points.reserve(pool.size());
    for (const PooledPred& pred : pool) {
        if (pred.matched) {
            ++tp;
        } else {
            ++fp;
        }
        PrPoint point;
        point.score = pred.score;
        point.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        point.recall = curve.truth_count == 0
                           ? 0.0
                           : static_cast<double>(tp) / static_cast<double>(curve.truth_count);
        curve.points.push_back(point);
    }
    curve.matched = tp;
    return curve;
}

// Interpolated precision at recall r: the best precision among operating
// points whose recall is at least r, zero when unattained.
double ap_over_recall_levels(const RankedCurve& curve, int num_points) {
    const std::size_t n = curve.points.size();
    std::vector<double> max_from(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        max_from[i] = std::max(curve.points[i].precision, max_from[i + 1]);
    }
    std::vector<double> recalls(n);
    for (std::size_t i = 0; i < n; ++i) {
        recalls[i] = curve.points[i].recall;
    }

    double total = 0.0;
    for (int k = 0; k < num_points; ++k) {
        const double r = static_cast<double>(k) / static_cast<double>(num_points - 1);
        const auto it = std::lower_bound(recalls.begin(), recalls.end(), r);
        if (it != recalls.end()) {
            total += max_from[static_cast<std::size_t>(it - recalls.begin())];
        }
    }
    return total / static_cast<double>(num_points);
}

// Sensitivity variant: sweep evenly spaced score thresholds and average
// the interpolated precision at the recall each threshold attains.
double ap_over_score_thresholds(const RankedCurve& curve, int num_points) {
    const std::size_t n = curve.points.size();
    std::vector<double> max_from(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        max_from[i] = std::max(curve.points[i].precision, max_from[i + 1]);
    }

    double total = 0.0;
    for (int k = 0; k < num_points; ++k) {
        const double tau = static_cast<double>(k) / static_cast<double>(num_points - 1);
        // Operating point: all predictions with score >= tau.
        std::size_t cut = 0;
        while (cut < n && curve.points[cut].score >= tau) {
            ++cut;
        }
        if (cut == 0) {
            continue;
        }
        const double recall = curve.points[cut - 1].recall;
        std::size_t i = 0;
        while (i < n && curve.points[i].recall < recall) {
            ++i;
        }
        total += max_from[i];
    }
    return total / static_cast<double>(num_points);
}

}  // namespace

std::vector<std::pair<int, int>> match_events(const EventSet& preds,
                                              const EventSet& truth,
                                              double iou_threshold, MatchingMode mode) {
    if (!(preds.vocab == truth.vocab)) {
        throw ValidationError("prediction and truth vocabularies differ");
    }
    if (mode == MatchingMode::greedy_by_score) {
        return greedy_match(preds, truth, iou_threshold);
    }
    return max_bipartite_matching(preds.boxes, truth.boxes, iou_threshold);
}

std::optional<double> average_precision(std::span<const EventSet> preds,
                                        std::span<const EventSet> truths,
                                        int class_id, double iou_threshold,
                                        const EvalConfig& cfg) {
    cfg.validate();
    if (preds.size() != truths.size()) {
        throw ValidationError("prediction and truth recording counts differ");
    }
    const RankedCurve curve =
        ranked_curve(preds, truths, class_id, iou_threshold, cfg.matching_mode);
    if (curve.truth_count == 0) {
        return std::nullopt;
    }
    if (cfg.ap_interpolation == ApInterpolation::recall_levels) {
        return ap_over_recall_levels(curve, cfg.num_points);
    }
    return ap_over_score_thresholds(curve, cfg.num_points);
}

EvalReport evaluate(std::span<const EventSet> preds, std::span<const EventSet> truths,
                    const EvalConfig& cfg) {
    cfg.validate();
    if (preds.size() != truths.size()) {
        throw ValidationError("prediction list has " + std::to_string(preds.size()) +
                              " recordings but truth list has " +
                              std::to_string(truths.size()));
    }
    const ClassVocab* vocab = nullptr;
    for (std::size_t r = 0; r < preds.size(); ++r) {
        if (!(preds[r].vocab == truths[r].vocab)) {
            throw ValidationError("recording " + std::to_string(r) +
                                  ": prediction and truth vocabularies differ");
        }
        if (vocab == nullptr) {
            vocab = &truths[r].vocab;
        } else if (!(*vocab == truths[r].vocab)) {
            throw ValidationError("recordings disagree on the class vocabulary");
        }
    }

    EvalReport report;
    const int n_classes = vocab == nullptr ? 0 : vocab->size();
    for (double threshold : cfg.iou_thresholds) {
        ThresholdResult result;
        result.iou_threshold = threshold;
        double ap_sum = 0.0;
        int present = 0;
        for (int c = 0; c < n_classes; ++c) {
            const RankedCurve curve =
                ranked_curve(preds, truths, c, threshold, cfg.matching_mode);
            ClassResult entry;
            entry.class_id = c;
            entry.truth_count = curve.truth_count;
            entry.pred_count = curve.points.size();
            entry.matched = curve.matched;
            entry.pr_curve = curve.points;
            if (curve.truth_count > 0) {
                entry.ap = cfg.ap_interpolation == ApInterpolation::recall_levels
                               ? ap_over_recall_levels(curve, cfg.num_points)
                               : ap_over_score_thresholds(curve, cfg.num_points);
                ap_sum += *entry.ap;
                ++present;
            }
            result.per_class.push_back(std::move(entry));
        }
        result.map = present == 0 ? 0.0 : ap_sum / static_cast<double>(present);
        report.thresholds.push_back(std::move(result));
    }
    return report;
}

}  // namespace sedbox
