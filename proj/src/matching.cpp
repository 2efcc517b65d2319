#include "sedbox/matching.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

namespace sedbox {

namespace {

constexpr int kUnmatched = -1;

std::vector<int> order_by_interval(std::span<const Box> boxes) {
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::tie(boxes[a].onset, boxes[a].duration, boxes[a].class_id,
                        boxes[a].score) <
               std::tie(boxes[b].onset, boxes[b].duration, boxes[b].class_id,
                        boxes[b].score);
    });
    return order;
}

// Hopcroft-Karp over adjacency lists; vertices are positions in the sorted
// orders, so the matching (not just its size) is input-order independent.
class HopcroftKarp {
  public:
    HopcroftKarp(int n_left, int n_right, std::vector<std::vector<int>> adjacency)
        : adjacency_(std::move(adjacency)),
          match_left_(n_left, kUnmatched),
          match_right_(n_right, kUnmatched),
          level_(n_left) {}

    const std::vector<int>& solve() {
        while (bfs()) {
            for (int u = 0; u < static_cast<int>(match_left_.size()); ++u) {
                if (match_left_[u] == kUnmatched) {
                    dfs(u);
                }
            }
        }
        return match_left_;
    }

  private:
    static constexpr int kInf = std::numeric_limits<int>::max();

    bool bfs() {
        std::queue<int> frontier;
        for (int u = 0; u < static_cast<int>(match_left_.size()); ++u) {
            if (match_left_[u] == kUnmatched) {
                level_[u] = 0;
                frontier.push(u);
            } else {
                level_[u] = kInf;
            }
        }
        bool reachable = false;
        while (!frontier.empty()) {
            const int u = frontier.front();
            frontier.pop();
            for (int v : adjacency_[u]) {
                const int w = match_right_[v];
                if (w == kUnmatched) {
                    reachable = true;
                } else if (level_[w] == kInf) {
                    level_[w] = level_[u] + 1;
                    frontier.push(w);
                }
            }
        }
        return reachable;
    }

    bool dfs(int u) {
        for (int v : adjacency_[u]) {
            const int w = match_right_[v];
            if (w == kUnmatched || (level_[w] == level_[u] + 1 && dfs(w))) {
                match_left_[u] = v;
                match_right_[v] = u;
                return true;
            }
        }
        level_[u] = kInf;
        return false;
    }

    std::vector<std::vector<int>> adjacency_;
    std::vector<int> match_left_;
    std::vector<int> match_right_;
    std::vector<int> level_;
};

}  // namespace

std::vector<std::pair<int, int>> max_bipartite_matching(std::span<const Box> left,
                                                        std::span<const Box> right,
                                                        double iou_threshold) {
    const std::vector<int> left_order = order_by_interval(left);
    const std::vector<int> right_order = order_by_interval(right);

    std::vector<std::vector<int>> adjacency(left_order.size());
    for (std::size_t li = 0; li < left_order.size(); ++li) {
        const Box& a = left[left_order[li]];
        for (std::size_t ri = 0; ri < right_order.size(); ++ri) {
            const Box& b = right[right_order[ri]];
            if (a.class_id == b.class_id && iou(a, b) >= iou_threshold) {
                adjacency[li].push_back(static_cast<int>(ri));
            }
        }
    }

    HopcroftKarp solver(static_cast<int>(left_order.size()),
                        static_cast<int>(right_order.size()), std::move(adjacency));
    const std::vector<int>& match = solver.solve();

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t li = 0; li < left_order.size(); ++li) {
        if (match[li] != kUnmatched) {
            pairs.emplace_back(left_order[li], right_order[match[li]]);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

FusionResult fuse_boxes(std::span<const Box> forward, std::span<const Box> backward,
                        const DecodeConfig& cfg) {
    cfg.validate();

    const auto pairs =
        max_bipartite_matching(forward, backward, cfg.fusion_iou_threshold);

    std::vector<bool> forward_used(forward.size(), false);
    std::vector<bool> backward_used(backward.size(), false);

    FusionResult result;
    for (const auto& [fi, bi] : pairs) {
        forward_used[fi] = true;
        backward_used[bi] = true;
        const Box& fwd = forward[fi];
        const Box& bwd = backward[bi];

        Box fused;
        fused.onset = 0.5 * (fwd.onset + bwd.onset);
        fused.duration = 0.5 * (fwd.duration + bwd.duration);
        fused.score = 0.5 * (fwd.score + bwd.score);
        fused.class_id = fwd.score >= bwd.score ? fwd.class_id : bwd.class_id;
        if (fused.duration <= 0.0) {
            ++result.dropped_degenerate;
            continue;
        }
        result.boxes.push_back(fused);
    }

    const bool keep_forward = cfg.unmatched_policy != UnmatchedPolicy::drop;
    const bool keep_backward = cfg.unmatched_policy == UnmatchedPolicy::keep_both;
    if (keep_forward) {
        for (std::size_t i = 0; i < forward.size(); ++i) {
            if (!forward_used[i]) {
                result.boxes.push_back(forward[i]);
            }
        }
    }
    if (keep_backward) {
        for (std::size_t i = 0; i < backward.size(); ++i) {
            if (!backward_used[i]) {
                result.boxes.push_back(backward[i]);
            }
        }
    }

    std::sort(result.boxes.begin(), result.boxes.end(), [](const Box& a, const Box& b) {
        return std::tie(a.onset, a.duration, a.class_id, a.score) <
               std::tie(b.onset, b.duration, b.class_id, b.score);
    });
    return result;
}

std::vector<Box> fuse_bidirectional(std::span<const Box> forward,
                                    std::span<const Box> backward,
                                    const DecodeConfig& cfg,
                                    std::size_t* dropped_degenerate) {
    FusionResult fused = fuse_boxes(forward, backward, cfg);
    if (dropped_degenerate != nullptr) {
        *dropped_degenerate = fused.dropped_degenerate;
    }
    return soft_nms(std::move(fused.boxes), cfg);
}

}  // namespace sedbox
