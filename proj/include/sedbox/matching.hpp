#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sedbox/decode.hpp"
#include "sedbox/types.hpp"

namespace sedbox {

// Maximum-cardinality matching (Hopcroft-Karp) of the bipartite graph with
// an edge (i, j) whenever iou(left[i], right[j]) >= iou_threshold and the
// two boxes agree on class. Vertices are scanned in (onset, duration)
// order so the returned matching is deterministic. Pairs refer to the
// input lists and come back sorted by left index.
std::vector<std::pair<int, int>> max_bipartite_matching(std::span<const Box> left,
                                                        std::span<const Box> right,
                                                        double iou_threshold);

struct FusionResult {
    std::vector<Box> boxes;
    std::size_t dropped_degenerate = 0;
};

// Matches forward against backward boxes at cfg.fusion_iou_threshold and
// fuses each matched pair: onset and offset are the midpoints of the two
// boxes' onsets and offsets, the score is the mean of the two scores, and
// the class follows the higher-scoring member (ties to forward). Unmatched
// boxes follow cfg.unmatched_policy. No suppression is applied.
FusionResult fuse_boxes(std::span<const Box> forward, std::span<const Box> backward,
                        const DecodeConfig& cfg = {});

// fuse_boxes followed by soft_nms. When dropped_degenerate is non-null it
// receives the count of fused boxes discarded for non-positive extent.
std::vector<Box> fuse_bidirectional(std::span<const Box> forward,
                                    std::span<const Box> backward,
                                    const DecodeConfig& cfg = {},
                                    std::size_t* dropped_degenerate = nullptr);

}  // namespace sedbox
