#pragma once

#include "attnlab/attention.hpp"
#include "attnlab/mask.hpp"

namespace attnlab {

// Builds the per-head masks for a sparse variant: the first half of the heads
// get pattern one (local), the rest pattern two (strided / block summary).
std::vector<AttentionMask> default_head_masks(const AttentionConfig& cfg);

// Multi-head attention with per-head boolean masks; scores are computed
// densely and masked positions receive exactly zero weight. Requires a
// shared-QK projection and one mask per head.
AttentionResult sparse_attention_forward(const Matrix& x, const ProjectionWeights& w,
                                         const AttentionConfig& cfg,
                                         const std::vector<AttentionMask>& masks);

}  // namespace attnlab
