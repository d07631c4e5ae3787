#pragma once

#include <cstdint>
#include <vector>

#include "attnlab/attention.hpp"

namespace attnlab {

// Logit patterns used to seed input-independent attention tables.
enum class PatternKind { Diagonal, Increasing, Decreasing, SparseRandom };

struct PatternSpec {
    PatternKind kind = PatternKind::Diagonal;
    int shift = 0;          // diagonal offset, clamped at the edges; |shift| <= 2
    double strength = 5.0;  // diagonal logit height, or ramp span for inc/dec
    double noise_scale = 0.02;  // stddev of sparse-random logits
};

PatternSpec diagonal_pattern(int shift);
PatternSpec increasing_pattern();
PatternSpec decreasing_pattern();
PatternSpec sparse_pattern();

// L x L logit matrix realizing the pattern. Only SparseRandom consumes the
// seed. Shifted diagonals need L >= 3.
Matrix make_pattern(const PatternSpec& spec, int len, std::uint64_t seed);

// Learnable per-head logit tables, sliced to the live sequence length at
// forward time. `frozen` is set by the pretrain harness once training ends;
// frozen tables receive no further updates.
struct RandomSynthLogits {
    std::vector<Matrix> head_logits;  // each size_limit x size_limit
    int size_limit = 0;
    bool frozen = false;

    int heads() const { return static_cast<int>(head_logits.size()); }
};

// Gaussian-initialized logit tables (stddev noise_scale).
RandomSynthLogits make_random_logits(int heads, int size_limit, std::uint64_t seed,
                                     double noise_scale = 0.02);

// Twelve-head layout: heads 1-5 diagonals with shifts {0, -1, -2, +1, +2},
// head 6 increasing, head 7 decreasing, heads 8-12 sparse-random with distinct
// sub-seeds. Other head counts are rejected unless `generalize` is set, in
// which case the 5/1/1/5 proportions are kept by largest-remainder rounding
// and diagonal shifts cycle through the same list.
RandomSynthLogits build_fixed_init(int heads, int size_limit, std::uint64_t seed,
                                   bool generalize = false);

// Two-layer bottleneck that synthesizes attention logits from the input:
// logits = relu(x w1 + b1) w2 + b2, per head.
struct DenseSynthWeights {
    std::vector<Matrix> w1;  // model_dim x hidden
    std::vector<Matrix> b1;  // 1 x hidden
    std::vector<Matrix> w2;  // hidden x size_limit
    std::vector<Matrix> b2;  // 1 x size_limit
    int hidden = 0;
    int size_limit = 0;

    int heads() const { return static_cast<int>(w1.size()); }
};

DenseSynthWeights make_dense_synth_weights(int heads, int model_dim, int hidden, int size_limit,
                                           std::uint64_t seed);

// Synthesized logits for one head at sequence length x.rows (<= size_limit).
Matrix dense_synth_logits(const Matrix& x, const DenseSynthWeights& w, int head);

// Top-left len x len slice of one head's logit table.
Matrix random_synth_logits_slice(const RandomSynthLogits& logits, int head, int len);

// Number of attention tables the variant synthesizes: one for syn-dense,
// cfg.heads for the per-head variants.
int synth_heads(const AttentionConfig& cfg);

// Random per-head value projections (model_dim x model_dim/heads_used).
std::vector<Matrix> make_value_weights(int heads_used, int model_dim, std::uint64_t seed);

// Forward pass with input-synthesized logits (syn-dense / syn-dense-mh).
AttentionResult synthesizer_forward(const Matrix& x, const std::vector<Matrix>& value_weights,
                                    const AttentionConfig& cfg, const DenseSynthWeights& w);

// Forward pass with table logits (syn-random / ours). The input contributes
// values only; the attention weights are input-independent by construction.
AttentionResult synthesizer_forward(const Matrix& x, const std::vector<Matrix>& value_weights,
                                    const AttentionConfig& cfg, const RandomSynthLogits& logits);

}  // namespace attnlab
