#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "attnlab/matrix.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

// The thirteen benchmarked attention variants.
enum class Variant {
    BaselineQK,    // full attention, separate query/key projections
    BaselineQ,     // full attention, tied query/key projection
    SparseStrided, // window + strided column masks
    SparseFixed,   // block + block-summary masks
    SignALSH,      // candidate selection via sign random projections, four
    XBox,          //   asymmetric transforms and one symmetric one
    XBoxQNF,
    SimpleLSH,
    SimpleALSH,
    SynDense,      // attention logits synthesized from the input, one head
    SynDenseMH,    // per-head synthesized logits
    SynRandom,     // free logit table, input independent
    Ours,          // logit table initialized from fixed patterns
};

const char* variant_tag(Variant v);
Variant parse_variant(std::string_view tag);  // ParseError on unknown tags
const std::vector<Variant>& all_variants();

bool variant_is_lsh(Variant v);
bool variant_is_sparse(Variant v);
bool variant_is_synth(Variant v);
// Variants whose query and key projections are tied to one matrix.
bool variant_uses_shared_qk(Variant v);

// Hyperparameters shared by every variant. Single letters in config files
// map onto these fields: L=seq_len, D=model_dim, H=heads, C=candidates,
// N=synth_hidden, U=alsh_scale, m=alsh_order.
struct AttentionConfig {
    int seq_len = 128;
    int model_dim = 64;
    int heads = 12;
    int candidates = 32;
    int synth_hidden = 16;
    double alsh_scale = 0.75;
    int alsh_order = 2;
    int stride = 0;         // 0 = ceil(sqrt(seq_len))
    int block = 0;          // 0 = ceil(sqrt(seq_len))
    int summary_width = 1;
    Variant variant = Variant::BaselineQK;

    int head_dim() const;          // ConfigError when model_dim % heads != 0
    int effective_stride() const;  // resolves the sqrt default
    int effective_block() const;

    // Field-range validation shared by every subcommand.
    void validate() const;
    // Stricter checks needed before weights can be built (divisibility,
    // candidate count within sequence length, ...).
    void validate_for_model() const;
};

int ceil_sqrt(int n);

// Per-head projection matrices, each model_dim x head_dim. When shared_qk is
// set the key projection is the query projection (wk stays empty and
// key_weight returns the same matrix object).
struct ProjectionWeights {
    std::vector<Matrix> wq;
    std::vector<Matrix> wk;
    std::vector<Matrix> wv;
    bool shared_qk = false;

    int heads() const { return static_cast<int>(wq.size()); }
    const Matrix& query_weight(int h) const { return wq[h]; }
    const Matrix& key_weight(int h) const { return shared_qk ? wq[h] : wk[h]; }
    const Matrix& value_weight(int h) const { return wv[h]; }
};

ProjectionWeights random_projection_weights(const AttentionConfig& cfg, bool shared_qk, Rng& rng);

// Post-softmax attention matrices, one L x L row-stochastic matrix per head.
struct AttentionWeights {
    std::vector<Matrix> head;
};

struct HeadQKV {
    Matrix q, k, v;
};

// Projects the input sequence (L x D) into per-head queries, keys, values.
std::vector<HeadQKV> project_qkv(const Matrix& x, const ProjectionWeights& w);

// q k^T / sqrt(head_dim), where head_dim is the column count of q and k.
Matrix scaled_scores(const Matrix& q, const Matrix& k);

struct AttentionResult {
    Matrix output;             // L x D, heads concatenated
    AttentionWeights weights;  // per-head L x L
};

// Dense multi-head attention; cfg.variant must be baseline-qk or baseline-q
// and must agree with w.shared_qk.
AttentionResult full_attention_forward(const Matrix& x, const ProjectionWeights& w,
                                       const AttentionConfig& cfg);

}  // namespace attnlab
