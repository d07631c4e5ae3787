#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attnlab/attention.hpp"

namespace attnlab {

enum class Scheme { SignALSH, XBox, XBoxQNF, SimpleLSH, SimpleALSH };

// Maps an lsh variant tag onto its transform scheme; ConfigError otherwise.
Scheme scheme_of(Variant v);

// Scheme plus its hyperparameters. max_norm is filled by normalize_inputs at
// application time and always covers the largest key norm seen.
struct TransformSpec {
    Scheme scheme = Scheme::SignALSH;
    double scale_u = 0.75;  // key shrink factor for sign-alsh
    int order_m = 2;        // number of norm-power augmentation terms for sign-alsh
    double max_norm = 0.0;
};

TransformSpec make_transform_spec(const AttentionConfig& cfg);

// Dimension of transformed vectors for inputs of dimension `dim`.
int transformed_dim(const TransformSpec& spec, int dim);

struct NormalizedInputs {
    Matrix queries;
    Matrix keys;
    TransformSpec spec;  // same scheme, max_norm filled in
};

// Applies the scheme's normalization: sign-alsh shrinks keys to norm <= U and
// rescales each query to unit norm; the simple schemes scale queries and keys
// into the unit ball together (max_norm covers both so the norm-completion
// coordinate stays real); xbox variants pass inputs through untouched and only
// record the max key norm. All-zero keys raise DomainError.
NormalizedInputs normalize_inputs(const Matrix& queries, const Matrix& keys, TransformSpec spec);

// Query-side transform. Expects normalize_inputs to have run; the qnf scheme
// rescales the query to the max key norm here (zero-norm queries fall back to
// scale 1).
std::vector<double> transform_query(const std::vector<double>& q, const TransformSpec& spec);

// Key-side transform; raises DomainError when the key norm exceeds the
// scheme's bound.
std::vector<double> transform_key(const std::vector<double>& k, const TransformSpec& spec);

struct HashDirection {
    std::vector<double> a;
};

HashDirection random_hash_direction(int dim, Rng& rng);

// One hash direction per head, drawn from the model seed; dimensions follow
// the scheme's transformed head dimension.
std::vector<HashDirection> make_head_hash_directions(const AttentionConfig& cfg,
                                                     const TransformSpec& spec,
                                                     std::uint64_t seed);

// Sign random projection: +1 when a.x >= 0, else -1.
int sign_hash(const HashDirection& dir, const std::vector<double>& x);

// Per-query candidate key indices, each list sorted ascending and exactly
// min(target_count, key_count) long.
struct CandidateSet {
    std::vector<std::vector<int>> per_query;
    int target_count = 0;
};

// Scores every key against the hash direction in transformed space and keeps,
// per query, the min(count, L) keys with the largest sign(h(q)) * (a . R(k)),
// ties broken toward the lower index.
CandidateSet select_candidates(const Matrix& queries, const Matrix& keys,
                               const TransformSpec& spec, const HashDirection& dir, int count);

// One line per query: comma-separated candidate indices.
std::string candidate_set_to_text(const CandidateSet& set);

// Exact top-`top` key indices per query by raw inner product, rank order,
// ties broken toward the lower index.
std::vector<std::vector<int>> brute_force_mips(const Matrix& queries, const Matrix& keys, int top);

// Candidate-masked attention: selection runs on transformed vectors, the
// attention scores themselves use the original q.k. Non-candidate weights are
// exactly zero. No sub-quadratic shortcut is taken: scores are computed
// densely and masked, so candidate selection is pure overhead at run time
// (the cost model tracks the theoretical savings separately).
AttentionResult lsh_attention_forward(const Matrix& x, const ProjectionWeights& w,
                                      const AttentionConfig& cfg, const TransformSpec& spec,
                                      const std::vector<HashDirection>& directions);

}  // namespace attnlab
