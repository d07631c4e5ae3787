#include "attnlab/lsh.hpp"

#include <algorithm>
#include <cmath>

namespace attnlab {

namespace {

double norm_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double row_norm(const Matrix& m, int r) {
    double s = 0.0;
    const double* row = m.row(r);
    for (int j = 0; j < m.cols; ++j) s += row[j] * row[j];
    return std::sqrt(s);
}

std::vector<double> row_vector(const Matrix& m, int r) {
    return std::vector<double>(m.row(r), m.row(r) + m.cols);
}

// Tolerated relative overshoot of norm bounds before DomainError; absorbs
// rounding from the normalization scaling itself.
constexpr double kNormSlack = 1e-9;

double sqrt_clamped(double v) { return std::sqrt(v > 0.0 ? v : 0.0); }

}  // namespace

Scheme scheme_of(Variant v) {
    switch (v) {
        case Variant::SignALSH: return Scheme::SignALSH;
        case Variant::XBox: return Scheme::XBox;
        case Variant::XBoxQNF: return Scheme::XBoxQNF;
        case Variant::SimpleLSH: return Scheme::SimpleLSH;
        case Variant::SimpleALSH: return Scheme::SimpleALSH;
        default:
            throw ConfigError(std::string("scheme_of: '") + variant_tag(v) +
                              "' is not a candidate-selection variant");
    }
}

TransformSpec make_transform_spec(const AttentionConfig& cfg) {
    TransformSpec spec;
    spec.scheme = scheme_of(cfg.variant);
    spec.scale_u = cfg.alsh_scale;
    spec.order_m = cfg.alsh_order;
    return spec;
}

int transformed_dim(const TransformSpec& spec, int dim) {
    switch (spec.scheme) {
        case Scheme::SignALSH: return dim + spec.order_m;
        case Scheme::XBox:
        case Scheme::XBoxQNF:
        case Scheme::SimpleLSH: return dim + 1;
        case Scheme::SimpleALSH: return dim + 2;
    }
    throw Error("transformed_dim: unhandled scheme");
}

NormalizedInputs normalize_inputs(const Matrix& queries, const Matrix& keys, TransformSpec spec) {
    if (queries.cols != keys.cols)
        throw ShapeError("normalize_inputs: query dim " + std::to_string(queries.cols) +
                         " does not match key dim " + std::to_string(keys.cols));
    if (keys.rows < 1) throw ShapeError("normalize_inputs: no keys");
    if (spec.scale_u <= 0.0 || spec.scale_u > 1.0)
        throw ConfigError("normalize_inputs: U must be in (0, 1]");
    if (spec.order_m < 1) throw ConfigError("normalize_inputs: m must be >= 1");

    double max_key = 0.0;
    for (int i = 0; i < keys.rows; ++i) max_key = std::max(max_key, row_norm(keys, i));
    if (max_key == 0.0) throw DomainError("normalize_inputs: all keys have zero norm");

    NormalizedInputs out;
    out.queries = queries;
    out.keys = keys;
    out.spec = spec;

    switch (spec.scheme) {
        case Scheme::SignALSH: {
            out.spec.max_norm = max_key;
            double f = spec.scale_u / max_key;
            for (double& v : out.keys.data) v *= f;
            for (int i = 0; i < out.queries.rows; ++i) {
                double n = row_norm(out.queries, i);
                if (n == 0.0) continue;  // silent frame: leave as-is
                double* row = out.queries.row(i);
                for (int j = 0; j < out.queries.cols; ++j) row[j] /= n;
            }
            break;
        }
        case Scheme::SimpleLSH:
        case Scheme::SimpleALSH: {
            // The scale must also bring queries inside the unit ball, so the
            // divisor covers the largest query norm as well.
            double m = max_key;
            for (int i = 0; i < queries.rows; ++i) m = std::max(m, row_norm(queries, i));
            out.spec.max_norm = m;
            double f = 1.0 / m;
            for (double& v : out.keys.data) v *= f;
            for (double& v : out.queries.data) v *= f;
            break;
        }
        case Scheme::XBox:
        case Scheme::XBoxQNF:
            out.spec.max_norm = max_key;
            break;
    }
    return out;
}

std::vector<double> transform_query(const std::vector<double>& q, const TransformSpec& spec) {
    double n = norm_of(q);
    std::vector<double> out;
    out.reserve(transformed_dim(spec, static_cast<int>(q.size())));
    switch (spec.scheme) {
        case Scheme::SignALSH:
            out = q;
            out.insert(out.end(), spec.order_m, 0.0);
            break;
        case Scheme::XBox:
            out = q;
            out.push_back(0.0);
            break;
        case Scheme::XBoxQNF: {
            if (spec.max_norm <= 0.0)
                throw DomainError("transform_query: qnf needs max_norm from normalize_inputs");
            double lambda = n == 0.0 ? 1.0 : spec.max_norm / n;
            out = q;
            for (double& v : out) v *= lambda;
            out.push_back(0.0);
            break;
        }
        case Scheme::SimpleLSH: {
            if (n > 1.0 + kNormSlack)
                throw DomainError("transform_query: query norm " + std::to_string(n) +
                                  " exceeds 1 after normalization");
            out = q;
            out.push_back(sqrt_clamped(1.0 - n * n));
            break;
        }
        case Scheme::SimpleALSH: {
            if (n > 1.0 + kNormSlack)
                throw DomainError("transform_query: query norm " + std::to_string(n) +
                                  " exceeds 1 after normalization");
            out = q;
            out.push_back(0.0);
            out.push_back(sqrt_clamped(1.0 - n * n));
            break;
        }
    }
    return out;
}

std::vector<double> transform_key(const std::vector<double>& k, const TransformSpec& spec) {
    double n = norm_of(k);
    std::vector<double> out;
    out.reserve(transformed_dim(spec, static_cast<int>(k.size())));
    switch (spec.scheme) {
        case Scheme::SignALSH: {
            if (n > 1.0 + kNormSlack)
                throw DomainError("transform_key: key norm " + std::to_string(n) +
                                  " exceeds 1 after normalization");
            out = k;
            double p = n * n;  // norm^(2^i), starting at i = 1
            for (int i = 0; i < spec.order_m; ++i) {
                out.push_back(0.5 - p);
                p = p * p;
            }
            break;
        }
        case Scheme::XBox:
        case Scheme::XBoxQNF: {
            if (spec.max_norm <= 0.0)
                throw DomainError("transform_key: xbox needs max_norm from normalize_inputs");
            if (n > spec.max_norm * (1.0 + kNormSlack))
                throw DomainError("transform_key: key norm " + std::to_string(n) +
                                  " exceeds max key norm " + std::to_string(spec.max_norm));
            out = k;
            out.push_back(sqrt_clamped(spec.max_norm * spec.max_norm - n * n));
            break;
        }
        case Scheme::SimpleLSH: {
            if (n > 1.0 + kNormSlack)
                throw DomainError("transform_key: key norm " + std::to_string(n) +
                                  " exceeds 1 after normalization");
            out = k;
            out.push_back(sqrt_clamped(1.0 - n * n));
            break;
        }
        case Scheme::SimpleALSH: {
            if (n > 1.0 + kNormSlack)
                throw DomainError("transform_key: key norm " + std::to_string(n) +
                                  " exceeds 1 after normalization");
            out = k;
            out.push_back(sqrt_clamped(1.0 - n * n));
            out.push_back(0.0);
            break;
        }
    }
    return out;
}

HashDirection random_hash_direction(int dim, Rng& rng) {
    if (dim < 1) throw ShapeError("random_hash_direction: dim must be >= 1");
    HashDirection d;
    d.a.resize(dim);
    for (double& v : d.a) v = rng.gaussian();
    return d;
}

std::vector<HashDirection> make_head_hash_directions(const AttentionConfig& cfg,
                                                     const TransformSpec& spec,
                                                     std::uint64_t seed) {
    int dim = transformed_dim(spec, cfg.head_dim());
    std::vector<HashDirection> dirs;
    dirs.reserve(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
        Rng rng(derive_seed(seed, "lsh/head/" + std::to_string(h)));
        dirs.push_back(random_hash_direction(dim, rng));
    }
    return dirs;
}

int sign_hash(const HashDirection& dir, const std::vector<double>& x) {
    if (dir.a.size() != x.size())
        throw ShapeError("sign_hash: direction dim " + std::to_string(dir.a.size()) +
                         " does not match vector dim " + std::to_string(x.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += dir.a[i] * x[i];
    return dot >= 0.0 ? 1 : -1;
}

CandidateSet select_candidates(const Matrix& queries, const Matrix& keys,
                               const TransformSpec& spec, const HashDirection& dir, int count) {
    if (count < 1) throw ConfigError("select_candidates: count must be >= 1");
    NormalizedInputs norm = normalize_inputs(queries, keys, spec);
    int expected_dim = transformed_dim(norm.spec, keys.cols);
    if (static_cast<int>(dir.a.size()) != expected_dim)
        throw ShapeError("select_candidates: direction dim " + std::to_string(dir.a.size()) +
                         " does not match transformed dim " + std::to_string(expected_dim));

    int num_keys = keys.rows;
    std::vector<double> key_proj(num_keys);
    for (int j = 0; j < num_keys; ++j) {
        std::vector<double> t = transform_key(row_vector(norm.keys, j), norm.spec);
        double dot = 0.0;
        for (std::size_t d = 0; d < t.size(); ++d) dot += dir.a[d] * t[d];
        key_proj[j] = dot;
    }

    int keep = std::min(count, num_keys);
    CandidateSet set;
    set.target_count = count;
    set.per_query.resize(queries.rows);
    std::vector<std::pair<double, int>> scored(num_keys);
    for (int i = 0; i < queries.rows; ++i) {
        double side =
            static_cast<double>(sign_hash(dir, transform_query(row_vector(norm.queries, i),
                                                               norm.spec)));
        for (int j = 0; j < num_keys; ++j) scored[j] = {side * key_proj[j], j};
        std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                          [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        std::vector<int>& picked = set.per_query[i];
        picked.resize(keep);
        for (int j = 0; j < keep; ++j) picked[j] = scored[j].second;
        std::sort(picked.begin(), picked.end());
    }
    return set;
}

std::string candidate_set_to_text(const CandidateSet& set) {
    std::string out;
    for (const std::vector<int>& row : set.per_query) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) out += ',';
            out += std::to_string(row[j]);
        }
        out += '\n';
    }
    return out;
}

std::vector<std::vector<int>> brute_force_mips(const Matrix& queries, const Matrix& keys,
                                               int top) {
    if (top < 1) throw ConfigError("brute_force_mips: top must be >= 1");
    if (queries.cols != keys.cols)
        throw ShapeError("brute_force_mips: query dim does not match key dim");
    int keep = std::min(top, keys.rows);
    std::vector<std::vector<int>> out(queries.rows);
    std::vector<std::pair<double, int>> scored(keys.rows);
    for (int i = 0; i < queries.rows; ++i) {
        const double* q = queries.row(i);
        for (int j = 0; j < keys.rows; ++j) {
            const double* k = keys.row(j);
            double dot = 0.0;
            for (int d = 0; d < keys.cols; ++d) dot += q[d] * k[d];
            scored[j] = {dot, j};
        }
        std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                          [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        out[i].resize(keep);
        for (int j = 0; j < keep; ++j) out[i][j] = scored[j].second;
    }
    return out;
}

AttentionResult lsh_attention_forward(const Matrix& x, const ProjectionWeights& w,
                                      const AttentionConfig& cfg, const TransformSpec& spec,
                                      const std::vector<HashDirection>& directions) {
    if (!variant_is_lsh(cfg.variant))
        throw ConfigError("lsh_attention_forward: variant must be a candidate-selection variant");
    if (scheme_of(cfg.variant) != spec.scheme)
        throw ConfigError("lsh_attention_forward: spec scheme does not match cfg.variant");
    if (!w.shared_qk)
        throw ConfigError("lsh_attention_forward: candidate selection ties the query/key projection");
    cfg.validate_for_model();
    if (static_cast<int>(directions.size()) != cfg.heads)
        throw ConfigError("lsh_attention_forward: expected " + std::to_string(cfg.heads) +
                          " hash directions, got " + std::to_string(directions.size()));
    if (x.rows != cfg.seq_len || x.cols != cfg.model_dim)
        throw ShapeError("lsh_attention_forward: input must be " + std::to_string(cfg.seq_len) +
                         "x" + std::to_string(cfg.model_dim));

    std::vector<HeadQKV> qkv = project_qkv(x, w);
    AttentionResult result;
    result.output = Matrix(cfg.seq_len, cfg.model_dim);
    int hd = cfg.head_dim();
    for (int h = 0; h < cfg.heads; ++h) {
        CandidateSet cands =
            select_candidates(qkv[h].q, qkv[h].k, spec, directions[h], cfg.candidates);
        AttentionMask mask(cfg.seq_len, cfg.seq_len, false);
        for (int i = 0; i < cfg.seq_len; ++i)
            for (int j : cands.per_query[i]) mask.set(i, j, true);
        Matrix a = masked_row_softmax(scaled_scores(qkv[h].q, qkv[h].k), mask);
        Matrix o = matmul(a, qkv[h].v);
        for (int i = 0; i < cfg.seq_len; ++i)
            for (int j = 0; j < hd; ++j) result.output(i, h * hd + j) = o(i, j);
        result.weights.head.push_back(std::move(a));
    }
    return result;
}

}  // namespace attnlab
