#include "attnlab/bench.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "attnlab/errors.hpp"
#include "attnlab/matrix.hpp"
#include "attnlab/rng.hpp"
#include "attnlab/sparse.hpp"

namespace attnlab {

BenchModel BenchModel::build(const AttentionConfig& cfg, std::uint64_t seed) {
    cfg.validate_for_model();
    BenchModel m;
    m.cfg_ = cfg;
    if (variant_is_synth(cfg.variant)) {
        m.values_ = make_value_weights(synth_heads(cfg), cfg.model_dim, seed);
        if (cfg.variant == Variant::SynDense || cfg.variant == Variant::SynDenseMH) {
            m.dense_ = make_dense_synth_weights(synth_heads(cfg), cfg.model_dim,
                                                cfg.synth_hidden, cfg.seq_len, seed);
        } else {
            if (cfg.variant == Variant::SynRandom) {
                m.table_ = make_random_logits(cfg.heads, cfg.seq_len, seed);
            } else {
                m.table_ = build_fixed_init(cfg.heads, cfg.seq_len, seed,
                                            /*generalize=*/cfg.heads != 12);
            }
            m.table_.frozen = true;
            // Deployed form: the logit tables are fixed, so their row softmax
            // is computed once up front rather than on every batch.
            m.frozen_weights_.reserve(m.table_.head_logits.size());
            for (int h = 0; h < m.table_.heads(); ++h) {
                m.frozen_weights_.push_back(
                    row_softmax(random_synth_logits_slice(m.table_, h, cfg.seq_len)));
            }
        }
        return m;
    }
    Rng proj_rng(derive_seed(seed, "proj"));
    m.proj_ = random_projection_weights(cfg, variant_uses_shared_qk(cfg.variant), proj_rng);
    if (variant_is_sparse(cfg.variant)) {
        m.masks_ = default_head_masks(cfg);
    } else if (variant_is_lsh(cfg.variant)) {
        m.spec_ = make_transform_spec(cfg);
        m.directions_ = make_head_hash_directions(cfg, m.spec_, seed);
    }
    return m;
}

namespace {

Matrix frozen_table_output(const AttentionConfig& cfg, const std::vector<Matrix>& weights,
                           const std::vector<Matrix>& values, const Matrix& x) {
    const int heads = static_cast<int>(weights.size());
    const int head_dim = cfg.model_dim / heads;
    Matrix out(x.rows, cfg.model_dim);
    for (int h = 0; h < heads; ++h) {
        const Matrix v = matmul(x, values[static_cast<std::size_t>(h)]);
        const Matrix mixed = matmul(weights[static_cast<std::size_t>(h)], v);
        for (int i = 0; i < out.rows; ++i)
            for (int j = 0; j < head_dim; ++j) out(i, h * head_dim + j) = mixed(i, j);
    }
    return out;
}

}  // namespace

Matrix BenchModel::forward_output(const Matrix& x) const {
    if (cfg_.variant == Variant::SynRandom || cfg_.variant == Variant::Ours)
        return frozen_table_output(cfg_, frozen_weights_, values_, x);
    return forward(x).output;
}

AttentionResult BenchModel::forward(const Matrix& x) const {
    switch (cfg_.variant) {
        case Variant::BaselineQK:
        case Variant::BaselineQ:
            return full_attention_forward(x, proj_, cfg_);
        case Variant::SparseStrided:
        case Variant::SparseFixed:
            return sparse_attention_forward(x, proj_, cfg_, masks_);
        case Variant::SignALSH:
        case Variant::XBox:
        case Variant::XBoxQNF:
        case Variant::SimpleLSH:
        case Variant::SimpleALSH:
            return lsh_attention_forward(x, proj_, cfg_, spec_, directions_);
        case Variant::SynDense:
        case Variant::SynDenseMH:
            return synthesizer_forward(x, values_, cfg_, dense_);
        case Variant::SynRandom:
        case Variant::Ours: {
            AttentionResult r;
            r.weights.head = frozen_weights_;
            r.output = frozen_table_output(cfg_, frozen_weights_, values_, x);
            return r;
        }
    }
    throw Error("unhandled variant in forward");
}

BenchRecord run_benchmark(Variant v, AttentionConfig cfg, int batches, std::uint64_t seed) {
    if (batches < 1) throw ConfigError("run_benchmark: batches must be >= 1");
    cfg.variant = v;
    cfg.validate_for_model();
    const BenchModel model = BenchModel::build(cfg, seed);

    Rng input_rng(derive_seed(seed, "bench/input"));
    Matrix x(cfg.seq_len, cfg.model_dim);
    for (double& d : x.data) d = input_rng.gaussian();

    // Warm-up pass, excluded from the measurement; summing each output into a
    // volatile sink keeps the compiler from eliding any of the work.
    volatile double sink = 0.0;
    {
        const Matrix warm = model.forward_output(x);
        double s = 0.0;
        for (double d : warm.data) s += d;
        sink = sink + s;
    }

    const auto t0 = std::chrono::steady_clock::now();
    for (int b = 0; b < batches; ++b) {
        const Matrix out = model.forward_output(x);
        double s = 0.0;
        for (double d : out.data) s += d;
        sink = sink + s;
    }
    const auto t1 = std::chrono::steady_clock::now();
    (void)sink;

    BenchRecord rec;
    rec.variant = v;
    rec.L = cfg.seq_len;
    rec.D = cfg.model_dim;
    rec.H = cfg.heads;
    rec.C = cfg.candidates;
    rec.N = cfg.synth_hidden;
    rec.batches = batches;
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    rec.seed = seed;
    return rec;
}

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
    if (records.empty()) throw Error("write_bench_csv: no records");
    out << "variant,L,D,H,C,N,batches,seconds,seed\n";
    for (const BenchRecord& r : records) {
        std::ostringstream line;
        line.precision(9);
        line << std::fixed;
        line << variant_tag(r.variant) << ',' << r.L << ',' << r.D << ',' << r.H << ','
             << r.C << ',' << r.N << ',' << r.batches << ',' << r.seconds << ',' << r.seed;
        out << line.str() << '\n';
    }
}

void write_bench_csv(const std::vector<BenchRecord>& records, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    write_bench_csv(records, f);
}

}  // namespace attnlab
