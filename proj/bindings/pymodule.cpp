// Python bindings exposing the main operations: cost estimates, attention
// forwards for every variant, mask and pattern construction, candidate
// selection, benchmarking, the toy trainer, and the analysis helpers.

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "attnlab/attention.hpp"
#include "attnlab/bench.hpp"
#include "attnlab/cost.hpp"
#include "attnlab/errors.hpp"
#include "attnlab/lsh.hpp"
#include "attnlab/mask.hpp"
#include "attnlab/matrix.hpp"
#include "attnlab/pretrain.hpp"
#include "attnlab/rng.hpp"
#include "attnlab/synthesizer.hpp"

namespace py = pybind11;
using namespace attnlab;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
    Matrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    const double* src = a.data();
    std::copy(src, src + m.data.size(), m.data.begin());
    return m;
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> a({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), a.mutable_data());
    return a;
}

py::array_t<bool> mask_to_array(const AttentionMask& mask) {
    py::array_t<bool> a({mask.rows, mask.cols});
    bool* dst = a.mutable_data();
    for (std::size_t i = 0; i < mask.on.size(); ++i) dst[i] = mask.on[i] != 0;
    return a;
}

AttentionConfig build_config(const std::string& variant, int L, int D, int H, int C, int N,
                             double U, int m, int stride, int block, int summary_width) {
    AttentionConfig cfg;
    cfg.variant = parse_variant(variant);
    cfg.seq_len = L;
    cfg.model_dim = D;
    cfg.heads = H;
    cfg.candidates = C;
    cfg.synth_hidden = N;
    cfg.alsh_scale = U;
    cfg.alsh_order = m;
    cfg.stride = stride;
    cfg.block = block;
    cfg.summary_width = summary_width;
    return cfg;
}

HeadPattern parse_head_pattern(int pattern) {
    if (pattern == 1) return HeadPattern::PatternOne;
    if (pattern == 2) return HeadPattern::PatternTwo;
    throw ParseError("pattern must be 1 or 2");
}

PatternSpec parse_pattern_spec(const std::string& kind, int shift) {
    if (kind == "diagonal") return diagonal_pattern(shift);
    if (kind == "increasing") return increasing_pattern();
    if (kind == "decreasing") return decreasing_pattern();
    if (kind == "sparse") return sparse_pattern();
    throw ParseError("unknown pattern kind: " + kind +
                     " (expected diagonal, increasing, decreasing, or sparse)");
}

}  // namespace

PYBIND11_MODULE(_attnlab, mod) {
    mod.doc() = "Attention variants, cost model, benchmarks, and analysis helpers";

    py::register_exception<Error>(mod, "AttnlabError", PyExc_RuntimeError);

    mod.def("variants", [] {
        std::vector<std::string> tags;
        for (Variant v : all_variants()) tags.emplace_back(variant_tag(v));
        return tags;
    }, "Tags of every attention variant.");

    mod.def(
        "theoretical_cost",
        [](const std::string& variant, const std::string& phase, int L, int D, int H, int C,
           int N) {
            return theoretical_cost(parse_variant(variant), parse_phase(phase), L, D, H, C, N).ops;
        },
        py::arg("variant"), py::arg("phase"), py::arg("L") = 128, py::arg("D") = 64,
        py::arg("H") = 12, py::arg("C") = 32, py::arg("N") = 16,
        "Per-layer operation count of a variant at the given sizes.");

    mod.def(
        "cost_table",
        [](int L, int D, int H, int C, int N) {
            py::list rows;
            for (Variant v : all_variants()) {
                for (Phase phase : {Phase::Training, Phase::Inference}) {
                    const CostEstimate est = theoretical_cost(v, phase, L, D, H, C, N);
                    rows.append(py::make_tuple(variant_tag(v), phase_tag(phase), est.ops));
                }
            }
            return rows;
        },
        py::arg("L") = 128, py::arg("D") = 64, py::arg("H") = 12, py::arg("C") = 32,
        py::arg("N") = 16, "(variant, phase, ops) rows for every variant and phase.");

    mod.def(
        "attention_forward",
        [](const std::string& variant,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           std::uint64_t seed, int H, int C, int N, double U, int m, int stride, int block,
           int summary_width) {
            const Matrix input = to_matrix(x);
            AttentionConfig cfg = build_config(variant, input.rows, input.cols, H, C, N, U, m,
                                               stride, block, summary_width);
            const BenchModel model = BenchModel::build(cfg, seed);
            const AttentionResult result = model.forward(input);
            py::list heads;
            for (const Matrix& w : result.weights.head) heads.append(to_array(w));
            return py::make_tuple(to_array(result.output), heads);
        },
        py::arg("variant"), py::arg("x"), py::arg("seed") = 0, py::arg("H") = 12,
        py::arg("C") = 32, py::arg("N") = 16, py::arg("U") = 0.75, py::arg("m") = 2,
        py::arg("stride") = 0, py::arg("block") = 0, py::arg("summary_width") = 1,
        "Forward pass with seeded random weights: (output, [per-head attention]).");

    mod.def(
        "strided_mask",
        [](int len, int stride, int pattern) {
            return mask_to_array(strided_mask(len, stride, parse_head_pattern(pattern)));
        },
        py::arg("len"), py::arg("stride"), py::arg("pattern"),
        "Window (pattern 1) or strided-column (pattern 2) boolean mask.");

    mod.def(
        "fixed_mask",
        [](int len, int block, int summary_width, int pattern) {
            return mask_to_array(fixed_mask(len, block, summary_width, parse_head_pattern(pattern)));
        },
        py::arg("len"), py::arg("block"), py::arg("summary_width"), py::arg("pattern"),
        "Block-local (pattern 1) or block-summary (pattern 2) boolean mask.");

    mod.def(
        "row_softmax", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return to_array(row_softmax(to_matrix(x)));
        },
        py::arg("x"), "Softmax over each row.");

    mod.def(
        "masked_row_softmax",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<bool, py::array::c_style | py::array::forcecast>& mask) {
            const Matrix scores = to_matrix(x);
            if (mask.ndim() != 2 || mask.shape(0) != scores.rows || mask.shape(1) != scores.cols)
                throw ShapeError("mask shape must match the score shape");
            AttentionMask am(scores.rows, scores.cols);
            const bool* src = mask.data();
            for (std::size_t i = 0; i < am.on.size(); ++i) am.on[i] = src[i] ? 1 : 0;
            return to_array(masked_row_softmax(scores, am));
        },
        py::arg("x"), py::arg("mask"),
        "Row softmax over permitted entries; masked-out entries are exactly zero.");

    mod.def(
        "make_pattern",
        [](const std::string& kind, int len, int shift, std::uint64_t seed) {
            return to_array(make_pattern(parse_pattern_spec(kind, shift), len, seed));
        },
        py::arg("kind"), py::arg("len"), py::arg("shift") = 0, py::arg("seed") = 0,
        "Logit pattern: diagonal (with shift), increasing, decreasing, or sparse.");

    mod.def(
        "fixed_init_logits",
        [](int heads, int size_limit, std::uint64_t seed, bool generalize) {
            const RandomSynthLogits logits = build_fixed_init(heads, size_limit, seed, generalize);
            py::list out;
            for (const Matrix& t : logits.head_logits) out.append(to_array(t));
            return out;
        },
        py::arg("heads") = 12, py::arg("size_limit") = 128, py::arg("seed") = 0,
        py::arg("generalize") = false,
        "Pattern-initialized per-head logit tables (5 diagonal / 1 inc / 1 dec / 5 sparse).");

    mod.def(
        "classify_pattern",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& attn) {
            const PatternLabel label = classify_pattern(to_matrix(attn));
            return py::make_tuple(pattern_class_tag(label.label),
                                  std::vector<double>(label.scores.begin(), label.scores.end()));
        },
        py::arg("attention"),
        "(label, per-class scores) for a row-stochastic attention matrix.");

    mod.def(
        "select_candidates",
        [](const std::string& variant,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& queries,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& keys, int count,
           std::uint64_t seed, double U, int m) {
            const Matrix q = to_matrix(queries);
            const Matrix k = to_matrix(keys);
            TransformSpec spec;
            spec.scheme = scheme_of(parse_variant(variant));
            spec.scale_u = U;
            spec.order_m = m;
            Rng rng(seed);
            const HashDirection dir = random_hash_direction(transformed_dim(spec, q.cols), rng);
            const CandidateSet set = select_candidates(q, k, spec, dir, count);
            return set.per_query;
        },
        py::arg("variant"), py::arg("queries"), py::arg("keys"), py::arg("count"),
        py::arg("seed") = 0, py::arg("U") = 0.75, py::arg("m") = 2,
        "Per-query candidate key indices under the variant's transform scheme.");

    mod.def(
        "brute_force_mips",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& queries,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& keys, int top) {
            return brute_force_mips(to_matrix(queries), to_matrix(keys), top);
        },
        py::arg("queries"), py::arg("keys"), py::arg("top"),
        "Exact top-k key indices per query by inner product.");

    mod.def(
        "pca_project",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& data, int out_dim,
           std::uint64_t seed) {
            const PcaResult r = pca_project(to_matrix(data), out_dim, seed);
            return py::make_tuple(to_array(r.scores), to_array(r.components), r.variances);
        },
        py::arg("data"), py::arg("out_dim") = 2, py::arg("seed") = 0,
        "(scores, components, variances) of a principal-component projection.");

    mod.def(
        "run_benchmark",
        [](const std::string& variant, int L, int D, int H, int C, int N, int batches,
           std::uint64_t seed) {
            AttentionConfig cfg = build_config(variant, L, D, H, C, N, 0.75, 2, 0, 0, 1);
            const BenchRecord rec = run_benchmark(cfg.variant, cfg, batches, seed);
            py::dict out;
            out["variant"] = variant_tag(rec.variant);
            out["L"] = rec.L;
            out["D"] = rec.D;
            out["H"] = rec.H;
            out["C"] = rec.C;
            out["N"] = rec.N;
            out["batches"] = rec.batches;
            out["seconds"] = rec.seconds;
            out["seed"] = rec.seed;
            return out;
        },
        py::arg("variant"), py::arg("L") = 128, py::arg("D") = 60, py::arg("H") = 12,
        py::arg("C") = 32, py::arg("N") = 16, py::arg("batches") = 4, py::arg("seed") = 0,
        "Wall-clock seconds for `batches` forward passes after one warm-up.");

    mod.def(
        "toy_train",
        [](const std::string& variant, int L, int D, int H, int C, int N, int steps,
           int batch_size, double lr, double momentum, double ratio, int chunk,
           std::uint64_t seed) {
            AttentionConfig cfg = build_config(variant, L, D, H, C, N, 0.75, 2, 0, 0, 1);
            ToyModel model(cfg, seed);
            TrainConfig tc;
            tc.steps = steps;
            tc.batch_size = batch_size;
            tc.learning_rate = lr;
            tc.momentum = momentum;
            tc.mask_ratio = ratio;
            tc.chunk_width = chunk;
            tc.seed = seed;
            const TrainResult result = train(model, tc);
            Rng probe_rng(derive_seed(seed, "train/probe"));
            const Matrix probe = make_synthetic_frames(L, D, probe_rng);
            const AttentionWeights weights = model.probe_weights(probe);
            py::list heads;
            for (const Matrix& w : weights.head) heads.append(to_array(w));
            py::dict out;
            out["losses"] = result.losses;
            out["attention"] = heads;
            return out;
        },
        py::arg("variant"), py::arg("L") = 32, py::arg("D") = 12, py::arg("H") = 2,
        py::arg("C") = 8, py::arg("N") = 8, py::arg("steps") = 10, py::arg("batch_size") = 2,
        py::arg("lr") = 1e-3, py::arg("momentum") = 0.9, py::arg("ratio") = 0.15,
        py::arg("chunk") = 3, py::arg("seed") = 0,
        "Masked-reconstruction training on synthetic frames; returns per-step losses and "
        "the post-training attention matrices.");
}
