#include "attnlab/runconfig.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "attnlab/bench.hpp"
#include "attnlab/cost.hpp"
#include "attnlab/errors.hpp"
#include "attnlab/io.hpp"

namespace attnlab {

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "subcommand", "variant", "L", "D", "H", "C", "N", "U", "m",
        "stride", "block", "summary_width", "seed", "steps", "batch", "lr",
        "momentum", "ratio", "chunk", "batches", "reps", "outdir",
    };
    return keys;
}

long long parse_int(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(text, &used);
        if (used != text.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("value of " + key + " is not an integer: " + text);
    }
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("value of " + key + " is not a number: " + text);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(text, &used);
        if (used != text.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("value of " + key + " is not an unsigned integer: " + text);
    }
}

void apply_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "subcommand") {
        cfg.subcommand = value;
    } else if (key == "variant") {
        cfg.attn.variant = parse_variant(value);
        cfg.variant_set = true;
    } else if (key == "L") {
        cfg.attn.seq_len = static_cast<int>(parse_int(key, value));
    } else if (key == "D") {
        cfg.attn.model_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "H") {
        cfg.attn.heads = static_cast<int>(parse_int(key, value));
    } else if (key == "C") {
        cfg.attn.candidates = static_cast<int>(parse_int(key, value));
    } else if (key == "N") {
        cfg.attn.synth_hidden = static_cast<int>(parse_int(key, value));
    } else if (key == "U") {
        cfg.attn.alsh_scale = parse_double(key, value);
    } else if (key == "m") {
        cfg.attn.alsh_order = static_cast<int>(parse_int(key, value));
    } else if (key == "stride") {
        cfg.attn.stride = static_cast<int>(parse_int(key, value));
    } else if (key == "block") {
        cfg.attn.block = static_cast<int>(parse_int(key, value));
    } else if (key == "summary_width") {
        cfg.attn.summary_width = static_cast<int>(parse_int(key, value));
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
        cfg.trainer.seed = cfg.seed;
    } else if (key == "steps") {
        cfg.trainer.steps = static_cast<int>(parse_int(key, value));
    } else if (key == "batch") {
        cfg.trainer.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "lr") {
        cfg.trainer.learning_rate = parse_double(key, value);
    } else if (key == "momentum") {
        cfg.trainer.momentum = parse_double(key, value);
    } else if (key == "ratio") {
        cfg.trainer.mask_ratio = parse_double(key, value);
    } else if (key == "chunk") {
        cfg.trainer.chunk_width = static_cast<int>(parse_int(key, value));
    } else if (key == "batches") {
        cfg.batches = static_cast<int>(parse_int(key, value));
    } else if (key == "reps") {
        cfg.reps = static_cast<int>(parse_int(key, value));
    } else if (key == "outdir") {
        cfg.outdir = value;
    } else {
        throw UnknownParameterError("unknown parameter: " + key);
    }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
        auto begin = std::find_if_not(line.begin(), line.end(), is_space);
        auto end = std::find_if_not(line.rbegin(), line.rend(), is_space).base();
        if (begin >= end) continue;
        const std::string trimmed(begin, end);
        const std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = trimmed.substr(0, eq);
        std::string value = trimmed.substr(eq + 1);
        auto trim = [&](std::string& s) {
            while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
            std::size_t i = 0;
            while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
            s.erase(0, i);
        };
        trim(key);
        trim(value);
        if (key.empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty key");
        entries[key] = value;  // later lines win within one file
    }
    return entries;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

constexpr const char* kVersion = "1.0.0";

std::vector<std::pair<std::string, std::string>> manifest_config(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> entries;
    entries.emplace_back("version", kVersion);
    entries.emplace_back("subcommand", cfg.subcommand);
    entries.emplace_back("variant", cfg.variant_set ? variant_tag(cfg.attn.variant) : "all");
    entries.emplace_back("L", std::to_string(cfg.attn.seq_len));
    entries.emplace_back("D", std::to_string(cfg.attn.model_dim));
    entries.emplace_back("H", std::to_string(cfg.attn.heads));
    entries.emplace_back("C", std::to_string(cfg.attn.candidates));
    entries.emplace_back("N", std::to_string(cfg.attn.synth_hidden));
    entries.emplace_back("U", format_double(cfg.attn.alsh_scale));
    entries.emplace_back("m", std::to_string(cfg.attn.alsh_order));
    entries.emplace_back("stride", std::to_string(cfg.attn.stride));
    entries.emplace_back("block", std::to_string(cfg.attn.block));
    entries.emplace_back("summary_width", std::to_string(cfg.attn.summary_width));
    entries.emplace_back("seed", std::to_string(cfg.seed));
    entries.emplace_back("steps", std::to_string(cfg.trainer.steps));
    entries.emplace_back("batch", std::to_string(cfg.trainer.batch_size));
    entries.emplace_back("lr", format_double(cfg.trainer.learning_rate));
    entries.emplace_back("momentum", format_double(cfg.trainer.momentum));
    entries.emplace_back("ratio", format_double(cfg.trainer.mask_ratio));
    entries.emplace_back("chunk", std::to_string(cfg.trainer.chunk_width));
    entries.emplace_back("batches", std::to_string(cfg.batches));
    entries.emplace_back("reps", std::to_string(cfg.reps));
    entries.emplace_back("outdir", cfg.outdir);
    return entries;
}

std::filesystem::path ensure_outdir(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.outdir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.outdir + ": " + ec.message());
    return dir;
}

std::vector<Variant> selected_variants(const RunConfig& cfg) {
    if (cfg.variant_set) return {cfg.attn.variant};
    return all_variants();
}

std::string two_digits(int n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", n);
    return buf;
}

int run_cost(const RunConfig& cfg) {
    const auto dir = ensure_outdir(cfg);
    std::vector<CostEstimate> rows;
    std::printf("%-16s %16s %16s\n", "variant", "training-ops", "inference-ops");
    for (Variant v : selected_variants(cfg)) {
        for (Phase phase : {Phase::Training, Phase::Inference}) {
            rows.push_back(theoretical_cost(v, phase, cfg.attn.seq_len, cfg.attn.model_dim,
                                            cfg.attn.heads, cfg.attn.candidates,
                                            cfg.attn.synth_hidden));
        }
        std::printf("%-16s %16lld %16lld\n", variant_tag(v), rows[rows.size() - 2].ops,
                    rows.back().ops);
    }
    write_cost_csv(rows, (dir / "cost.csv").string());
    auto manifest = manifest_config(cfg);
    manifest.emplace_back("output", "cost.csv");
    write_manifest(manifest, (dir / "manifest.txt").string());
    return 0;
}

int run_bench(const RunConfig& cfg) {
    if (cfg.batches < 1) throw ConfigError("bench: batches must be >= 1");
    if (cfg.reps < 1) throw ConfigError("bench: reps must be >= 1");
    const auto dir = ensure_outdir(cfg);
    std::vector<BenchRecord> records;
    for (Variant v : selected_variants(cfg))
        for (int rep = 0; rep < cfg.reps; ++rep)
            records.push_back(run_benchmark(v, cfg.attn, cfg.batches, cfg.seed));
    write_bench_csv(records, (dir / "bench.csv").string());
    auto manifest = manifest_config(cfg);
    manifest.emplace_back("output", "bench.csv");
    write_manifest(manifest, (dir / "manifest.txt").string());
    return 0;
}

int run_train(const RunConfig& cfg) {
    const auto dir = ensure_outdir(cfg);
    ToyModel model(cfg.attn, cfg.seed);
    const TrainResult result = train(model, cfg.trainer);

    const std::string tag = variant_tag(cfg.attn.variant);
    auto manifest = manifest_config(cfg);

    const std::string loss_name = tag + "_loss.csv";
    write_loss_csv(result.losses, (dir / loss_name).string());
    manifest.emplace_back("output", loss_name);

    Rng probe_rng(derive_seed(cfg.seed, "train/probe"));
    const Matrix probe = make_synthetic_frames(cfg.attn.seq_len, cfg.attn.model_dim, probe_rng);
    const AttentionWeights weights = model.probe_weights(probe);
    for (std::size_t h = 0; h < weights.head.size(); ++h) {
        const std::string name = tag + "_weights_head_" + two_digits(static_cast<int>(h)) + ".csv";
        write_matrix_csv(weights.head[h], (dir / name).string());
        manifest.emplace_back("output", name);
    }
    write_manifest(manifest, (dir / "manifest.txt").string());
    return 0;
}

int run_analyze(const RunConfig& cfg) {
    const auto dir = ensure_outdir(cfg);
    ToyModel model(cfg.attn, cfg.seed);

    Rng probe_rng(derive_seed(cfg.seed, "analyze/input"));
    const Matrix probe = make_synthetic_frames(cfg.attn.seq_len, cfg.attn.model_dim, probe_rng);
    const AttentionWeights weights = model.probe_weights(probe);
    if (weights.head.size() < 2)
        throw ConfigError("analyze: need at least two attention heads to embed");

    const Matrix flat = flatten_attention(weights);
    const PcaResult pca = pca_project(flat, 2, cfg.seed);

    auto manifest = manifest_config(cfg);
    write_embedding_csv(pca.scores, (dir / "head_embedding.csv").string());
    manifest.emplace_back("output", "head_embedding.csv");

    std::array<int, 4> counts{};
    std::ostringstream patterns;
    for (std::size_t h = 0; h < weights.head.size(); ++h) {
        const PatternLabel label = classify_pattern(weights.head[h]);
        ++counts[static_cast<std::size_t>(label.label)];
        patterns << "head " << two_digits(static_cast<int>(h)) << ": "
                 << pattern_class_tag(label.label) << '\n';
    }
    patterns << counts[0] << " Diagonal, " << counts[1] << " Increasing, " << counts[2]
             << " Decreasing, " << counts[3] << " Sparse\n";
    {
        std::ofstream f(dir / "patterns.txt");
        if (!f) throw IoError("cannot open for writing: " + (dir / "patterns.txt").string());
        f << patterns.str();
    }
    manifest.emplace_back("output", "patterns.txt");
    write_manifest(manifest, (dir / "manifest.txt").string());
    return 0;
}

}  // namespace

std::string usage() {
    std::ostringstream out;
    out << "usage: attnlab <cost|bench|train|analyze> [--config FILE] [--key=value ...]\n"
        << "\n"
        << "subcommands\n"
        << "  cost     theoretical per-layer operation counts -> cost.csv\n"
        << "  bench    wall-clock forward timings              -> bench.csv\n"
        << "  train    toy masked-reconstruction training      -> <variant>_loss.csv,\n"
        << "           <variant>_weights_head_NN.csv\n"
        << "  analyze  head embedding and pattern labels       -> head_embedding.csv,\n"
        << "           patterns.txt\n"
        << "\n"
        << "keys (flags override --config entries)\n"
        << "  variant   one of:";
    for (Variant v : all_variants()) out << ' ' << variant_tag(v);
    out << "\n"
        << "            cost/bench default to every variant; train defaults to baseline-qk;\n"
        << "            analyze defaults to ours\n"
        << "  L D H C N sequence length, model width, heads, candidates, synthesizer hidden\n"
        << "  U m       transform scale and norm-power order for sign-alsh\n"
        << "  stride block summary_width   sparse mask geometry (0 = ceil(sqrt(L)))\n"
        << "  seed      master seed (every random stream derives from it)\n"
        << "  steps batch lr momentum ratio chunk   trainer settings\n"
        << "  batches reps                          benchmark settings\n"
        << "  outdir    output directory (default: out)\n"
        << "\n"
        << "config files hold the same keys, one key=value per line, # comments;\n"
        << "the subcommand may come from a subcommand= entry instead of the command line.\n";
    return out.str();
}

RunConfig parse_args(const std::vector<std::string>& args) {
    std::map<std::string, std::string> file_entries;
    std::vector<std::pair<std::string, std::string>> flag_entries;
    bool help = false;

    std::size_t i = 0;
    if (i < args.size() && !args[i].empty() && args[i][0] != '-') {
        flag_entries.emplace_back("subcommand", args[i]);
        ++i;
    }
    for (; i < args.size(); ++i) {
        const std::string& arg = args[i];
        if (arg == "--help" || arg == "-h") {
            help = true;
            continue;
        }
        if (arg.rfind("--", 0) != 0)
            throw ParseError("expected --key=value or --key value, got: " + arg);
        std::string key = arg.substr(2);
        std::string value;
        const std::size_t eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= args.size()) throw ParseError("flag --" + key + " needs a value");
            value = args[++i];
        }
        if (key.empty()) throw ParseError("empty flag name");
        if (key == "config") {
            for (auto& [k, v] : read_config_file(value)) file_entries[k] = v;
        } else {
            flag_entries.emplace_back(key, value);
        }
    }

    RunConfig cfg;
    cfg.show_help = help;
    for (const auto& [key, value] : file_entries) apply_entry(cfg, key, value);
    for (const auto& [key, value] : flag_entries) apply_entry(cfg, key, value);
    if (help) return cfg;

    if (cfg.subcommand.empty())
        throw ParseError("missing subcommand (cost, bench, train, or analyze)");
    if (cfg.subcommand != "cost" && cfg.subcommand != "bench" && cfg.subcommand != "train" &&
        cfg.subcommand != "analyze")
        throw ParseError("unknown subcommand: " + cfg.subcommand);

    if (cfg.subcommand == "analyze" && !cfg.variant_set) {
        cfg.attn.variant = Variant::Ours;
        cfg.variant_set = true;
    }
    cfg.attn.validate();
    return cfg;
}

int run(const RunConfig& cfg) {
    if (cfg.subcommand == "cost") return run_cost(cfg);
    if (cfg.subcommand == "bench") return run_bench(cfg);
    if (cfg.subcommand == "train") return run_train(cfg);
    if (cfg.subcommand == "analyze") return run_analyze(cfg);
    throw ConfigError("unknown subcommand: " + cfg.subcommand);
}

}  // namespace attnlab
