#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attnlab/attention.hpp"
#include "attnlab/pretrain.hpp"

namespace attnlab {

// Everything a CLI invocation needs: the subcommand plus one flat key=value
// namespace shared by flags and config files. Flags override config-file
// entries; unknown keys are rejected by name.
struct RunConfig {
    std::string subcommand;  // cost | bench | train | analyze
    AttentionConfig attn;
    TrainConfig trainer;
    std::uint64_t seed = 0;
    int batches = 4;  // forward passes timed per benchmark run
    int reps = 1;     // benchmark rows per variant
    std::string outdir = "out";
    bool variant_set = false;  // restricts cost/bench to attn.variant
    bool show_help = false;
};

std::string usage();

// Parses argv[1..]: an optional leading subcommand, `--config FILE` for
// key=value files (`#` comments), and `--key=value` / `--key value` flags.
RunConfig parse_args(const std::vector<std::string>& args);

// Executes the subcommand, writing its outputs and manifest.txt under
// cfg.outdir. Returns the process exit code.
int run(const RunConfig& cfg);

}  // namespace attnlab
