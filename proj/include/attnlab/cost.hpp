#pragma once

#include <string_view>

#include "attnlab/attention.hpp"

namespace attnlab {

enum class Phase { Training, Inference };

const char* phase_tag(Phase p);
Phase parse_phase(std::string_view tag);  // ParseError on unknown tags

struct CostEstimate {
    Variant variant;
    Phase phase;
    long long ops = 0;
};

// Symbolic per-layer operation count for a variant at the given sizes.
// Square roots of the sequence length enter as ceil(sqrt(L)); divisions are
// exact integer halvings of even products at the tabulated sizes and floor
// otherwise. Input-independent table variants cost nothing at inference: their
// attention weights are fixed once training ends.
CostEstimate theoretical_cost(Variant v, Phase phase, int L, int D, int H, int C, int N);

}  // namespace attnlab
