#include "attnlab/cost.hpp"

namespace attnlab {

const char* phase_tag(Phase p) { return p == Phase::Training ? "training" : "inference"; }

Phase parse_phase(std::string_view tag) {
    if (tag == "training") return Phase::Training;
    if (tag == "inference") return Phase::Inference;
    throw ParseError("unknown phase '" + std::string(tag) + "' (expected training or inference)");
}

CostEstimate theoretical_cost(Variant v, Phase phase, int L, int D, int H, int C, int N) {
    if (L < 1 || D < 1 || H < 1 || C < 1 || N < 1)
        throw ConfigError("theoretical_cost: all size parameters must be positive");
    long long l = L, d = D, h = H, c = C, n = N;
    long long s = ceil_sqrt(L);
    bool train = phase == Phase::Training;
    long long ops = 0;
    switch (v) {
        case Variant::BaselineQK:
            ops = train ? 4 * l * d + 2 * h * l * l : 2 * l * d + h * l * l;
            break;
        case Variant::BaselineQ:
            ops = train ? 2 * l * d + 2 * h * l * l : l * d + h * l * l;
            break;
        case Variant::SparseStrided:
            ops = train ? 2 * l * d + 2 * h * l * s + h * l * s
                        : l * d + h * l * s + h * l * s / 2;
            break;
        case Variant::SparseFixed:
            ops = train ? 2 * l * d + h * l * s + h * l * s
                        : l * d + h * l * s / 2 + h * l * s / 2;
            break;
        case Variant::SignALSH:
        case Variant::XBox:
        case Variant::XBoxQNF:
        case Variant::SimpleLSH:
        case Variant::SimpleALSH: {
            long long hashing = (h * l + 2 * h * l * l) / 2;
            ops = train ? 2 * l * d + hashing + 2 * h * l * c : l * d + hashing + h * l * c;
            break;
        }
        case Variant::SynDense:
            ops = train ? 2 * l * n + 2 * l * l : l * n + l * l;
            break;
        case Variant::SynDenseMH:
            ops = train ? 2 * h * l * n + 2 * h * l * l : h * l * n + h * l * l;
            break;
        case Variant::SynRandom:
        case Variant::Ours:
            ops = train ? h * l * l : 0;
            break;
    }
    return {v, phase, ops};
}

}  // namespace attnlab
