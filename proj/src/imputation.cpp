#include "corruptlab/imputation.hpp"

#include <cmath>
#include <stdexcept>

#include "corruptlab/corruption.hpp"

namespace corruptlab::impute {

Method method_from_string(const std::string& s) {
    if (s == "none") return Method::None;
    if (s == "artificial" || s == "artificial_exact") return Method::ArtificialExact;
    if (s == "context_fill") return Method::ContextFill;
    throw std::invalid_argument("unknown imputation method: " + s);
}

std::string method_to_string(Method m) {
    switch (m) {
        case Method::None: return "none";
        case Method::ArtificialExact: return "artificial";
        case Method::ContextFill: return "context_fill";
    }
    return "none";
}

std::vector<std::uint32_t> impute_tokens_exact(const std::vector<std::uint32_t>& corrupted,
                                               const std::vector<std::uint32_t>& original,
                                               double q, std::uint32_t vocab, Rng& rng) {
    if (corrupted.size() != original.size())
        throw std::invalid_argument("impute_tokens_exact: misaligned inputs");
    std::vector<std::uint32_t> out = corrupted;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] != corrupt::kMissingToken) continue;
        if (q > 0.0 && rng.bernoulli(q))
            out[i] = static_cast<std::uint32_t>(rng.below(vocab));
        else
            out[i] = original[i];
    }
    return out;
}

sim::Observation impute_cells_exact(const sim::Observation& corrupted,
                                    const sim::Observation& original, double q,
                                    Rng& rng) {
    sim::Observation out = corrupted;
    for (int i = 0; i < sim::kOccupancyBits; ++i) {
        if (!original.cell(i) || corrupted.cell(i)) continue;  // not a missing slot
        if (q > 0.0 && rng.bernoulli(q))
            out.set_cell(i, rng.bernoulli(0.5));
        else
            out.set_cell(i, true);
    }
    return out;
}

sim::Observation context_fill(const sim::Observation& obs, int window, int threshold) {
    if (window < 1) throw std::invalid_argument("context_fill: window must be >= 1");
    if (threshold < 1 || threshold > 2 * window)
        throw std::invalid_argument("context_fill: threshold must be in [1, 2w]");
    sim::Observation out = obs;
    for (int lane = 0; lane < sim::kLanes; ++lane) {
        const int base = lane * sim::kCellsPerLane;
        for (int c = 0; c < sim::kCellsPerLane; ++c) {
            if (obs.cell(base + c)) continue;
            int available = 0, occupied = 0;
            for (int d = 1; d <= window; ++d) {
                if (c - d >= 0) {
                    ++available;
                    occupied += obs.cell(base + c - d) ? 1 : 0;
                }
                if (c + d < sim::kCellsPerLane) {
                    ++available;
                    occupied += obs.cell(base + c + d) ? 1 : 0;
                }
            }
            const int need = static_cast<int>(
                std::ceil(static_cast<double>(threshold) * available / (2.0 * window)));
            if (available > 0 && occupied >= need) out.set_cell(base + c, true);
        }
    }
    return out;
}

}  // namespace corruptlab::impute
