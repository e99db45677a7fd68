#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corruptlab/rng.hpp"
#include "corruptlab/sim.hpp"

namespace corruptlab::impute {

enum class Method {
    None = 0,
    ArtificialExact,  // fill known-missing slots; noise level q is the dial
    ContextFill,      // occupancy-grid neighbor voting (general imputation)
};

struct ImputationSpec {
    Method method = Method::None;
    double q = 0.0;  // ArtificialExact only
    int window = 2;  // ContextFill: neighbors considered on each side
    int threshold = 3;  // ContextFill: occupied neighbors required
    std::uint64_t seed = 0;
};

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);

// Fills every kMissingToken slot: with probability q a uniform random token
// from [0, vocab), otherwise the original token. Non-missing slots are never
// touched. Throws if the two sequences are not aligned.
std::vector<std::uint32_t> impute_tokens_exact(const std::vector<std::uint32_t>& corrupted,
                                               const std::vector<std::uint32_t>& original,
                                               double q, std::uint32_t vocab, Rng& rng);

// Occupancy variant: missing positions are the cells occupied in the
// harness-supplied ground truth but absent from the corrupted view. Each is
// set to the original value (1) with probability 1-q, otherwise to a uniform
// random bit. Phase fields are untouched.
sim::Observation impute_cells_exact(const sim::Observation& corrupted,
                                    const sim::Observation& original, double q,
                                    Rng& rng);

// One non-iterated pass per lane: a zero cell becomes 1 iff at least
// `threshold` of its up-to-2w same-lane neighbors are occupied in the input.
// At lane ends the threshold scales to ceil(threshold * available / (2w)).
sim::Observation context_fill(const sim::Observation& obs, int window, int threshold);

}  // namespace corruptlab::impute
