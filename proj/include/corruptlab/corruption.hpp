#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corruptlab/rng.hpp"
#include "corruptlab/sim.hpp"

namespace corruptlab::corrupt {

// Sentinel for a token destroyed by TokenMissing corruption.
inline constexpr std::uint32_t kMissingToken = 0xffffffffu;

enum class Kind {
    None = 0,
    VehicleMissing,  // Signal-RL: undetected vehicles vanish from occupancy
    CellNoise,       // Signal-RL: cells and step rewards randomly rewritten
    MaskRegion,      // Signal-RL: far end of every lane invisible
    TokenMissing,    // pattern task: tokens replaced by the MISSING sentinel
};

struct CorruptionSpec {
    Kind kind = Kind::None;
    double p = 0.0;
    std::uint64_t seed = 0;
};

Kind kind_from_string(const std::string& s);
std::string kind_to_string(Kind k);

// Detection probability the simulator should apply at spawn. VehicleMissing
// hides each vehicle for its whole lifetime with probability p; every other
// corruption leaves detection perfect.
inline double equipped_probability(const CorruptionSpec& c) {
    return c.kind == Kind::VehicleMissing ? 1.0 - c.p : 1.0;
}

// Each of the 960 occupancy cells is independently replaced by a random
// binary value with probability p. Phase fields are untouched.
sim::Observation apply_cell_noise(const sim::Observation& obs, double p, Rng& rng);

// With probability p the per-second step reward is replaced by U[-1, 1].
double corrupt_step_reward(double reward, double p, Rng& rng);

// Cells with index >= ceil((1-p) * 80) in each lane are zeroed (index 0 at
// the stop line, so the far end of the lane goes dark first).
sim::Observation apply_mask_region(const sim::Observation& obs, double p);

// Each token independently becomes kMissingToken with probability p.
std::vector<std::uint32_t> apply_token_missing(const std::vector<std::uint32_t>& tokens,
                                               double p, Rng& rng);

}  // namespace corruptlab::corrupt
