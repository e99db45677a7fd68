#include "corruptlab/corruption.hpp"

#include <cmath>
#include <stdexcept>

namespace corruptlab::corrupt {

Kind kind_from_string(const std::string& s) {
    if (s == "none") return Kind::None;
    if (s == "vehicle_missing") return Kind::VehicleMissing;
    if (s == "cell_noise") return Kind::CellNoise;
    if (s == "mask_region") return Kind::MaskRegion;
    if (s == "token_missing") return Kind::TokenMissing;
    throw std::invalid_argument("unknown corruption kind: " + s);
}

std::string kind_to_string(Kind k) {
    switch (k) {
        case Kind::None: return "none";
        case Kind::VehicleMissing: return "vehicle_missing";
        case Kind::CellNoise: return "cell_noise";
        case Kind::MaskRegion: return "mask_region";
        case Kind::TokenMissing: return "token_missing";
    }
    return "none";
}

sim::Observation apply_cell_noise(const sim::Observation& obs, double p, Rng& rng) {
    if (p <= 0.0) return obs;
    sim::Observation out = obs;
    for (int i = 0; i < sim::kOccupancyBits; ++i)
        if (rng.bernoulli(p)) out.set_cell(i, rng.bernoulli(0.5));
    return out;
}

double corrupt_step_reward(double reward, double p, Rng& rng) {
    if (p > 0.0 && rng.bernoulli(p)) return rng.uniform(-1.0, 1.0);
    return reward;
}

sim::Observation apply_mask_region(const sim::Observation& obs, double p) {
    if (p <= 0.0) return obs;
    const int first_masked =
        static_cast<int>(std::ceil((1.0 - p) * sim::kCellsPerLane));
    sim::Observation out = obs;
    for (int lane = 0; lane < sim::kLanes; ++lane)
        for (int c = first_masked; c < sim::kCellsPerLane; ++c)
            out.set_cell(lane * sim::kCellsPerLane + c, false);
    return out;
}

std::vector<std::uint32_t> apply_token_missing(const std::vector<std::uint32_t>& tokens,
                                               double p, Rng& rng) {
    std::vector<std::uint32_t> out = tokens;
    if (p <= 0.0) return out;
    for (auto& t : out)
        if (rng.bernoulli(p)) t = kMissingToken;
    return out;
}

}  // namespace corruptlab::corrupt
