#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "corruptlab/rng.hpp"

namespace corruptlab::sim {

// Geometry and dynamics constants for the single-intersection model.
// 12 approach lanes (E=0..2, W=3..5, N=6..8, S=9..11), 400 m each,
// discretized into 80 cells of 5 m. Stop line sits at 400 m.
inline constexpr int kLanes = 12;
inline constexpr int kCellsPerLane = 80;
inline constexpr double kCellMeters = 5.0;
inline constexpr double kLaneMeters = 400.0;
inline constexpr double kVmax = 15.0;          // m/s, 3 cells per second
inline constexpr int kDischargeHeadway = 2;    // s between departures (~1800 veh/h)
inline constexpr double kStopSpeed = 0.3;      // m/s, below this counts as queued
inline constexpr int kOccupancyBits = kLanes * kCellsPerLane;  // 960
inline constexpr int kObservationDim = kOccupancyBits + 4 + 1; // 965

enum class Movement : std::uint8_t { Left = 0, Through = 1, Right = 2 };

enum class Phase : std::uint8_t {
    EWLeft = 0,
    EWThrough = 1,
    NSLeft = 2,
    NSThrough = 3,
};
inline constexpr int kPhases = 4;

struct Vehicle {
    float position;   // meters from lane entry, stop line at 400
    float speed;      // meters moved during the last second
    Movement movement;
    bool equipped;    // visible to roadside sensing
};

// Agent input: 960 occupancy bits + 4-bit phase one-hot + normalized duration.
// Bit index = lane * 80 + cell, cell 0 adjacent to the stop line.
struct Observation {
    std::array<std::uint64_t, 15> occupancy{};  // 960 bits
    std::uint8_t phase = 0;
    float duration = 0.0f;  // seconds in phase / 60, clipped to [0, 2]

    bool cell(int idx) const {
        return (occupancy[idx >> 6] >> (idx & 63)) & 1u;
    }
    void set_cell(int idx, bool v) {
        if (v)
            occupancy[idx >> 6] |= (1ULL << (idx & 63));
        else
            occupancy[idx >> 6] &= ~(1ULL << (idx & 63));
    }
    int occupied_count() const;

    // Dense 965-vector: cells, phase one-hot, duration.
    std::vector<float> to_dense() const;

    bool operator==(const Observation& o) const {
        return occupancy == o.occupancy && phase == o.phase && duration == o.duration;
    }
};

struct DemandProfile {
    double peak_rate = 0.12;  // vehicles/second/lane at the modulation peak
    // Left : Through : Right = 1 : 3 : 2, used as sampling probabilities.
    double p_left = 1.0 / 6.0;
    double p_through = 3.0 / 6.0;
    int horizon = 3600;  // seconds per episode
};

struct StepResult {
    Observation obs;                    // ground-truth observation after the action
    double reward = 0.0;                // sum of the 6 per-second rewards
    std::array<double, 6> second_rewards{};
    std::array<int, 6> second_queues{};
    bool done = false;
};

struct EpisodeResult {
    std::vector<double> returns_per_decision;
    double episode_return = 0.0;        // sum of per-second step rewards
    std::vector<int> queue_trajectory;  // one entry per second
    int decision_count = 0;
};

struct PlanEntry {
    Phase phase;
    int seconds;  // multiple of the 6 s action length
};
using FixedPlan = std::vector<PlanEntry>;

double step_reward(int queue_count);

// Bernoulli arrival probability for one lane at step t: the EW rate follows
// peak * sin(pi t / 2H), NS follows peak * cos(pi t / 2H), clipped to [0, 1].
double arrival_rate(const DemandProfile& demand, int t, bool east_west);

// Plan selected by grid search over per-phase greens {12..36} at default
// demand (see optimize_fixed_plan); kept as the package default baseline.
FixedPlan default_fixed_plan();

class TrafficEnv {
public:
    explicit TrafficEnv(const DemandProfile& demand, std::uint64_t seed,
                        double equipped_prob = 1.0, std::uint64_t detect_seed = 0);

    void reset(std::uint64_t seed);

    // One second of car following and queue discharge (no arrivals, no clock).
    void advance_one_second();

    // Vehicles that failed to move during the last advance (speed < 0.3 m/s).
    int count_queued() const;

    // advance + queue count + arrivals + clock tick; returns the queue count.
    int tick();

    // Applies the action for 6 seconds. Throws if the episode is done.
    StepResult decision_step(Phase action);

    // Scripted-scene support: places a vehicle keeping the per-lane ordering
    // and minimum-gap invariants (throws when violated), and forces a phase.
    void inject_vehicle(int lane_id, double position, Movement m, bool equipped = true);
    void set_phase(Phase p);

    Observation observe_truth() const;     // every vehicle
    Observation observe_detected() const;  // equipped vehicles only

    bool done() const { return t_ >= demand_.horizon; }
    int time() const { return t_; }
    Phase phase() const { return phase_; }
    int phase_elapsed() const { return phase_elapsed_; }
    int decisions_per_episode() const { return demand_.horizon / 6; }

    int vehicle_count() const;
    long spawned() const { return spawned_; }
    long spawned_equipped() const { return spawned_equipped_; }
    long departed() const { return departed_; }
    long dropped_arrivals() const { return dropped_; }
    long arrival_attempts_ew() const { return attempts_ew_; }
    long arrival_attempts_ns() const { return attempts_ns_; }
    const std::vector<Vehicle>& lane(int i) const { return lanes_[i]; }

    // FNV hash of the full dynamic state; used by replay-determinism tests.
    std::uint64_t state_hash() const;

private:
    void spawn_arrivals();
    bool movement_has_green(int lane_id, Movement m) const;

    DemandProfile demand_;
    std::array<std::vector<Vehicle>, kLanes> lanes_;
    std::array<int, kLanes> next_discharge_{};  // earliest second of next departure
    Phase phase_ = Phase::EWThrough;
    int phase_elapsed_ = 0;
    int t_ = 0;
    long spawned_ = 0, spawned_equipped_ = 0, departed_ = 0, dropped_ = 0;
    long attempts_ew_ = 0, attempts_ns_ = 0;
    Rng arrivals_rng_;
    Rng detect_rng_;
    double equipped_prob_ = 1.0;
    std::uint64_t seed_ = 0, detect_seed_ = 0;
};

// Runs one episode under a cyclic fixed-timing plan. The plan is treated as a
// cycle: it is rotated to a canonical starting phase, so cyclically permuted
// plans produce identical episodes. Throws on invalid plans (durations not
// multiples of 6, or not all four phases present).
EpisodeResult run_fixed_timing(TrafficEnv& env, const FixedPlan& plan);

// Mean episode return of a plan over the given seeds at this demand.
double evaluate_plan(const DemandProfile& demand, const FixedPlan& plan,
                     const std::vector<std::uint64_t>& seeds);

// Exhaustive grid search over per-phase green durations, maximizing mean
// return over the seeds. Phase order in the cycle is fixed
// (EW-Left, EW-Through, NS-Left, NS-Through); greens vary independently.
FixedPlan optimize_fixed_plan(const DemandProfile& demand,
                              const std::vector<std::uint64_t>& seeds,
                              const std::vector<int>& greens = {12, 18, 24, 30, 36});

}  // namespace corruptlab::sim
