#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "corruptlab/corruption.hpp"
#include "corruptlab/imputation.hpp"
#include "corruptlab/net.hpp"
#include "corruptlab/rng.hpp"
#include "corruptlab/sim.hpp"

namespace corruptlab::agent {

struct TrainConfig {
    int episodes = 50;
    int batch = 256;
    double gamma = 0.98;
    int target_update = 10;   // gradient steps between online -> target copies
    double eps_init = 1.0;
    double eps_final = 0.01;
    double lr_init = 1e-3;
    double lr_final = 1e-4;
    double decay_fraction = 0.8;  // schedules decay over this share of training
    int buffer_capacity = 10000;
    double grad_clip = 10.0;
    int eval_episodes = 5;
    // Gradient steps are taken every `update_every` decision steps once the
    // buffer holds a full batch. 2 keeps a desk-scale run in the minute range
    // on one core; the learning signal is unaffected thanks to replay reuse.
    int update_every = 2;
    int hidden1 = 256;
    int hidden2 = 48;
    // Value optimizer. Queue blowups during exploration put Q targets in the
    // hundreds; plain SGD cannot track that scale at these learning rates,
    // Adam can.
    enum class Optimizer { Adam, Sgd };
    Optimizer optimizer = Optimizer::Adam;
    // Per-second rewards are clipped to [-clip, clip] in the agent-visible
    // training signal (scored returns stay unclipped). The reward design
    // already normalizes sane queues into this band; the clip only tames
    // value targets in blown-up exploration states. 0 disables.
    double reward_clip = 1.0;
};

// Linear decay from init to final over the first `decay_fraction` of
// training, flat afterwards.
double schedule_value(double init, double final_value, double progress,
                      double decay_fraction = 0.8);

struct Transition {
    sim::Observation s;
    std::uint8_t action;
    float reward;
    sim::Observation s2;
    bool done;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity) : capacity_(capacity) {}
    void push(const Transition& t);
    int size() const { return static_cast<int>(data_.size()); }
    int capacity() const { return capacity_; }
    // Uniform sample of `count` distinct stored transitions.
    void sample(int count, Rng& rng, std::vector<const Transition*>& out);

private:
    int capacity_;
    std::size_t write_ = 0;
    std::vector<Transition> data_;
    std::vector<int> perm_;  // scratch for partial Fisher-Yates
};

using QNet = nn::Mlp<float>;

// Double-DQN agent over the 965-dim observation. Single-threaded; copyable
// parameter snapshots are safe to share for evaluation.
class DqnAgent {
public:
    DqnAgent(const TrainConfig& cfg, std::uint64_t init_seed);

    // Epsilon-greedy; argmax ties break toward the lowest action index.
    int select_action(const sim::Observation& obs, double eps, Rng& rng);
    int greedy_action(const sim::Observation& obs);

    // One double-DQN gradient step on a sampled batch. Returns the Huber loss.
    // Copies online -> target every cfg.target_update calls.
    double update(const std::vector<const Transition*>& batch, double lr);

    const QNet& online() const { return online_; }
    QNet& online() { return online_; }
    const QNet& target() const { return target_; }
    QNet& target() { return target_; }
    long update_count() const { return update_count_; }
    const TrainConfig& config() const { return cfg_; }

private:
    TrainConfig cfg_;
    QNet online_;
    QNet target_;
    long update_count_ = 0;
    QNet::Workspace ws_main_, ws_tmp_;
    nn::SparseBatch batch_s_, batch_s2_;
    nn::AdamState<float> adam_;
    std::vector<float> dout_, grad_;
    std::vector<int> actions_;
    std::vector<float> targets_;
};

// Appends an Observation as one sparse row (occupancy bits, phase one-hot,
// duration value at index 964).
void obs_to_row(const sim::Observation& obs, nn::SparseBatch& batch);

struct TrainResult {
    std::vector<double> episode_returns;  // true per-episode returns, training
    double eval_return = 0.0;             // mean greedy return, fresh episodes
    std::vector<double> eval_returns;
    std::shared_ptr<DqnAgent> agent;
};

// Full Signal-RL training run. Corruption and imputation shape only what the
// agent sees (observations and rewards); environment truth and the scored
// returns stay clean. Fully deterministic in (demand, cfg, specs, seed).
TrainResult train_signal(const sim::DemandProfile& demand, const TrainConfig& cfg,
                         const corrupt::CorruptionSpec& corruption,
                         const impute::ImputationSpec& imputation,
                         std::uint64_t seed);

// Mean true return of the greedy policy over `episodes` fresh seeds, observed
// through the same corruption/imputation channel used in training.
double evaluate_greedy(DqnAgent& agent, const sim::DemandProfile& demand,
                       const corrupt::CorruptionSpec& corruption,
                       const impute::ImputationSpec& imputation,
                       std::uint64_t seed, int episodes,
                       std::vector<double>* per_episode = nullptr);

// Flat little-endian float32 parameter blob with a JSON header line
// (dims, seed, config hash). Used by the `train` CLI subcommand.
void save_params(const QNet& net, const std::string& path, std::uint64_t seed,
                 std::uint64_t config_hash);
QNet load_params(const std::string& path);

// Max relative backprop-vs-finite-difference error on a double-precision
// mirror of the Q-net architecture (Huber loss on random data).
double gradcheck_architecture(int in, int h1, int h2, int out, int batch,
                              int n_params, std::uint64_t seed);

}  // namespace corruptlab::agent
