#include "corruptlab/agent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace corruptlab::agent {

double schedule_value(double init, double final_value, double progress,
                      double decay_fraction) {
    if (progress < 0.0 || progress > 1.0)
        throw std::invalid_argument("schedule progress must be in [0, 1]");
    if (progress >= decay_fraction) return final_value;
    const double f = progress / decay_fraction;
    return init + (final_value - init) * f;
}

void ReplayBuffer::push(const Transition& t) {
    if (size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[write_] = t;
        write_ = (write_ + 1) % capacity_;
    }
}

void ReplayBuffer::sample(int count, Rng& rng, std::vector<const Transition*>& out) {
    const int n = size();
    if (count > n) throw std::invalid_argument("replay sample larger than buffer");
    if (static_cast<int>(perm_.size()) != n) {
        perm_.resize(n);
        std::iota(perm_.begin(), perm_.end(), 0);
    }
    out.clear();
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.below(n - i));
        std::swap(perm_[i], perm_[j]);
        out.push_back(&data_[perm_[i]]);
    }
}

void obs_to_row(const sim::Observation& obs, nn::SparseBatch& batch) {
    for (int w = 0; w < 15; ++w) {
        std::uint64_t bits = obs.occupancy[w];
        while (bits) {
            const int b = std::countr_zero(bits);
            batch.push_feature(w * 64 + b, 1.0f);
            bits &= bits - 1;
        }
    }
    batch.push_feature(sim::kOccupancyBits + obs.phase, 1.0f);
    if (obs.duration != 0.0f)
        batch.push_feature(sim::kOccupancyBits + 4, obs.duration);
    batch.end_row();
}

DqnAgent::DqnAgent(const TrainConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg),
      online_(QNet::Dims{sim::kObservationDim, cfg.hidden1, cfg.hidden2, 4}),
      target_(QNet::Dims{sim::kObservationDim, cfg.hidden1, cfg.hidden2, 4}) {
    Rng rng(init_seed);
    online_.init_weights(rng);
    target_.params() = online_.params();
}

int DqnAgent::select_action(const sim::Observation& obs, double eps, Rng& rng) {
    if (eps > 0.0 && rng.bernoulli(eps)) return static_cast<int>(rng.below(4));
    return greedy_action(obs);
}

int DqnAgent::greedy_action(const sim::Observation& obs) {
    batch_s_.clear(sim::kObservationDim);
    obs_to_row(obs, batch_s_);
    online_.forward(batch_s_, ws_tmp_);
    int best = 0;
    for (int a = 1; a < 4; ++a)
        if (ws_tmp_.out[a] > ws_tmp_.out[best]) best = a;
    return best;
}

double DqnAgent::update(const std::vector<const Transition*>& batch, double lr) {
    const int n = static_cast<int>(batch.size());
    if (n < 1) throw std::invalid_argument("update requires a non-empty batch");

    batch_s_.clear(sim::kObservationDim);
    batch_s2_.clear(sim::kObservationDim);
    for (const Transition* t : batch) {
        obs_to_row(t->s, batch_s_);
        obs_to_row(t->s2, batch_s2_);
    }

    // Double DQN: the online net picks the next action, the target net
    // evaluates it. Terminal transitions keep only the reward.
    online_.forward(batch_s2_, ws_tmp_);
    std::vector<int> next_actions(n);
    for (int s = 0; s < n; ++s) {
        const float* y = ws_tmp_.out.data() + static_cast<std::size_t>(s) * 4;
        int best = 0;
        for (int a = 1; a < 4; ++a)
            if (y[a] > y[best]) best = a;
        next_actions[s] = best;
    }
    target_.forward(batch_s2_, ws_tmp_);
    targets_.resize(n);
    actions_.resize(n);
    for (int s = 0; s < n; ++s) {
        const Transition* t = batch[s];
        const float next_q =
            ws_tmp_.out[static_cast<std::size_t>(s) * 4 + next_actions[s]];
        const float mask = t->done ? 0.0f : 1.0f;
        targets_[s] = t->reward + static_cast<float>(cfg_.gamma) * next_q * mask;
        actions_[s] = t->action;
    }

    online_.forward(batch_s_, ws_main_);
    const float loss = nn::huber_gather_loss<float>(ws_main_.out, n, 4, actions_,
                                                    targets_, dout_);
    online_.backward(batch_s_, ws_main_, dout_, grad_);
    if (cfg_.optimizer == TrainConfig::Optimizer::Adam) {
        nn::clip_grad_norm(grad_, static_cast<float>(cfg_.grad_clip));
        adam_.step(online_.params(), grad_, static_cast<float>(lr));
    } else {
        nn::sgd_step(online_.params(), grad_, static_cast<float>(lr),
                     static_cast<float>(cfg_.grad_clip));
    }

    ++update_count_;
    if (update_count_ % cfg_.target_update == 0)
        target_.params() = online_.params();
    return loss;
}

namespace {

// Agent-visible view of the environment. Applies the corruption and
// imputation chain to observations; environment truth is never modified.
struct ObsChannel {
    corrupt::CorruptionSpec corruption;
    impute::ImputationSpec imputation;
    double reward_clip;
    Rng noise_rng;
    Rng impute_rng;

    ObsChannel(const corrupt::CorruptionSpec& c, const impute::ImputationSpec& i,
               std::uint64_t run_seed, double clip = 0.0)
        : corruption(c),
          imputation(i),
          reward_clip(clip),
          noise_rng(derive_seed(c.seed, 0xc0, run_seed)),
          impute_rng(derive_seed(i.seed, 0x1b, run_seed)) {}

    sim::Observation view(const sim::TrafficEnv& env) {
        sim::Observation obs;
        switch (corruption.kind) {
            case corrupt::Kind::VehicleMissing:
                obs = env.observe_detected();
                break;
            case corrupt::Kind::CellNoise:
                obs = corrupt::apply_cell_noise(env.observe_truth(), corruption.p,
                                                noise_rng);
                break;
            case corrupt::Kind::MaskRegion:
                obs = corrupt::apply_mask_region(env.observe_truth(), corruption.p);
                break;
            default:
                obs = env.observe_truth();
                break;
        }
        switch (imputation.method) {
            case impute::Method::ArtificialExact:
                obs = impute::impute_cells_exact(obs, env.observe_truth(),
                                                 imputation.q, impute_rng);
                break;
            case impute::Method::ContextFill:
                obs = impute::context_fill(obs, imputation.window,
                                           imputation.threshold);
                break;
            default:
                break;
        }
        return obs;
    }

    double view_reward(const std::array<double, 6>& second_rewards) {
        double sum = 0.0;
        for (double r : second_rewards) {
            if (corruption.kind == corrupt::Kind::CellNoise)
                r = corrupt::corrupt_step_reward(r, corruption.p, noise_rng);
            if (reward_clip > 0.0) r = std::clamp(r, -reward_clip, reward_clip);
            sum += r;
        }
        return sum;
    }
};

}  // namespace

TrainResult train_signal(const sim::DemandProfile& demand, const TrainConfig& cfg,
                         const corrupt::CorruptionSpec& corruption,
                         const impute::ImputationSpec& imputation,
                         std::uint64_t seed) {
    TrainResult result;
    result.agent = std::make_shared<DqnAgent>(cfg, derive_seed(seed, 1));
    DqnAgent& agent = *result.agent;

    Rng explore_rng(derive_seed(seed, 2));
    Rng sample_rng(derive_seed(seed, 3));
    ReplayBuffer buffer(cfg.buffer_capacity);
    ObsChannel channel(corruption, imputation, seed, cfg.reward_clip);

    sim::TrafficEnv env(demand, 0, corrupt::equipped_probability(corruption),
                        derive_seed(corruption.seed, 0xde, seed));

    const long decisions_per_ep = demand.horizon / 6;
    const long total_decisions = static_cast<long>(cfg.episodes) * decisions_per_ep;
    long decision = 0;
    std::vector<const Transition*> batch;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        env.reset(derive_seed(seed, 100, ep));
        double true_return = 0.0;
        sim::Observation visible = channel.view(env);
        while (!env.done()) {
            const double progress =
                static_cast<double>(decision) / static_cast<double>(total_decisions);
            const double eps = schedule_value(cfg.eps_init, cfg.eps_final, progress,
                                              cfg.decay_fraction);
            const int action = agent.select_action(visible, eps, explore_rng);
            sim::StepResult sr = env.decision_step(static_cast<sim::Phase>(action));
            for (double r : sr.second_rewards) true_return += r;

            sim::Observation next_visible = channel.view(env);
            Transition t;
            t.s = visible;
            t.action = static_cast<std::uint8_t>(action);
            t.reward = static_cast<float>(channel.view_reward(sr.second_rewards));
            t.s2 = next_visible;
            t.done = sr.done;
            buffer.push(t);

            if (buffer.size() >= cfg.batch &&
                decision % cfg.update_every == 0) {
                const double lr = schedule_value(cfg.lr_init, cfg.lr_final, progress,
                                                 cfg.decay_fraction);
                buffer.sample(cfg.batch, sample_rng, batch);
                agent.update(batch, lr);
            }
            visible = next_visible;
            ++decision;
        }
        result.episode_returns.push_back(true_return);
    }

    result.eval_return =
        evaluate_greedy(agent, demand, corruption, imputation,
                        derive_seed(seed, 4), cfg.eval_episodes, &result.eval_returns);
    return result;
}

double evaluate_greedy(DqnAgent& agent, const sim::DemandProfile& demand,
                       const corrupt::CorruptionSpec& corruption,
                       const impute::ImputationSpec& imputation,
                       std::uint64_t seed, int episodes,
                       std::vector<double>* per_episode) {
    double total = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        ObsChannel channel(corruption, imputation, derive_seed(seed, 7, ep));
        sim::TrafficEnv env(demand, derive_seed(seed, 200, ep),
                            corrupt::equipped_probability(corruption),
                            derive_seed(corruption.seed, 0xeb, seed, ep));
        double ret = 0.0;
        sim::Observation visible = channel.view(env);
        while (!env.done()) {
            const int action = agent.greedy_action(visible);
            sim::StepResult sr = env.decision_step(static_cast<sim::Phase>(action));
            for (double r : sr.second_rewards) ret += r;
            visible = channel.view(env);
        }
        total += ret;
        if (per_episode) per_episode->push_back(ret);
    }
    return total / episodes;
}

void save_params(const QNet& net, const std::string& path, std::uint64_t seed,
                 std::uint64_t config_hash) {
    nlohmann::json header;
    const auto& d = net.dims();
    header["dims"] = {d.in, d.h1, d.h2, d.out};
    header["seed"] = seed;
    header["config_hash"] = config_hash;
    header["dtype"] = "f32";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << header.dump() << '\n';
    f.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.params().size() * sizeof(float)));
}

QNet load_params(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(f, line);
    const auto header = nlohmann::json::parse(line);
    const auto dims = header.at("dims");
    QNet net(QNet::Dims{dims[0], dims[1], dims[2], dims[3]});
    f.read(reinterpret_cast<char*>(net.params().data()),
           static_cast<std::streamsize>(net.params().size() * sizeof(float)));
    if (!f) throw std::runtime_error("truncated parameter file: " + path);
    return net;
}

double gradcheck_architecture(int in, int h1, int h2, int out, int batch,
                              int n_params, std::uint64_t seed) {
    using DNet = nn::Mlp<double>;
    DNet net(DNet::Dims{in, h1, h2, out});
    Rng rng(seed);
    net.init_weights(rng);

    // Random sparse batch shaped like real observations: a few dozen active
    // binary features plus one real-valued input.
    nn::SparseBatch data;
    data.clear(in);
    std::vector<int> actions(batch);
    std::vector<double> targets(batch);
    for (int s = 0; s < batch; ++s) {
        const int active = 8 + static_cast<int>(rng.below(std::max(1, in / 8)));
        std::vector<std::int32_t> idx;
        for (int k = 0; k < active; ++k)
            idx.push_back(static_cast<std::int32_t>(rng.below(in - 1)));
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        for (auto i : idx) data.push_feature(i, 1.0f);
        data.push_feature(in - 1, static_cast<float>(rng.uniform(0.0, 2.0)));
        data.end_row();
        actions[s] = static_cast<int>(rng.below(out));
        targets[s] = rng.uniform(-2.0, 2.0);
    }

    DNet::Workspace ws;
    std::vector<double> dout;
    auto loss_fn = [&]() {
        net.forward(data, ws);
        return nn::huber_gather_loss<double>(ws.out, batch, out, actions, targets,
                                             dout);
    };
    auto grad_fn = [&](std::vector<double>& grad) {
        net.forward(data, ws);
        nn::huber_gather_loss<double>(ws.out, batch, out, actions, targets, dout);
        net.backward(data, ws, dout, grad);
    };
    Rng pick(derive_seed(seed, 99));
    const auto res = nn::finite_diff_check(net, loss_fn, grad_fn, n_params, pick);
    return res.max_rel_error;
}

}  // namespace corruptlab::agent
