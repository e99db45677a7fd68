#include "corruptlab/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "corruptlab/agent.hpp"
#include "corruptlab/net.hpp"

namespace corruptlab::pattern {

namespace {

void validate_spec(const PatternSpec& spec) {
    if (spec.pattern_len < 1)  throw std::invalid_argument("pattern_len must be >= 1");
    if (spec.pattern_len > spec.sample_len)
        throw std::invalid_argument("pattern does not fit in the sample");
    if (spec.n_patterns < 1) throw std::invalid_argument("need at least one pattern");
    if (spec.n_patterns * spec.pattern_len >= spec.vocab)
        throw std::invalid_argument("pattern alphabet exhausts the vocabulary");
    if (spec.feature_dim < 16) throw std::invalid_argument("feature_dim too small");
}

// Pattern i owns tokens [i*g, (i+1)*g); background draws from the rest.
std::vector<std::uint32_t> background_sample(const PatternSpec& spec, Rng& rng) {
    const std::uint32_t lo = static_cast<std::uint32_t>(spec.n_patterns * spec.pattern_len);
    const std::uint32_t range = static_cast<std::uint32_t>(spec.vocab) - lo;
    std::vector<std::uint32_t> tokens(spec.sample_len);
    for (auto& t : tokens) t = lo + static_cast<std::uint32_t>(rng.below(range));
    return tokens;
}

void plant(std::vector<std::uint32_t>& tokens, int pattern, int pos, int g) {
    for (int k = 0; k < g; ++k)
        tokens[pos + k] = static_cast<std::uint32_t>(pattern * g + k);
}

}  // namespace

int PatternDataset::label_from_manifest(int sample_idx) const {
    std::vector<int> ids;
    for (const auto& r : manifest)
        if (r.sample == sample_idx) ids.push_back(r.pattern);
    if (ids.empty()) return 0;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    int votes = 0;
    for (int id : ids) votes += pattern_class[id] ? 1 : -1;
    if (votes > 0) return 1;
    if (votes < 0) return 0;
    return pattern_class[ids.front()];
}

PatternDataset generate(const PatternSpec& spec, Rng& rng) {
    validate_spec(spec);
    if (spec.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    PatternDataset d;
    d.spec = spec;
    d.pattern_class.resize(spec.n_patterns);
    for (int i = 0; i < spec.n_patterns; ++i) d.pattern_class[i] = i % 2;
    d.samples.reserve(spec.n_samples);
    d.labels.reserve(spec.n_samples);
    const int positions = spec.sample_len - spec.pattern_len + 1;
    for (int j = 0; j < spec.n_samples; ++j) {
        auto tokens = background_sample(spec, rng);
        const int id = static_cast<int>(rng.below(spec.n_patterns));
        const int pos = static_cast<int>(rng.below(positions));
        plant(tokens, id, pos, spec.pattern_len);
        d.manifest.push_back({j, pos, id});
        d.samples.push_back(std::move(tokens));
        d.labels.push_back(d.pattern_class[id]);
    }
    return d;
}

PatternDataset generate_with_rates(const PatternSpec& spec,
                                   const std::vector<double>& rates,
                                   int n_background, Rng& rng) {
    validate_spec(spec);
    if (static_cast<int>(rates.size()) != spec.n_patterns)
        throw std::invalid_argument("rates size must equal n_patterns");
    PatternDataset d;
    d.spec = spec;
    d.pattern_class.resize(spec.n_patterns);
    for (int i = 0; i < spec.n_patterns; ++i) d.pattern_class[i] = i % 2;

    std::vector<int> plant_ids;
    for (int i = 0; i < spec.n_patterns; ++i) {
        const int k = rng.poisson(rates[i]);
        for (int c = 0; c < k; ++c) plant_ids.push_back(i);
    }
    // One plant per sample; shuffle so splits see an unbiased mix.
    for (std::size_t i = plant_ids.size(); i > 1; --i)
        std::swap(plant_ids[i - 1], plant_ids[rng.below(i)]);

    const int n = static_cast<int>(plant_ids.size()) + n_background;
    const int positions = spec.sample_len - spec.pattern_len + 1;
    d.samples.reserve(n);
    d.labels.reserve(n);
    for (int j = 0; j < n; ++j) {
        auto tokens = background_sample(spec, rng);
        if (j < static_cast<int>(plant_ids.size())) {
            const int id = plant_ids[j];
            const int pos = static_cast<int>(rng.below(positions));
            plant(tokens, id, pos, spec.pattern_len);
            d.manifest.push_back({j, pos, id});
            d.labels.push_back(d.pattern_class[id]);
        } else {
            d.labels.push_back(0);
        }
        d.samples.push_back(std::move(tokens));
    }
    d.spec.n_samples = n;
    return d;
}

double analytic_recovery(double lambda, double p, int g) {
    if (lambda <= 0.0) return 0.0;
    const double survive = std::pow(1.0 - p, g);
    return 1.0 - std::exp(-lambda * survive);
}

std::vector<double> mc_recovery_oracle(const PatternDataset& data, double p,
                                       int trials, Rng& rng) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const int g = data.spec.pattern_len;
    std::vector<int> hits(data.spec.n_patterns, 0);
    for (int t = 0; t < trials; ++t) {
        std::vector<char> recovered(data.spec.n_patterns, 0);
        for (const auto& r : data.manifest) {
            if (recovered[r.pattern]) continue;
            bool intact = true;
            for (int k = 0; k < g; ++k)
                if (rng.bernoulli(p)) intact = false;
            if (intact) recovered[r.pattern] = 1;
        }
        for (int i = 0; i < data.spec.n_patterns; ++i) hits[i] += recovered[i];
    }
    std::vector<double> freq(data.spec.n_patterns);
    for (int i = 0; i < data.spec.n_patterns; ++i)
        freq[i] = static_cast<double>(hits[i]) / trials;
    return freq;
}

std::vector<std::int32_t> featurize(const std::vector<std::uint32_t>& tokens,
                                    int g, int feature_dim) {
    std::vector<std::int32_t> buckets;
    const int n = static_cast<int>(tokens.size());
    for (int a = 0; a + g <= n; ++a) {
        bool missing = false;
        for (int k = 0; k < g; ++k)
            if (tokens[a + k] == corrupt::kMissingToken) missing = true;
        if (missing) continue;
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (int k = 0; k < g; ++k) h = fnv1a64_u64(tokens[a + k], h);
        buckets.push_back(static_cast<std::int32_t>(h % feature_dim));
    }
    std::sort(buckets.begin(), buckets.end());
    buckets.erase(std::unique(buckets.begin(), buckets.end()), buckets.end());
    return buckets;
}

namespace {

struct Featurized {
    std::vector<std::vector<std::int32_t>> rows;
    std::vector<int> labels;
};

using PatNet = nn::Mlp<float>;

// Shared classification trainer: 5 epochs of minibatch SGD with the linear
// decay schedule, softmax cross-entropy head.
PatNet train_classifier(const Featurized& train, const PatternSpec& spec,
                        const TrainOptions& opt, Rng& rng) {
    PatNet net(PatNet::Dims{spec.feature_dim, opt.hidden1, opt.hidden2, 2});
    net.init_weights(rng);
    PatNet::Workspace ws;
    nn::SparseBatch batch;
    std::vector<float> dout, grad;
    std::vector<int> labels;

    const int n = static_cast<int>(train.rows.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const long batches_per_epoch = (n + opt.batch - 1) / opt.batch;
    const long total_updates = static_cast<long>(opt.epochs) * batches_per_epoch;
    long update = 0;
    for (int ep = 0; ep < opt.epochs; ++ep) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);
        for (int start = 0; start < n; start += opt.batch) {
            const int count = std::min(opt.batch, n - start);
            batch.clear(spec.feature_dim);
            labels.clear();
            for (int k = 0; k < count; ++k) {
                const int idx = order[start + k];
                for (auto b : train.rows[idx]) batch.push_feature(b, 1.0f);
                batch.end_row();
                labels.push_back(train.labels[idx]);
            }
            const double progress =
                static_cast<double>(update) / static_cast<double>(total_updates);
            const double lr = agent::schedule_value(opt.lr_init, opt.lr_final,
                                                    progress, 0.8);
            net.forward(batch, ws);
            nn::softmax_ce_loss<float>(ws.out, count, 2, labels, dout);
            net.backward(batch, ws, dout, grad);
            nn::sgd_step(net.params(), grad, static_cast<float>(lr),
                         static_cast<float>(opt.grad_clip));
            ++update;
        }
    }
    return net;
}

double accuracy_of(const PatNet& net, const Featurized& eval, int feature_dim) {
    PatNet::Workspace ws;
    nn::SparseBatch batch;
    const int n = static_cast<int>(eval.rows.size());
    int correct = 0;
    constexpr int kChunk = 512;
    for (int start = 0; start < n; start += kChunk) {
        const int count = std::min(kChunk, n - start);
        batch.clear(feature_dim);
        for (int k = 0; k < count; ++k) {
            for (auto b : eval.rows[start + k]) batch.push_feature(b, 1.0f);
            batch.end_row();
        }
        net.forward(batch, ws);
        for (int k = 0; k < count; ++k) {
            const float* y = ws.out.data() + static_cast<std::size_t>(k) * 2;
            const int pred = y[1] > y[0] ? 1 : 0;
            if (pred == eval.labels[start + k]) ++correct;
        }
    }
    return static_cast<double>(correct) / n;
}

}  // namespace

EvalResult train_eval(const PatternDataset& data,
                      const corrupt::CorruptionSpec& corruption,
                      const impute::ImputationSpec& imputation,
                      std::uint64_t seed, const TrainOptions& opt) {
    if (corruption.kind != corrupt::Kind::None &&
        corruption.kind != corrupt::Kind::TokenMissing)
        throw std::invalid_argument("pattern task supports token_missing corruption only");
    if (imputation.method == impute::Method::ContextFill)
        throw std::invalid_argument("context_fill does not apply to token data");

    const int n = static_cast<int>(data.samples.size());
    Rng corrupt_rng(derive_seed(corruption.seed, 0x70, seed));
    Rng impute_rng(derive_seed(imputation.seed, 0x71, seed));
    Rng split_rng(derive_seed(seed, 0x72));
    Rng train_rng(derive_seed(seed, 0x73));

    std::vector<std::vector<std::int32_t>> rows(n);
    for (int j = 0; j < n; ++j) {
        std::vector<std::uint32_t> tokens = data.samples[j];
        if (corruption.kind == corrupt::Kind::TokenMissing)
            tokens = corrupt::apply_token_missing(tokens, corruption.p, corrupt_rng);
        if (imputation.method == impute::Method::ArtificialExact)
            tokens = impute::impute_tokens_exact(
                tokens, data.samples[j], imputation.q,
                static_cast<std::uint32_t>(data.spec.vocab), impute_rng);
        rows[j] = featurize(tokens, data.spec.pattern_len, data.spec.feature_dim);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[split_rng.below(i)]);
    const int n_test = std::max(1, static_cast<int>(std::lround(n * opt.holdout)));
    const int n_train = n - n_test;

    Featurized train, test;
    for (int k = 0; k < n_train; ++k) {
        train.rows.push_back(rows[order[k]]);
        train.labels.push_back(data.labels[order[k]]);
    }
    for (int k = n_train; k < n; ++k) {
        test.rows.push_back(rows[order[k]]);
        test.labels.push_back(data.labels[order[k]]);
    }

    const PatNet net = train_classifier(train, data.spec, opt, train_rng);
    EvalResult r;
    r.accuracy = accuracy_of(net, test, data.spec.feature_dim);
    r.score = 2.0 * (r.accuracy - 0.5);
    r.test_count = static_cast<int>(test.rows.size());
    return r;
}

EvalResult recovery_probe(const PatternDataset& data, double p,
                          std::uint64_t seed, const TrainOptions& opt) {
    const int n = static_cast<int>(data.samples.size());
    Rng corrupt_rng(derive_seed(seed, 0x80));
    Rng train_rng(derive_seed(seed, 0x81));

    Featurized train, clean;
    train.labels = data.labels;
    clean.labels = data.labels;
    train.rows.resize(n);
    clean.rows.resize(n);
    for (int j = 0; j < n; ++j) {
        const auto corrupted =
            corrupt::apply_token_missing(data.samples[j], p, corrupt_rng);
        train.rows[j] = featurize(corrupted, data.spec.pattern_len,
                                  data.spec.feature_dim);
        clean.rows[j] = featurize(data.samples[j], data.spec.pattern_len,
                                  data.spec.feature_dim);
    }
    const PatNet net = train_classifier(train, data.spec, opt, train_rng);
    EvalResult r;
    r.accuracy = accuracy_of(net, clean, data.spec.feature_dim);
    r.score = 2.0 * (r.accuracy - 0.5);
    r.test_count = n;
    return r;
}

void save_dataset(const PatternDataset& data, const std::string& samples_path,
                  const std::string& labels_path, const std::string& manifest_path) {
    std::ofstream sf(samples_path);
    if (!sf) throw std::runtime_error("cannot write " + samples_path);
    for (const auto& s : data.samples) {
        for (std::size_t i = 0; i < s.size(); ++i)
            sf << (i ? " " : "") << s[i];
        sf << '\n';
    }
    std::ofstream lf(labels_path);
    if (!lf) throw std::runtime_error("cannot write " + labels_path);
    lf << "sample,label\n";
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        lf << i << ',' << data.labels[i] << '\n';
    nlohmann::json m;
    m["n_patterns"] = data.spec.n_patterns;
    m["pattern_len"] = data.spec.pattern_len;
    m["lambda"] = data.spec.lambda();
    m["classes"] = data.pattern_class;
    auto& plants = m["plants"] = nlohmann::json::array();
    for (const auto& r : data.manifest)
        plants.push_back({{"sample", r.sample}, {"pos", r.position}, {"pattern", r.pattern}});
    std::ofstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot write " + manifest_path);
    mf << m.dump(2) << '\n';
}

}  // namespace corruptlab::pattern
