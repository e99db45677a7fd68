#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corruptlab/corruption.hpp"
#include "corruptlab/imputation.hpp"
#include "corruptlab/rng.hpp"

namespace corruptlab::pattern {

// Synthetic pattern-recognition task. Every sample is uniform background
// tokens plus one planted pattern (a g-gram from a reserved alphabet); the
// label is the class of that pattern. Identities are drawn uniformly over the
// n_patterns dictionary, so each pattern's plant count across a dataset of
// n_samples is Binomial(n, 1/M) — the Poisson(lambda = n/M) regime the task
// is built to probe.
struct PatternSpec {
    int vocab = 8192;        // total token ids; pattern alphabet is the front
    int n_patterns = 600;    // M
    int pattern_len = 1;     // g, tokens per pattern
    int sample_len = 30;     // L
    int n_samples = 2100;    // n; lambda = n / M
    int feature_dim = 32768; // hashed bag-of-g-grams buckets

    double lambda() const {
        return static_cast<double>(n_samples) / n_patterns;
    }
};

struct PlantRecord {
    int sample;
    int position;
    int pattern;
};

struct PatternDataset {
    PatternSpec spec;
    std::vector<std::vector<std::uint32_t>> samples;
    std::vector<int> labels;
    std::vector<int> pattern_class;      // class bit per pattern id
    std::vector<PlantRecord> manifest;   // one record per planted occurrence

    // Label recomputation from the manifest alone; background-only samples
    // fall back to class 0.
    int label_from_manifest(int sample_idx) const;
};

// Throws when the spec cannot be packed (pattern longer than the sample,
// pattern alphabet exhausting the vocabulary).
PatternDataset generate(const PatternSpec& spec, Rng& rng);

// Variant with explicit per-pattern rates: pattern i is planted
// Poisson(lambda_i) times; n_samples is the realized total. An all-zero rate
// vector yields n_background pure-background samples with constant label 0.
PatternDataset generate_with_rates(const PatternSpec& spec,
                                   const std::vector<double>& rates,
                                   int n_background, Rng& rng);

// Probability that a pattern with dataset appearance rate lambda survives
// token corruption level p: 1 - exp(-lambda * (1-p)^g). The (1-p)^g factor is
// the chance a single g-token instance comes through intact.
double analytic_recovery(double lambda, double p, int g = 1);

// Brute-force oracle: per trial, a pattern is recovered iff at least one of
// its planted occurrences survives token-missing corruption on every token.
// Returns the per-pattern empirical recovery frequency.
std::vector<double> mc_recovery_oracle(const PatternDataset& data, double p,
                                       int trials, Rng& rng);

// Hashed bag-of-g-grams featurization; windows containing the MISSING
// sentinel are dropped. Returns sorted unique bucket indices.
std::vector<std::int32_t> featurize(const std::vector<std::uint32_t>& tokens,
                                    int g, int feature_dim);

struct EvalResult {
    double score = 0.0;     // 2 * (accuracy - 1/2)
    double accuracy = 0.0;
    int test_count = 0;
};

struct TrainOptions {
    int epochs = 5;
    int batch = 64;
    double lr_init = 0.4;
    double lr_final = 0.04;
    double grad_clip = 10.0;
    int hidden1 = 64;
    int hidden2 = 16;
    double holdout = 0.2;  // test split fraction
};

// Corrupts inputs (train and held-out test splits alike), optionally imputes,
// featurizes, trains the shared MLP head, and scores the corrupted-input
// test split against its clean labels.
EvalResult train_eval(const PatternDataset& data,
                      const corrupt::CorruptionSpec& corruption,
                      const impute::ImputationSpec& imputation,
                      std::uint64_t seed, const TrainOptions& opt = {});

// Recovery-dominated instrument: trains on the corrupted full dataset and
// scores the same samples with clean inputs, so the score isolates which
// patterns survived corruption during training (visibility plays no role).
EvalResult recovery_probe(const PatternDataset& data, double p,
                          std::uint64_t seed, const TrainOptions& opt = {});

// Line-based serialization: tokens space-separated one sample per line;
// labels in a sidecar CSV; manifest as JSON.
void save_dataset(const PatternDataset& data, const std::string& samples_path,
                  const std::string& labels_path, const std::string& manifest_path);

}  // namespace corruptlab::pattern
