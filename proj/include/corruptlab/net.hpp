#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "corruptlab/rng.hpp"

namespace corruptlab::nn {

// Sparse sample batch: rows of (feature index, value) pairs. Occupancy bits
// and bag-of-ngram features are 1-valued; the phase-duration input carries a
// real value. Dense vectors convert via SparseBatch::from_dense.
struct SparseBatch {
    int n = 0;
    int dim = 0;
    std::vector<std::int32_t> offsets{0};  // n+1 entries
    std::vector<std::int32_t> index;
    std::vector<float> value;

    void clear(int input_dim) {
        n = 0;
        dim = input_dim;
        offsets.assign(1, 0);
        index.clear();
        value.clear();
    }
    void push_feature(std::int32_t i, float v) {
        index.push_back(i);
        value.push_back(v);
    }
    void end_row() {
        offsets.push_back(static_cast<std::int32_t>(index.size()));
        ++n;
    }
    template <typename T>
    static SparseBatch from_dense(std::span<const T> x) {
        SparseBatch b;
        b.clear(static_cast<int>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] != T(0)) b.push_feature(static_cast<std::int32_t>(i),
                                             static_cast<float>(x[i]));
        b.end_row();
        return b;
    }
};

// Feed-forward net: affine -> layer norm -> ReLU -> affine -> ReLU -> affine.
// Parameters live in one flat buffer so clipping, SGD, copies, serialization
// and finite-difference probing all work on a single contiguous array.
template <typename T>
class Mlp {
public:
    struct Dims {
        int in = 0, h1 = 0, h2 = 0, out = 0;
    };

    static constexpr T kLnEpsilon = T(1e-5);

    explicit Mlp(Dims d) : d_(d) {
        off_w1_ = 0;
        off_b1_ = off_w1_ + d.in * d.h1;
        off_g_ = off_b1_ + d.h1;
        off_be_ = off_g_ + d.h1;
        off_w2_ = off_be_ + d.h1;
        off_b2_ = off_w2_ + d.h1 * d.h2;
        off_w3_ = off_b2_ + d.h2;
        off_b3_ = off_w3_ + d.h2 * d.out;
        params_.assign(off_b3_ + d.out, T(0));
    }

    const Dims& dims() const { return d_; }
    int param_count() const { return static_cast<int>(params_.size()); }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }

    // Uniform (-1/sqrt(fan_in), +1/sqrt(fan_in)) on weights and biases of the
    // affine layers; layer-norm gain 1 and bias 0.
    void init_weights(Rng& rng) {
        auto fill = [&](std::size_t off, int fan_in, int count) {
            const T bound = T(1) / std::sqrt(static_cast<T>(fan_in));
            for (int i = 0; i < count; ++i)
                params_[off + i] = static_cast<T>(rng.uniform(-bound, bound));
        };
        fill(off_w1_, d_.in, d_.in * d_.h1);
        fill(off_b1_, d_.in, d_.h1);
        for (int i = 0; i < d_.h1; ++i) params_[off_g_ + i] = T(1);
        for (int i = 0; i < d_.h1; ++i) params_[off_be_ + i] = T(0);
        fill(off_w2_, d_.h1, d_.h1 * d_.h2);
        fill(off_b2_, d_.h1, d_.h2);
        fill(off_w3_, d_.h2, d_.h2 * d_.out);
        fill(off_b3_, d_.h2, d_.out);
    }

    T* w1() { return params_.data() + off_w1_; }
    const T* w1() const { return params_.data() + off_w1_; }

    struct TensorRange {
        const char* name;
        std::size_t offset;
        std::size_t count;
    };
    std::vector<TensorRange> tensor_ranges() const {
        return {{"w1", off_w1_, static_cast<std::size_t>(d_.in) * d_.h1},
                {"b1", off_b1_, static_cast<std::size_t>(d_.h1)},
                {"ln_gain", off_g_, static_cast<std::size_t>(d_.h1)},
                {"ln_bias", off_be_, static_cast<std::size_t>(d_.h1)},
                {"w2", off_w2_, static_cast<std::size_t>(d_.h1) * d_.h2},
                {"b2", off_b2_, static_cast<std::size_t>(d_.h2)},
                {"w3", off_w3_, static_cast<std::size_t>(d_.h2) * d_.out},
                {"b3", off_b3_, static_cast<std::size_t>(d_.out)}};
    }

    // Per-batch activation cache reused across updates.
    struct Workspace {
        std::vector<T> z1, norm, inv_sigma, a1, z2, a2, out;
        std::vector<T> d1, d2;  // backward scratch
        void resize(const Dims& d, int n) {
            z1.assign(static_cast<std::size_t>(n) * d.h1, T(0));
            norm.resize(static_cast<std::size_t>(n) * d.h1);
            inv_sigma.resize(n);
            a1.resize(static_cast<std::size_t>(n) * d.h1);
            z2.resize(static_cast<std::size_t>(n) * d.h2);
            a2.resize(static_cast<std::size_t>(n) * d.h2);
            out.resize(static_cast<std::size_t>(n) * d.out);
            d1.resize(static_cast<std::size_t>(n) * d.h1);
            d2.resize(static_cast<std::size_t>(n) * d.h2);
        }
    };

    void forward(const SparseBatch& batch, Workspace& ws) const {
        if (batch.dim != d_.in) throw std::invalid_argument("input dim mismatch");
        const int n = batch.n;
        ws.resize(d_, n);
        const T* w1p = params_.data() + off_w1_;
        const T* b1p = params_.data() + off_b1_;
        const T* gp = params_.data() + off_g_;
        const T* bep = params_.data() + off_be_;
        const T* w2p = params_.data() + off_w2_;
        const T* b2p = params_.data() + off_b2_;
        const T* w3p = params_.data() + off_w3_;
        const T* b3p = params_.data() + off_b3_;

        for (int s = 0; s < n; ++s) {
            T* z1 = ws.z1.data() + static_cast<std::size_t>(s) * d_.h1;
            for (int j = 0; j < d_.h1; ++j) z1[j] = b1p[j];
            for (std::int32_t k = batch.offsets[s]; k < batch.offsets[s + 1]; ++k) {
                const T* row = w1p + static_cast<std::size_t>(batch.index[k]) * d_.h1;
                const T v = static_cast<T>(batch.value[k]);
                if (v == T(1)) {
                    for (int j = 0; j < d_.h1; ++j) z1[j] += row[j];
                } else {
                    for (int j = 0; j < d_.h1; ++j) z1[j] += v * row[j];
                }
            }
            // layer norm over the h1 units of this sample
            T mean = T(0);
            for (int j = 0; j < d_.h1; ++j) mean += z1[j];
            mean /= static_cast<T>(d_.h1);
            T var = T(0);
            for (int j = 0; j < d_.h1; ++j) {
                const T c = z1[j] - mean;
                var += c * c;
            }
            var /= static_cast<T>(d_.h1);
            const T inv_s = T(1) / std::sqrt(var + kLnEpsilon);
            ws.inv_sigma[s] = inv_s;
            T* nh = ws.norm.data() + static_cast<std::size_t>(s) * d_.h1;
            T* a1 = ws.a1.data() + static_cast<std::size_t>(s) * d_.h1;
            for (int j = 0; j < d_.h1; ++j) {
                nh[j] = (z1[j] - mean) * inv_s;
                const T h = gp[j] * nh[j] + bep[j];
                a1[j] = h > T(0) ? h : T(0);
            }
            T* z2 = ws.z2.data() + static_cast<std::size_t>(s) * d_.h2;
            for (int j = 0; j < d_.h2; ++j) z2[j] = b2p[j];
            for (int i = 0; i < d_.h1; ++i) {
                const T a = a1[i];
                if (a == T(0)) continue;
                const T* row = w2p + static_cast<std::size_t>(i) * d_.h2;
                for (int j = 0; j < d_.h2; ++j) z2[j] += a * row[j];
            }
            T* a2 = ws.a2.data() + static_cast<std::size_t>(s) * d_.h2;
            for (int j = 0; j < d_.h2; ++j) a2[j] = z2[j] > T(0) ? z2[j] : T(0);
            T* y = ws.out.data() + static_cast<std::size_t>(s) * d_.out;
            for (int j = 0; j < d_.out; ++j) y[j] = b3p[j];
            for (int i = 0; i < d_.h2; ++i) {
                const T a = a2[i];
                if (a == T(0)) continue;
                const T* row = w3p + static_cast<std::size_t>(i) * d_.out;
                for (int j = 0; j < d_.out; ++j) y[j] += a * row[j];
            }
        }
    }

    // Accumulates parameter gradients for dL/dout into grad (same layout as
    // params). forward() must have been called with this batch and workspace.
    void backward(const SparseBatch& batch, Workspace& ws,
                  const std::vector<T>& dout, std::vector<T>& grad) const {
        const int n = batch.n;
        if (static_cast<int>(dout.size()) != n * d_.out)
            throw std::invalid_argument("dout size mismatch");
        grad.assign(params_.size(), T(0));
        const T* gp = params_.data() + off_g_;
        const T* w2p = params_.data() + off_w2_;
        const T* w3p = params_.data() + off_w3_;
        T* gw1 = grad.data() + off_w1_;
        T* gb1 = grad.data() + off_b1_;
        T* gg = grad.data() + off_g_;
        T* gbe = grad.data() + off_be_;
        T* gw2 = grad.data() + off_w2_;
        T* gb2 = grad.data() + off_b2_;
        T* gw3 = grad.data() + off_w3_;
        T* gb3 = grad.data() + off_b3_;

        for (int s = 0; s < n; ++s) {
            const T* dy = dout.data() + static_cast<std::size_t>(s) * d_.out;
            const T* a2 = ws.a2.data() + static_cast<std::size_t>(s) * d_.h2;
            const T* z2 = ws.z2.data() + static_cast<std::size_t>(s) * d_.h2;
            const T* a1 = ws.a1.data() + static_cast<std::size_t>(s) * d_.h1;
            const T* nh = ws.norm.data() + static_cast<std::size_t>(s) * d_.h1;
            T* d2 = ws.d2.data();
            T* d1 = ws.d1.data();

            for (int j = 0; j < d_.out; ++j) gb3[j] += dy[j];
            for (int i = 0; i < d_.h2; ++i) {
                T acc = T(0);
                const T* row = w3p + static_cast<std::size_t>(i) * d_.out;
                T* grow = gw3 + static_cast<std::size_t>(i) * d_.out;
                const T a = a2[i];
                for (int j = 0; j < d_.out; ++j) {
                    grow[j] += a * dy[j];
                    acc += row[j] * dy[j];
                }
                d2[i] = z2[i] > T(0) ? acc : T(0);
            }
            for (int j = 0; j < d_.h2; ++j) gb2[j] += d2[j];
            for (int i = 0; i < d_.h1; ++i) {
                const T a = a1[i];
                const T* row = w2p + static_cast<std::size_t>(i) * d_.h2;
                T* grow = gw2 + static_cast<std::size_t>(i) * d_.h2;
                T acc = T(0);
                if (a != T(0)) {
                    for (int j = 0; j < d_.h2; ++j) {
                        grow[j] += a * d2[j];
                        acc += row[j] * d2[j];
                    }
                } else {
                    for (int j = 0; j < d_.h2; ++j) acc += row[j] * d2[j];
                }
                // ReLU over h = g*nh + be: h > 0 iff a1 > 0
                d1[i] = a > T(0) ? acc : T(0);
            }
            // layer-norm backward
            T mean_d = T(0), mean_dn = T(0);
            for (int j = 0; j < d_.h1; ++j) {
                gg[j] += d1[j] * nh[j];
                gbe[j] += d1[j];
                const T dn = d1[j] * gp[j];
                d1[j] = dn;
                mean_d += dn;
                mean_dn += dn * nh[j];
            }
            mean_d /= static_cast<T>(d_.h1);
            mean_dn /= static_cast<T>(d_.h1);
            const T inv_s = ws.inv_sigma[s];
            for (int j = 0; j < d_.h1; ++j)
                d1[j] = (d1[j] - mean_d - nh[j] * mean_dn) * inv_s;
            for (int j = 0; j < d_.h1; ++j) gb1[j] += d1[j];
            for (std::int32_t k = batch.offsets[s]; k < batch.offsets[s + 1]; ++k) {
                T* grow = gw1 + static_cast<std::size_t>(batch.index[k]) * d_.h1;
                const T v = static_cast<T>(batch.value[k]);
                if (v == T(1)) {
                    for (int j = 0; j < d_.h1; ++j) grow[j] += d1[j];
                } else {
                    for (int j = 0; j < d_.h1; ++j) grow[j] += v * d1[j];
                }
            }
        }
    }

    // Convenience single-sample forward used by tests and action selection.
    std::vector<T> forward_one(const SparseBatch& b) const {
        thread_local Workspace ws;
        forward(b, ws);
        return std::vector<T>(ws.out.begin(), ws.out.begin() + d_.out);
    }

private:
    Dims d_;
    std::vector<T> params_;
    std::size_t off_w1_, off_b1_, off_g_, off_be_, off_w2_, off_b2_, off_w3_, off_b3_;
};

// Huber (smooth-L1, delta = 1) on the gathered action outputs, averaged over
// the batch. Fills dout with the loss gradient; untouched outputs get 0.
template <typename T>
T huber_gather_loss(const std::vector<T>& out, int n, int out_dim,
                    const std::vector<int>& actions, const std::vector<T>& targets,
                    std::vector<T>& dout) {
    dout.assign(static_cast<std::size_t>(n) * out_dim, T(0));
    T loss = T(0);
    const T inv_n = T(1) / static_cast<T>(n);
    for (int s = 0; s < n; ++s) {
        const T q = out[static_cast<std::size_t>(s) * out_dim + actions[s]];
        const T r = q - targets[s];
        const T ar = std::abs(r);
        loss += ar <= T(1) ? T(0.5) * r * r : ar - T(0.5);
        const T g = std::clamp(r, T(-1), T(1));
        dout[static_cast<std::size_t>(s) * out_dim + actions[s]] = g * inv_n;
    }
    return loss * inv_n;
}

// Mean softmax cross-entropy for integer class labels.
template <typename T>
T softmax_ce_loss(const std::vector<T>& out, int n, int out_dim,
                  const std::vector<int>& labels, std::vector<T>& dout) {
    dout.assign(static_cast<std::size_t>(n) * out_dim, T(0));
    T loss = T(0);
    const T inv_n = T(1) / static_cast<T>(n);
    for (int s = 0; s < n; ++s) {
        const T* y = out.data() + static_cast<std::size_t>(s) * out_dim;
        T* d = dout.data() + static_cast<std::size_t>(s) * out_dim;
        T mx = y[0];
        for (int j = 1; j < out_dim; ++j) mx = std::max(mx, y[j]);
        T z = T(0);
        for (int j = 0; j < out_dim; ++j) z += std::exp(y[j] - mx);
        const T logz = std::log(z) + mx;
        loss += logz - y[labels[s]];
        for (int j = 0; j < out_dim; ++j) d[j] = std::exp(y[j] - logz) * inv_n;
        d[labels[s]] -= inv_n;
    }
    return loss * inv_n;
}

// Global L2 norm clip followed by a plain SGD step. Zero gradients are
// skipped so sparse batches do not dirty untouched rows.
template <typename T>
void sgd_step(std::vector<T>& params, std::vector<T>& grad, T lr, T clip_norm) {
    T sq = T(0);
    for (T g : grad) sq += g * g;
    const T norm = std::sqrt(sq);
    T scale = T(1);
    if (clip_norm > T(0) && norm > clip_norm) scale = clip_norm / norm;
    const T step = lr * scale;
    for (std::size_t i = 0; i < params.size(); ++i)
        if (grad[i] != T(0)) params[i] -= step * grad[i];
}

// Adam with bias correction; gradients should already be norm-clipped.
template <typename T>
struct AdamState {
    std::vector<T> m, v;
    long t = 0;
    T beta1 = T(0.9), beta2 = T(0.999), eps = T(1e-8);

    void step(std::vector<T>& params, const std::vector<T>& grad, T lr) {
        if (m.size() != params.size()) {
            m.assign(params.size(), T(0));
            v.assign(params.size(), T(0));
            t = 0;
        }
        ++t;
        const T c1 = T(1) - std::pow(beta1, static_cast<T>(t));
        const T c2 = T(1) - std::pow(beta2, static_cast<T>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const T g = grad[i];
            m[i] = beta1 * m[i] + (T(1) - beta1) * g;
            v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
            params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

// Scales grad in place to cap its global L2 norm; returns the pre-clip norm.
template <typename T>
T clip_grad_norm(std::vector<T>& grad, T clip_norm) {
    T sq = T(0);
    for (T g : grad) sq += g * g;
    const T norm = std::sqrt(sq);
    if (clip_norm > T(0) && norm > clip_norm) {
        const T scale = clip_norm / norm;
        for (T& g : grad) g *= scale;
    }
    return norm;
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
};

// Central finite differences (h = 1e-5) against backprop, stratified so every
// tensor (including the layer-norm gain/bias) gets probed. loss_fn must
// evaluate the full loss at the current params.
template <typename T, typename LossFn, typename GradFn>
GradCheckResult finite_diff_check(Mlp<T>& net, LossFn loss_fn, GradFn grad_fn,
                                  int n_params, Rng& rng, double h = 1e-5) {
    std::vector<T> grad;
    grad_fn(grad);
    GradCheckResult res;
    const auto ranges = net.tensor_ranges();
    const int per_tensor = (n_params + static_cast<int>(ranges.size()) - 1) /
                           static_cast<int>(ranges.size());
    for (const auto& r : ranges) {
        for (int k = 0; k < per_tensor; ++k) {
            const std::size_t i = r.offset + rng.below(r.count);
            const T saved = net.params()[i];
            net.params()[i] = saved + static_cast<T>(h);
            const double lp = static_cast<double>(loss_fn());
            net.params()[i] = saved - static_cast<T>(h);
            const double lm = static_cast<double>(loss_fn());
            net.params()[i] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double bp = static_cast<double>(grad[i]);
            const double denom = std::max({std::abs(fd), std::abs(bp), 1e-6});
            const double err = std::abs(fd - bp) / denom;
            res.max_rel_error = std::max(res.max_rel_error, err);
            ++res.checked;
        }
    }
    return res;
}

}  // namespace corruptlab::nn
