#include "doctest.h"

#include <cmath>
#include <vector>

#include "corruptlab/net.hpp"

using namespace corruptlab;
using namespace corruptlab::nn;

namespace {

template <typename T>
SparseBatch dense_batch(const std::vector<std::vector<T>>& rows) {
    SparseBatch b;
    b.clear(static_cast<int>(rows[0].size()));
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i)
            if (r[i] != T(0)) b.push_feature(static_cast<std::int32_t>(i),
                                             static_cast<float>(r[i]));
        b.end_row();
    }
    return b;
}

}  // namespace

TEST_CASE("all-zero parameters map any input to zero") {
    Mlp<double> net({5, 4, 3, 2});
    auto out = net.forward_one(SparseBatch::from_dense<double>(
        std::vector<double>{1, 0, 1, 0.5, 2}));
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("forward is a pure function of its input") {
    Mlp<double> net({6, 5, 4, 3});
    Rng rng(3);
    net.init_weights(rng);
    const std::vector<double> x = {1, 0, 0, 1, 0.25, 0};
    auto a = net.forward_one(SparseBatch::from_dense<double>(x));
    auto b = net.forward_one(SparseBatch::from_dense<double>(x));
    CHECK(a == b);
}

TEST_CASE("toy network matches a hand-computed forward pass") {
    // 2 -> 3 (layer norm) -> 2 -> 1, all weights chosen for easy arithmetic.
    Mlp<double> net({2, 3, 2, 1});
    auto& p = net.params();
    // w1 rows (input-major): x0 -> (1, 2, 3); x1 -> (0, 0, 0); b1 = 0
    p[0] = 1; p[1] = 2; p[2] = 3;
    // ln gain defaults to 0 in the flat buffer, set gain 1 bias 0
    const auto ranges = net.tensor_ranges();
    for (std::size_t i = 0; i < 3; ++i) p[ranges[2].offset + i] = 1.0;
    // w2: 3x2 rows -> all 0.5; b2 = 0; w3: 2x1 rows -> (1, -1); b3 = 0.25
    for (std::size_t i = 0; i < 6; ++i) p[ranges[4].offset + i] = 0.5;
    p[ranges[6].offset + 0] = 1.0;
    p[ranges[6].offset + 1] = -1.0;
    p[ranges[7].offset + 0] = 0.25;

    // x = (1, 0): z1 = (1,2,3); mean 2; var 2/3; nh = (-c, 0, c), c = 1/sqrt(2/3+1e-5)
    const double c = 1.0 / std::sqrt(2.0 / 3.0 + 1e-5);
    // a1 = relu(nh) = (0, 0, c); z2 = (0.5c, 0.5c); a2 = z2
    // y = 0.5c * 1 + 0.5c * (-1) + 0.25 = 0.25
    auto out = net.forward_one(dense_batch<double>({{1, 0}}));
    CHECK(out[0] == doctest::Approx(0.25).epsilon(1e-12));

    // x = (0, 1) leaves z1 = 0: layer norm collapses to 0, output = b3
    out = net.forward_one(dense_batch<double>({{0, 1}}));
    CHECK(out[0] == doctest::Approx(0.25));
    (void)c;
}

TEST_CASE("huber loss on a residual of two contributes |r| - 1/2") {
    std::vector<double> out = {2.0, 0.0};
    std::vector<double> dout;
    const double loss =
        huber_gather_loss<double>(out, 1, 2, {0}, {0.0}, dout);
    CHECK(loss == doctest::Approx(1.5));
    CHECK(dout[0] == doctest::Approx(1.0));  // clipped gradient
    CHECK(dout[1] == 0.0);
}

TEST_CASE("huber loss is zero iff predictions equal targets") {
    std::vector<double> out = {0.3, -1.2, 0.0, 4.0};
    std::vector<double> dout;
    CHECK(huber_gather_loss<double>(out, 2, 2, {0, 1}, {0.3, 4.0}, dout) == 0.0);
    for (double d : dout) CHECK(d == 0.0);
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> o = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
        std::vector<double> t = {rng.uniform(-3, 3)};
        const double l = huber_gather_loss<double>(o, 1, 2, {0}, t, dout);
        CHECK(l >= 0.0);
        if (o[0] != t[0]) CHECK(l > 0.0);
    }
}

TEST_CASE("softmax cross entropy: hand case and gradient structure") {
    std::vector<double> out = {0.0, 0.0};
    std::vector<double> dout;
    const double loss = softmax_ce_loss<double>(out, 1, 2, {1}, dout);
    CHECK(loss == doctest::Approx(std::log(2.0)));
    CHECK(dout[0] == doctest::Approx(0.5));
    CHECK(dout[1] == doctest::Approx(-0.5));
}

TEST_CASE("sgd clips the global gradient norm") {
    std::vector<double> params = {0.0, 0.0};
    std::vector<double> grad = {30.0, 40.0};  // norm 50 -> scaled to 10
    sgd_step(params, grad, 1.0, 10.0);
    CHECK(params[0] == doctest::Approx(-6.0));
    CHECK(params[1] == doctest::Approx(-8.0));
}

TEST_CASE("finite differences confirm backprop on the full architecture shape") {
    // small-dimensional replica: affine -> LN -> ReLU -> affine -> ReLU -> affine
    using DNet = Mlp<double>;
    DNet net({10, 8, 4, 2});
    Rng rng(11);
    net.init_weights(rng);
    SparseBatch data;
    data.clear(10);
    std::vector<int> actions;
    std::vector<double> targets;
    for (int s = 0; s < 16; ++s) {
        for (int i = 0; i < 9; ++i)
            if (rng.bernoulli(0.4)) data.push_feature(i, 1.0f);
        data.push_feature(9, static_cast<float>(rng.uniform(0.0, 2.0)));
        data.end_row();
        actions.push_back(static_cast<int>(rng.below(2)));
        targets.push_back(rng.uniform(-2.0, 2.0));
    }
    DNet::Workspace ws;
    std::vector<double> dout;
    auto loss_fn = [&]() {
        net.forward(data, ws);
        return huber_gather_loss<double>(ws.out, 16, 2, actions, targets, dout);
    };
    auto grad_fn = [&](std::vector<double>& g) {
        net.forward(data, ws);
        huber_gather_loss<double>(ws.out, 16, 2, actions, targets, dout);
        net.backward(data, ws, dout, g);
    };
    Rng pick(13);
    auto res = finite_diff_check(net, loss_fn, grad_fn, 240, pick);
    CHECK(res.checked >= 200);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("quadratic loss on near-linear regime gives near-exact gradients") {
    using DNet = Mlp<double>;
    DNet net({6, 5, 3, 2});
    Rng rng(7);
    net.init_weights(rng);
    // push every ReLU well into its active region via the layer-norm bias
    const auto ranges = net.tensor_ranges();
    for (std::size_t i = 0; i < ranges[3].count; ++i)
        net.params()[ranges[3].offset + i] = 5.0;
    for (std::size_t i = 0; i < ranges[5].count; ++i)
        net.params()[ranges[5].offset + i] = 10.0;

    SparseBatch data = dense_batch<double>({{1, 0, 1, 0, 1, 0.5},
                                            {0, 1, 0, 1, 0, 1.5}});
    DNet::Workspace ws;
    std::vector<double> dout;
    auto mse = [&]() {
        net.forward(data, ws);
        double l = 0.0;
        for (double y : ws.out) l += 0.5 * y * y;
        return l / 2;
    };
    auto grad_fn = [&](std::vector<double>& g) {
        net.forward(data, ws);
        dout.assign(ws.out.size(), 0.0);
        for (std::size_t i = 0; i < ws.out.size(); ++i) dout[i] = ws.out[i] / 2;
        net.backward(data, ws, dout, g);
    };
    Rng pick(17);
    auto res = finite_diff_check(net, mse, grad_fn, 160, pick);
    CHECK(res.max_rel_error < 1e-7);
}

TEST_CASE("zero-loss batch yields zero gradients everywhere") {
    using DNet = Mlp<double>;
    DNet net({8, 6, 4, 3});
    Rng rng(23);
    net.init_weights(rng);
    SparseBatch data = dense_batch<double>({{1, 0, 0, 1, 0, 0, 1, 0.5}});
    DNet::Workspace ws;
    net.forward(data, ws);
    std::vector<double> targets = {ws.out[1]};  // target equals prediction
    std::vector<double> dout, grad;
    huber_gather_loss<double>(ws.out, 1, 3, {1}, targets, dout);
    net.backward(data, ws, dout, grad);
    for (double g : grad) CHECK(g == 0.0);
}
