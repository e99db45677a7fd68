#include "doctest.h"

#include <cmath>

#include "corruptlab/corruption.hpp"
#include "corruptlab/imputation.hpp"

using namespace corruptlab;
using namespace corruptlab::impute;
using corrupt::kMissingToken;
using sim::Observation;

namespace {

std::vector<std::uint32_t> random_tokens(int n, std::uint32_t vocab, Rng& rng) {
    std::vector<std::uint32_t> t(n);
    for (auto& x : t) x = static_cast<std::uint32_t>(rng.below(vocab));
    return t;
}

Observation lane_pattern(const std::vector<int>& occupied_cells, int lane = 0) {
    Observation o;
    for (int c : occupied_cells) o.set_cell(lane * 80 + c, true);
    return o;
}

}  // namespace

TEST_CASE("exact imputation with q = 0 inverts any pure-missing corruption") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        auto original = random_tokens(200, 64, rng);
        Rng cs(100 + trial), is(200 + trial);
        auto corrupted = corrupt::apply_token_missing(original, rng.u01(), cs);
        auto restored = impute_tokens_exact(corrupted, original, 0.0, 64, is);
        CHECK(restored == original);
    }
}

TEST_CASE("exact imputation never alters a non-missing position") {
    Rng rng(5);
    auto original = random_tokens(500, 32, rng);
    Rng cs(7), is(9);
    auto corrupted = corrupt::apply_token_missing(original, 0.5, cs);
    auto imputed = impute_tokens_exact(corrupted, original, 1.0, 32, is);
    for (std::size_t i = 0; i < original.size(); ++i)
        if (corrupted[i] != kMissingToken) CHECK(imputed[i] == corrupted[i]);
}

TEST_CASE("q = 1 fills are accidentally correct at rate 1/|V|") {
    Rng rng(11);
    const std::uint32_t vocab = 16;
    long correct = 0, missing = 0;
    auto original = random_tokens(60000, vocab, rng);
    Rng cs(13), is(17);
    auto corrupted = corrupt::apply_token_missing(original, 0.5, cs);
    auto imputed = impute_tokens_exact(corrupted, original, 1.0, vocab, is);
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (corrupted[i] != kMissingToken) continue;
        ++missing;
        if (imputed[i] == original[i]) ++correct;
    }
    const double frac = static_cast<double>(correct) / missing;
    const double expect = 1.0 / vocab;
    CHECK(std::abs(frac - expect) < 4.0 * std::sqrt(expect / missing));
}

TEST_CASE("restoration rate follows 1 - q + q/|V|") {
    Rng rng(19);
    const std::uint32_t vocab = 24;
    const double q = 0.4;
    auto original = random_tokens(60000, vocab, rng);
    Rng cs(23), is(29);
    auto corrupted = corrupt::apply_token_missing(original, 0.6, cs);
    auto imputed = impute_tokens_exact(corrupted, original, q, vocab, is);
    long correct = 0, missing = 0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (corrupted[i] != kMissingToken) continue;
        ++missing;
        if (imputed[i] == original[i]) ++correct;
    }
    const double expect = 1.0 - q + q / vocab;
    const double frac = static_cast<double>(correct) / missing;
    CHECK(std::abs(frac - expect) < 4.0 * std::sqrt(expect * (1 - expect) / missing));
}

TEST_CASE("misaligned token inputs are rejected") {
    Rng rng(31);
    std::vector<std::uint32_t> a = {1, 2, 3};
    std::vector<std::uint32_t> b = {1, 2};
    CHECK_THROWS(impute_tokens_exact(a, b, 0.0, 8, rng));
}

TEST_CASE("cell imputation with q = 0 restores the exact truth") {
    sim::DemandProfile d;
    d.horizon = 600;
    sim::TrafficEnv env(d, 5, 0.4, 11);
    Rng is(13);
    for (int i = 0; i < 40; ++i) env.decision_step(sim::Phase::NSThrough);
    const Observation truth = env.observe_truth();
    const Observation seen = env.observe_detected();
    CHECK(seen.occupied_count() < truth.occupied_count());
    CHECK(impute_cells_exact(seen, truth, 0.0, is) == truth);
}

TEST_CASE("cell imputation never alters non-missing cells") {
    Rng rng(37);
    Observation truth;
    Observation seen;
    for (int i = 0; i < sim::kOccupancyBits; ++i) {
        const bool occ = rng.bernoulli(0.3);
        truth.set_cell(i, occ);
        seen.set_cell(i, occ && rng.bernoulli(0.5));
    }
    Rng is(41);
    Observation imputed = impute_cells_exact(seen, truth, 1.0, is);
    for (int i = 0; i < sim::kOccupancyBits; ++i) {
        if (truth.cell(i) && !seen.cell(i)) continue;  // the missing slots
        CHECK(imputed.cell(i) == seen.cell(i));
    }
}

TEST_CASE("context fill: the worked neighborhood examples") {
    // 1,1,0,1,1 with w=2,k=3: middle cell sees 4 occupied of 4 -> filled
    Observation o = lane_pattern({0, 1, 3, 4});
    Observation f = context_fill(o, 2, 3);
    CHECK(f.cell(2));
    // isolated 1,0,0,0,1: every zero cell sees at most 2 occupied -> unchanged
    Observation iso = lane_pattern({10, 14});
    CHECK(context_fill(iso, 2, 3) == iso);
    // all-zero lane stays untouched
    Observation zero;
    CHECK(context_fill(zero, 2, 3) == zero);
}

TEST_CASE("context fill scales the threshold at lane ends") {
    // cell 0 has only 2 reachable neighbors; threshold ceil(3*2/4) = 2
    Observation o = lane_pattern({1, 2});
    Observation f = context_fill(o, 2, 3);
    CHECK(f.cell(0));
    // with only one occupied neighbor it stays dark
    Observation o2 = lane_pattern({1});
    CHECK_FALSE(context_fill(o2, 2, 3).cell(0));
}

TEST_CASE("context fill is monotone: ones never flip off") {
    Rng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        Observation o;
        for (int i = 0; i < sim::kOccupancyBits; ++i)
            if (rng.bernoulli(0.25)) o.set_cell(i, true);
        Observation f = context_fill(o, 2, 3);
        for (int i = 0; i < sim::kOccupancyBits; ++i)
            if (o.cell(i)) CHECK(f.cell(i));
        CHECK(f.occupied_count() >= o.occupied_count());
    }
}

TEST_CASE("context fill is a single pass: iterating can differ") {
    // 1,1,0,1,0,0,1,1: one pass fills cells 2 and 5 from the original
    // neighborhood; cell 4 fills only if the pass cascaded.
    Observation o = lane_pattern({0, 1, 3, 6, 7});
    Observation once = context_fill(o, 2, 3);
    CHECK(once.cell(2));
    CHECK(once.cell(5));
    CHECK_FALSE(once.cell(4));
    Observation twice = context_fill(once, 2, 3);
    CHECK(twice.cell(4));  // second application sees the filled neighbors
}

TEST_CASE("context fill leaves phase fields and other lanes alone") {
    Observation o = lane_pattern({0, 1, 3, 4}, 5);
    o.phase = 3;
    o.duration = 1.25f;
    Observation f = context_fill(o, 2, 3);
    CHECK(f.phase == 3);
    CHECK(f.duration == 1.25f);
    for (int lane = 0; lane < sim::kLanes; ++lane) {
        if (lane == 5) continue;
        for (int c = 0; c < 80; ++c) CHECK_FALSE(f.cell(lane * 80 + c));
    }
}

TEST_CASE("context fill parameter validation") {
    Observation o;
    CHECK_THROWS(context_fill(o, 0, 1));
    CHECK_THROWS(context_fill(o, 2, 5));
    CHECK_THROWS(context_fill(o, 2, 0));
}

TEST_CASE("method strings round-trip") {
    for (Method m : {Method::None, Method::ArtificialExact, Method::ContextFill})
        CHECK(method_from_string(method_to_string(m)) == m);
    CHECK_THROWS(method_from_string("knn"));
}
