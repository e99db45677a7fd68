#include "doctest.h"

#include <cmath>

#include "corruptlab/analysis.hpp"
#include "corruptlab/rng.hpp"

using namespace corruptlab;
using namespace corruptlab::analysis;

namespace {

std::vector<Point> sample_decay(double a, double lambda,
                                const std::vector<double>& ps) {
    std::vector<Point> pts;
    for (double p : ps)
        pts.push_back({p, a * (1.0 - std::exp(-lambda * (1.0 - p)))});
    return pts;
}

std::vector<double> grid11() {
    std::vector<double> ps;
    for (int i = 0; i <= 10; ++i) ps.push_back(i / 10.0);
    return ps;
}

AdvantageGrid make_grid(const std::vector<double>& pg, const std::vector<double>& qg,
                        const std::function<double(double, double)>& f,
                        double se = 0.01) {
    AdvantageGrid g;
    g.p_grid = pg;
    g.q_grid = qg;
    g.n_seeds = 3;
    g.mean.assign(pg.size(), std::vector<double>(qg.size(), 0.0));
    g.se.assign(pg.size(), std::vector<double>(qg.size(), se));
    for (std::size_t i = 0; i < pg.size(); ++i)
        for (std::size_t j = 0; j < qg.size(); ++j) g.mean[i][j] = f(pg[i], qg[j]);
    return g;
}

double bilinear_at(const AdvantageGrid& g, double p, double q) {
    std::size_t i = 0, j = 0;
    while (i + 2 < g.p_grid.size() && g.p_grid[i + 1] < p) ++i;
    while (j + 2 < g.q_grid.size() && g.q_grid[j + 1] < q) ++j;
    const double tx = (p - g.p_grid[i]) / (g.p_grid[i + 1] - g.p_grid[i]);
    const double ty = (q - g.q_grid[j]) / (g.q_grid[j + 1] - g.q_grid[j]);
    return g.mean[i][j] * (1 - tx) * (1 - ty) + g.mean[i + 1][j] * tx * (1 - ty) +
           g.mean[i][j + 1] * (1 - tx) * ty + g.mean[i + 1][j + 1] * tx * ty;
}

}  // namespace

TEST_CASE("decay fit round-trips the paper-scale parameter pairs exactly") {
    for (auto [a, lam] : {std::pair{0.475, 3.517}, std::pair{395.8, 7.493}}) {
        const auto pts = sample_decay(a, lam, grid11());
        const DecayFit fit = fit_decay(pts);
        REQUIRE(fit.ok);
        CHECK(std::abs(fit.a - a) / a < 1e-6);
        CHECK(std::abs(fit.lambda - lam) / lam < 1e-6);
        CHECK(fit.r_squared > 1.0 - 1e-9);
    }
}

TEST_CASE("decay fit under 1% noise recovers parameters within 5%") {
    Rng rng(3);
    const double a = 0.475, lam = 3.517;
    auto pts = sample_decay(a, lam, grid11());
    for (auto& pt : pts) pt.y += 0.01 * a * rng.gaussian();
    const DecayFit fit = fit_decay(pts);
    REQUIRE(fit.ok);
    CHECK(std::abs(fit.a - a) / a < 0.05);
    CHECK(std::abs(fit.lambda - lam) / lam < 0.05);
    CHECK(fit.r_squared >= 0.99);
}

TEST_CASE("decay fit is scale-equivariant") {
    const auto pts = sample_decay(1.7, 4.2, grid11());
    std::vector<Point> scaled = pts;
    for (auto& pt : scaled) pt.y *= 233.0;
    const DecayFit f1 = fit_decay(pts);
    const DecayFit f2 = fit_decay(scaled);
    REQUIRE(f1.ok);
    REQUIRE(f2.ok);
    CHECK(std::abs(f2.a - 233.0 * f1.a) / (233.0 * f1.a) < 1e-9);
    CHECK(std::abs(f2.lambda - f1.lambda) / f1.lambda < 1e-9);
}

TEST_CASE("degenerate decay inputs fail explicitly") {
    CHECK_FALSE(fit_decay({{0.0, 1.0}, {0.5, 0.5}, {1.0, 0.0}}).ok);  // 3 points
    CHECK_FALSE(fit_decay({{0.0, 1.0}, {0.0, 1.1}, {0.5, 0.5}, {0.5, 0.4}}).ok);
    const auto constant = fit_decay({{0.0, 2.0}, {0.3, 2.0}, {0.6, 2.0}, {0.9, 2.0}});
    CHECK_FALSE(constant.ok);
    CHECK(!constant.error.empty());
}

TEST_CASE("r squared: the three stated cases") {
    std::vector<Point> pts = {{0, 1.0}, {1, 2.0}, {2, 4.0}};
    CHECK(*r_squared(pts, [](double x) { return x == 0 ? 1.0 : x == 1 ? 2.0 : 4.0; }) ==
          doctest::Approx(1.0));
    const double mean = (1.0 + 2.0 + 4.0) / 3.0;
    CHECK(*r_squared(pts, [&](double) { return mean; }) == doctest::Approx(0.0));
    // hand case: predictor (1.5, 2.5, 3.5): SS_res = .25+.25+.25, SS_tot = 14/3
    CHECK(*r_squared(pts, [](double x) { return 1.5 + x; }) ==
          doctest::Approx(1.0 - 0.75 / (14.0 / 3.0)));
    CHECK_FALSE(r_squared({{0, 1.0}, {1, 1.0}}, [](double) { return 1.0; }).has_value());
}

TEST_CASE("marginal utility matches the analytic derivative") {
    DecayFit fit;
    fit.ok = true;
    fit.a = 0.475;
    fit.lambda = 3.517;
    CHECK(marginal_utility(fit, 1.0) == doctest::Approx(0.475 * 3.517));
    CHECK(marginal_utility(fit, 0.0) ==
          doctest::Approx(0.475 * 3.517 * std::exp(-3.517)).epsilon(1e-9));
    CHECK(marginal_utility(fit, 0.0) == doctest::Approx(0.0496).epsilon(2e-3));
    // centered finite differences of the fitted curve (dS/dx = -dS/dp)
    const double h = 1e-6;
    for (double p : {0.1, 0.35, 0.62, 0.9}) {
        const double fd = -(fit.predict(p + h) - fit.predict(p - h)) / (2 * h);
        CHECK(marginal_utility(fit, p) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("advantage grid reduces seed tables to means and combined SEs") {
    const std::vector<double> pg = {0.0, 0.5};
    const std::vector<double> qg = {0.1, 0.9};
    // hand 2x2 case, 2 seeds each
    std::vector<std::vector<std::vector<double>>> with = {
        {{1.0, 1.2}, {0.4, 0.8}},
        {{0.5, 0.7}, {0.2, 0.0}},
    };
    std::vector<std::vector<double>> without = {{0.9, 1.1}, {0.5, 0.3}};
    AdvantageGrid g = advantage_grid(pg, qg, with, without);
    CHECK(g.mean[0][0] == doctest::Approx(1.1 - 1.0));
    CHECK(g.mean[0][1] == doctest::Approx(0.6 - 1.0));
    CHECK(g.mean[1][0] == doctest::Approx(0.6 - 0.4));
    CHECK(g.mean[1][1] == doctest::Approx(0.1 - 0.4));
    // seed variance of {1.0,1.2} is 0.02; SE^2 = 0.02/2 + 0.02/2
    CHECK(g.se[0][0] == doctest::Approx(std::sqrt(0.02)));
    CHECK_THROWS(advantage_grid({0.5, 0.0}, qg, with, without));
    CHECK_THROWS(advantage_grid(pg, qg, with, {{0.9}, {0.5}}));
}

TEST_CASE("identical score tables give an identically zero advantage") {
    const std::vector<double> pg = {0.0, 0.5, 1.0};
    const std::vector<double> qg = {0.0, 1.0};
    std::vector<std::vector<std::vector<double>>> with(
        3, std::vector<std::vector<double>>(2, {0.7, 0.9}));
    std::vector<std::vector<double>> without(3, {0.7, 0.9});
    AdvantageGrid g = advantage_grid(pg, qg, with, without);
    for (const auto& row : g.mean)
        for (double v : row) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("zero contour of A = q - 0.5 is the horizontal midline") {
    auto ps = grid11();
    AdvantageGrid g = make_grid(ps, ps, [](double, double q) { return q - 0.5; });
    ContourResult c = zero_contour(g);
    REQUIRE(c.found);
    CHECK(c.line.size() >= 11);
    for (const auto& pt : c.line) CHECK(pt.y == doctest::Approx(0.5).epsilon(1e-12));
    const auto [mn, mx] =
        std::minmax_element(c.line.begin(), c.line.end(),
                            [](const Point& a, const Point& b) { return a.x < b.x; });
    CHECK(mn->x == doctest::Approx(0.0));
    CHECK(mx->x == doctest::Approx(1.0));
}

TEST_CASE("zero contour of A = q - p tracks the diagonal") {
    auto ps = grid11();
    AdvantageGrid g = make_grid(ps, ps, [](double p, double q) { return q - p; });
    ContourResult c = zero_contour(g);
    REQUIRE(c.found);
    for (const auto& pt : c.line)
        CHECK(std::abs(pt.y - pt.x) < 1e-12);
}

TEST_CASE("single-signed grids report an empty contour") {
    auto ps = grid11();
    AdvantageGrid g = make_grid(ps, ps, [](double p, double q) { return 1.0 + p + q; });
    CHECK_FALSE(zero_contour(g).found);
}

TEST_CASE("contour points sit on the bilinear zero set") {
    Rng rng(17);
    auto ps = grid11();
    AdvantageGrid g = make_grid(ps, ps, [&rng](double, double) {
        return rng.uniform(-1.0, 1.0);
    });
    ContourResult c = zero_contour(g);
    REQUIRE(c.found);
    int checked = 0;
    for (const auto& line : c.all)
        for (const auto& pt : line) {
            CHECK(std::abs(bilinear_at(g, pt.x, pt.y)) < 1e-12);
            ++checked;
        }
    CHECK(checked > 10);
}

TEST_CASE("logistic boundary round-trips its midpoint") {
    Polyline pts;
    const double qmin = 0.15, qmax = 0.8, k = 9.0, p0 = 0.7;
    for (int i = 0; i <= 20; ++i) {
        const double p = i / 20.0;
        pts.push_back({p, qmin + (qmax - qmin) / (1.0 + std::exp(k * (p - p0)))});
    }
    const BoundaryFit fit = fit_boundary(pts, BoundaryFamily::Logistic);
    REQUIRE(fit.ok);
    CHECK(fit.params[2] > 0.0);
    CHECK(std::abs(fit.params[3] - p0) < 0.05);
    CHECK(fit.rmse < 1e-8);
}

TEST_CASE("exponential boundaries beat logistic ones on exponential data") {
    Polyline pts;
    const double c = 0.9, k = 4.0;
    for (int i = 0; i <= 20; ++i) {
        const double p = i / 20.0;
        pts.push_back({p, c * (std::exp(k * p) - 1.0) / (std::exp(k) - 1.0)});
    }
    const BoundaryFit ex = fit_boundary(pts, BoundaryFamily::Exponential);
    const BoundaryFit lg = fit_boundary(pts, BoundaryFamily::Logistic);
    REQUIRE(ex.ok);
    CHECK(ex.rmse < lg.rmse);
    CHECK(std::abs(ex.predict(0.0)) < 1e-9);  // passes through (0, 0)
    const BoundaryFit best = fit_boundary_best(pts);
    CHECK(best.family == BoundaryFamily::Exponential);
    // the curve lies below the diagonal: noise-sensitive
    CHECK(best.classification == TaskClass::NoiseSensitive);
}

TEST_CASE("a diagonal contour classifies as the boundary case") {
    Polyline pts;
    for (int i = 0; i <= 10; ++i) pts.push_back({i / 10.0, i / 10.0});
    const BoundaryFit fit = fit_boundary_best(pts);
    REQUIRE(fit.ok);
    CHECK(std::abs(fit.signed_area) < 1e-3);
    CHECK(fit.classification == TaskClass::Boundary);
}

TEST_CASE("curves above the diagonal classify as noise-insensitive") {
    Polyline pts;
    for (int i = 0; i <= 10; ++i) {
        const double p = i / 10.0;
        pts.push_back({p, 0.6 + 0.3 / (1.0 + std::exp(8.0 * (p - 0.7)))});
    }
    const BoundaryFit fit = fit_boundary(pts, BoundaryFamily::Logistic);
    REQUIRE(fit.ok);
    CHECK(fit.classification == TaskClass::NoiseInsensitive);
}

TEST_CASE("se bands: z = 0 collapses onto the fit, 1.96 contains 1") {
    auto ps = grid11();
    // A = 2 (q - 0.5): dA/dq = 2 everywhere, constant SE 0.05
    AdvantageGrid g =
        make_grid(ps, ps, [](double, double q) { return 2.0 * (q - 0.5); }, 0.05);
    ContourResult c = zero_contour(g);
    REQUIRE(c.found);
    BoundaryFit fit = fit_boundary_best(c.line);
    REQUIRE(fit.ok);
    const SeBands z0 = se_bands(fit, g, 0.0);
    for (std::size_t i = 0; i < z0.lower.size(); ++i)
        CHECK(z0.lower[i].y == doctest::Approx(z0.upper[i].y));
    const SeBands z1 = se_bands(fit, g, 1.0);
    const SeBands z2 = se_bands(fit, g, 1.96);
    REQUIRE(z1.lower.size() == z2.lower.size());
    for (std::size_t i = 0; i < z1.lower.size(); ++i) {
        CHECK(z2.upper[i].y >= z1.upper[i].y);
        CHECK(z2.lower[i].y <= z1.lower[i].y);
        // hand formula: offset = z * 0.05 / 2
        CHECK(z1.upper[i].y - z1.lower[i].y ==
              doctest::Approx(2.0 * 0.05 / 2.0).epsilon(0.1));
    }
}

TEST_CASE("quantity tradeoff inverts a synthetic saturation curve") {
    // S(size) = 0.8 * (1 - exp(-size / 400))
    std::vector<QuantityPoint> results;
    for (double size : {100.0, 141.0, 200.0, 283.0, 400.0, 566.0, 800.0, 1131.0, 1600.0}) {
        for (int seed = 0; seed < 3; ++seed) {
            const double s = 0.8 * (1.0 - std::exp(-size / 400.0));
            results.push_back({0.2, size, s});
        }
    }
    const double target = 0.8 * (1.0 - std::exp(-1200.0 / 400.0));  // needs size 1200
    auto reqs = quantity_tradeoff(results, target);
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].reachable);
    CHECK(std::abs(reqs[0].required_size - 1200.0) / 1200.0 < 0.10);
}

TEST_CASE("quantity tradeoff reports unreachable targets") {
    std::vector<QuantityPoint> results;
    for (double size : {100.0, 200.0, 400.0, 800.0}) {
        for (int seed = 0; seed < 2; ++seed)
            results.push_back({0.4, size, 0.5 * (1.0 - std::exp(-size / 150.0))});
    }
    auto reqs = quantity_tradeoff(results, 0.9);  // plateau is 0.5
    REQUIRE(reqs.size() == 1);
    CHECK_FALSE(reqs[0].reachable);
    CHECK(reqs[0].asymptote < 0.6);
    CHECK_THROWS(quantity_tradeoff({{0.1, 100.0, 0.5}, {0.1, 200.0, 0.6}}, 0.9));
}

TEST_CASE("quantity tradeoff picks the smallest size already at a plateau") {
    std::vector<QuantityPoint> results;
    for (double size : {100.0, 200.0, 400.0}) {
        for (int seed = 0; seed < 2; ++seed)
            results.push_back({0.0, size, 0.95});
    }
    auto reqs = quantity_tradeoff(results, 0.95);
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].reachable);
    CHECK(reqs[0].required_size == doctest::Approx(100.0));
}

TEST_CASE("spearman rho handles monotone, reversed, and tied data") {
    CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    const double rho = spearman_rho({1, 2, 3, 4, 5}, {2, 1, 3, 5, 4});
    CHECK(rho > 0.5);
    CHECK(rho < 1.0);
}
