#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace corruptlab::analysis {

struct Point {
    double x = 0.0;  // corruption ratio p (or transformed coordinate)
    double y = 0.0;  // score
};

// --- generic small-problem Levenberg-Marquardt ------------------------------

struct LmOptions {
    int max_iters = 200;
    double rel_step_tol = 1e-10;
    double mu_init = 1e-3;  // damping: x10 on reject, /10 on accept
};

struct LmResult {
    std::vector<double> params;
    double ssr = 0.0;
    int iters = 0;
    bool converged = false;
};

// residual_fn(params, residuals, jacobian): jacobian is row-major
// n_residuals x n_params, may be skipped when null.
using ResidualFn =
    std::function<void(const std::vector<double>&, std::vector<double>&,
                       std::vector<double>*)>;

LmResult levenberg_marquardt(ResidualFn residual_fn, std::vector<double> init,
                             int n_residuals, const LmOptions& opt = {});

// --- decay-law fit: S = a * (1 - exp(-lambda * (1 - p))) --------------------

struct DecayFit {
    bool ok = false;
    std::string error;
    double a = 0.0;
    double lambda = 0.0;
    double r_squared = 0.0;
    double residual_se = 0.0;
    int n_points = 0;
    int iters = 0;

    double predict(double p) const;
};

DecayFit fit_decay(const std::vector<Point>& points, const LmOptions& opt = {});

// 1 - SS_res / SS_tot about the mean; nullopt when the points have no
// variance (the failure case).
std::optional<double> r_squared(const std::vector<Point>& points,
                                const std::function<double(double)>& predictor);

// dS/dx evaluated at x = 1 - p for a fitted curve: a * lambda * e^{-lambda(1-p)}.
double marginal_utility(const DecayFit& fit, double p);

// --- imputation advantage grids ----------------------------------------------

struct AdvantageGrid {
    std::vector<double> p_grid;          // strictly increasing
    std::vector<double> q_grid;          // strictly increasing
    std::vector<std::vector<double>> mean;  // [p][q]
    std::vector<std::vector<double>> se;    // [p][q]
    int n_seeds = 0;

    double at(int ip, int iq) const { return mean[ip][iq]; }
};

// scores_with[p][q] and scores_without[p] are per-seed score samples.
// A = S_imputed - S_plain; the SE combines both terms' seed variances.
AdvantageGrid advantage_grid(
    const std::vector<double>& p_grid, const std::vector<double>& q_grid,
    const std::vector<std::vector<std::vector<double>>>& scores_with,
    const std::vector<std::vector<double>>& scores_without);

// --- zero contour (marching squares) ----------------------------------------

using Polyline = std::vector<Point>;  // x = p, y = q

struct ContourResult {
    bool found = false;        // false when the grid has a single sign
    Polyline line;             // longest connected polyline
    std::vector<Polyline> all;
};

ContourResult zero_contour(const AdvantageGrid& grid);

// --- decision-boundary fits ---------------------------------------------------

enum class BoundaryFamily { Logistic, Exponential };
enum class TaskClass { NoiseSensitive, NoiseInsensitive, Boundary };

struct BoundaryFit {
    bool ok = false;
    std::string error;
    BoundaryFamily family = BoundaryFamily::Logistic;
    // Logistic: q(p) = qmin + (qmax - qmin) / (1 + exp(k * (p - p0)))
    // Exponential: q(p) = c * (exp(k * p) - 1) / (exp(k) - 1)
    std::vector<double> params;
    double rmse = 0.0;
    TaskClass classification = TaskClass::Boundary;
    double signed_area = 0.0;  // integral of (q(p) - p) over [0, 1]

    double predict(double p) const;
};

BoundaryFit fit_boundary(const Polyline& contour, BoundaryFamily family,
                         const LmOptions& opt = {});

// Fits both families and keeps the lower-RMSE one.
BoundaryFit fit_boundary_best(const Polyline& contour, const LmOptions& opt = {});

// Offsets the fitted boundary along q by z * SE_A / |dA/dq|, both estimated
// from the grid at the boundary location. Points with a vanishing gradient
// are omitted.
struct SeBands {
    Polyline lower;
    Polyline upper;
};
SeBands se_bands(const BoundaryFit& fit, const AdvantageGrid& grid, double z);

// --- quality vs quantity ------------------------------------------------------

struct SizeRequirement {
    double p = 0.0;
    bool reachable = false;
    double required_size = 0.0;  // interpolated smallest size hitting target
    bool warning_non_monotone = false;
    double asymptote = 0.0;  // fitted plateau used for the unreachable call
};

struct QuantityPoint {
    double p;
    double size;
    double score;  // one seed's score
};

// Per corruption level: smallest dataset size whose mean score reaches
// `target` (monotone interpolation of mean score vs log size), or
// unreachable when the fitted plateau stays below target.
std::vector<SizeRequirement> quantity_tradeoff(const std::vector<QuantityPoint>& results,
                                               double target);

// Helpers shared by tests and rendering.
double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);
double mean_of(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

}  // namespace corruptlab::analysis
