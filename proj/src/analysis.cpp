#include "corruptlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace corruptlab::analysis {

namespace {

// Gaussian elimination with partial pivoting for the k x k normal equations.
bool solve_dense(std::vector<double> A, std::vector<double> b, int k,
                 std::vector<double>& x) {
    for (int col = 0; col < k; ++col) {
        int piv = col;
        for (int r = col + 1; r < k; ++r)
            if (std::abs(A[r * k + col]) > std::abs(A[piv * k + col])) piv = r;
        if (std::abs(A[piv * k + col]) < 1e-300) return false;
        if (piv != col) {
            for (int c = 0; c < k; ++c) std::swap(A[piv * k + c], A[col * k + c]);
            std::swap(b[piv], b[col]);
        }
        const double d = A[col * k + col];
        for (int r = col + 1; r < k; ++r) {
            const double f = A[r * k + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < k; ++c) A[r * k + c] -= f * A[col * k + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(k, 0.0);
    for (int r = k - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < k; ++c) acc -= A[r * k + c] * x[c];
        x[r] = acc / A[r * k + r];
    }
    return true;
}

double ssr_of(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

}  // namespace

LmResult levenberg_marquardt(ResidualFn residual_fn, std::vector<double> init,
                             int n_residuals, const LmOptions& opt) {
    const int k = static_cast<int>(init.size());
    LmResult res;
    res.params = std::move(init);
    std::vector<double> r(n_residuals), jac(static_cast<std::size_t>(n_residuals) * k);
    residual_fn(res.params, r, &jac);
    res.ssr = ssr_of(r);
    double mu = opt.mu_init;

    for (res.iters = 0; res.iters < opt.max_iters; ++res.iters) {
        // normal equations J^T J + mu * diag(J^T J)
        std::vector<double> jtj(static_cast<std::size_t>(k) * k, 0.0), jtr(k, 0.0);
        for (int i = 0; i < n_residuals; ++i) {
            const double* row = jac.data() + static_cast<std::size_t>(i) * k;
            for (int a = 0; a < k; ++a) {
                jtr[a] += row[a] * r[i];
                for (int b = a; b < k; ++b) jtj[a * k + b] += row[a] * row[b];
            }
        }
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < a; ++b) jtj[a * k + b] = jtj[b * k + a];

        std::vector<double> damped = jtj;
        for (int a = 0; a < k; ++a) {
            double d = jtj[a * k + a] * mu;
            if (d == 0.0) d = mu;  // degenerate column: fall back to identity damping
            damped[a * k + a] += d;
        }
        std::vector<double> neg_jtr(k), step;
        for (int a = 0; a < k; ++a) neg_jtr[a] = -jtr[a];
        if (!solve_dense(damped, neg_jtr, k, step)) {
            mu *= 10.0;
            continue;
        }

        std::vector<double> trial = res.params;
        double step_norm = 0.0, param_norm = 0.0;
        for (int a = 0; a < k; ++a) {
            trial[a] += step[a];
            step_norm += step[a] * step[a];
            param_norm += res.params[a] * res.params[a];
        }
        std::vector<double> r_trial(n_residuals);
        residual_fn(trial, r_trial, nullptr);
        const double ssr_trial = ssr_of(r_trial);

        if (ssr_trial < res.ssr) {
            res.params = trial;
            res.ssr = ssr_trial;
            mu = std::max(mu / 10.0, 1e-12);
            residual_fn(res.params, r, &jac);
            if (std::sqrt(step_norm) <
                opt.rel_step_tol * (std::sqrt(param_norm) + opt.rel_step_tol)) {
                res.converged = true;
                break;
            }
        } else {
            mu *= 10.0;
            if (mu > 1e14) break;
        }
    }
    return res;
}

double DecayFit::predict(double p) const {
    return a * (1.0 - std::exp(-lambda * (1.0 - p)));
}

DecayFit fit_decay(const std::vector<Point>& points, const LmOptions& opt) {
    DecayFit fit;
    fit.n_points = static_cast<int>(points.size());
    if (points.size() < 4) {
        fit.error = "need at least 4 points";
        return fit;
    }
    std::vector<double> xs;
    double smin = points[0].y, smax = points[0].y;
    for (const auto& pt : points) {
        xs.push_back(pt.x);
        smin = std::min(smin, pt.y);
        smax = std::max(smax, pt.y);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             xs.end());
    if (xs.size() < 3) {
        fit.error = "need at least 3 distinct corruption ratios";
        return fit;
    }
    if (smax - smin <= 0.0) {
        fit.error = "scores are constant";
        return fit;
    }

    auto residual_fn = [&points](const std::vector<double>& th,
                                 std::vector<double>& r, std::vector<double>* jac) {
        const double a = th[0], lam = th[1];
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double x = 1.0 - points[i].x;
            const double e = std::exp(-lam * x);
            r[i] = a * (1.0 - e) - points[i].y;
            if (jac) {
                (*jac)[i * 2 + 0] = 1.0 - e;
                (*jac)[i * 2 + 1] = a * x * e;
            }
        }
    };
    const LmResult lm = levenberg_marquardt(
        residual_fn, {smax, 3.0}, static_cast<int>(points.size()), opt);

    fit.a = lm.params[0];
    fit.lambda = lm.params[1];
    fit.iters = lm.iters;
    if (!(fit.lambda > 0.0) || !std::isfinite(fit.a) || !std::isfinite(fit.lambda)) {
        fit.error = "fit did not converge to a positive decay rate";
        return fit;
    }
    const auto r2 = r_squared(points, [&fit](double p) { return fit.predict(p); });
    if (!r2) {
        fit.error = "zero variance in scores";
        return fit;
    }
    fit.r_squared = *r2;
    const int dof = std::max(1, fit.n_points - 2);
    fit.residual_se = std::sqrt(lm.ssr / dof);
    fit.ok = true;
    return fit;
}

std::optional<double> r_squared(const std::vector<Point>& points,
                                const std::function<double(double)>& predictor) {
    if (points.size() < 2) return std::nullopt;
    double mean = 0.0;
    for (const auto& pt : points) mean += pt.y;
    mean /= static_cast<double>(points.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (const auto& pt : points) {
        ss_tot += (pt.y - mean) * (pt.y - mean);
        const double e = pt.y - predictor(pt.x);
        ss_res += e * e;
    }
    if (ss_tot <= 0.0) return std::nullopt;
    return 1.0 - ss_res / ss_tot;
}

double marginal_utility(const DecayFit& fit, double p) {
    return fit.a * fit.lambda * std::exp(-fit.lambda * (1.0 - p));
}

AdvantageGrid advantage_grid(
    const std::vector<double>& p_grid, const std::vector<double>& q_grid,
    const std::vector<std::vector<std::vector<double>>>& scores_with,
    const std::vector<std::vector<double>>& scores_without) {
    const int np = static_cast<int>(p_grid.size());
    const int nq = static_cast<int>(q_grid.size());
    for (int i = 1; i < np; ++i)
        if (p_grid[i] <= p_grid[i - 1])
            throw std::invalid_argument("p grid must be strictly increasing");
    for (int i = 1; i < nq; ++i)
        if (q_grid[i] <= q_grid[i - 1])
            throw std::invalid_argument("q grid must be strictly increasing");
    if (static_cast<int>(scores_with.size()) != np ||
        static_cast<int>(scores_without.size()) != np)
        throw std::invalid_argument("p grid does not match score table");

    AdvantageGrid g;
    g.p_grid = p_grid;
    g.q_grid = q_grid;
    g.mean.assign(np, std::vector<double>(nq, 0.0));
    g.se.assign(np, std::vector<double>(nq, 0.0));
    g.n_seeds = 0;
    for (int ip = 0; ip < np; ++ip) {
        if (static_cast<int>(scores_with[ip].size()) != nq)
            throw std::invalid_argument("q grid does not match score table");
        const auto& plain = scores_without[ip];
        if (plain.size() < 2)
            throw std::invalid_argument("need >= 2 seeds for standard errors");
        const double m0 = mean_of(plain);
        const double v0 = sample_sd(plain) * sample_sd(plain) / plain.size();
        for (int iq = 0; iq < nq; ++iq) {
            const auto& with = scores_with[ip][iq];
            if (with.size() < 2)
                throw std::invalid_argument("need >= 2 seeds for standard errors");
            const double m1 = mean_of(with);
            const double v1 = sample_sd(with) * sample_sd(with) / with.size();
            g.mean[ip][iq] = m1 - m0;
            g.se[ip][iq] = std::sqrt(v0 + v1);
            g.n_seeds = static_cast<int>(with.size());
        }
    }
    return g;
}

namespace {

struct Segment {
    Point a, b;
};

Point edge_cross(double xa, double ya, double va, double xb, double yb, double vb) {
    const double t = va / (va - vb);
    return {xa + t * (xb - xa), ya + t * (yb - ya)};
}

double length_of(const Polyline& line) {
    double len = 0.0;
    for (std::size_t i = 1; i < line.size(); ++i)
        len += std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
    return len;
}

}  // namespace

ContourResult zero_contour(const AdvantageGrid& grid) {
    ContourResult res;
    const int np = static_cast<int>(grid.p_grid.size());
    const int nq = static_cast<int>(grid.q_grid.size());
    bool any_pos = false, any_neg = false;
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nq; ++j)
            (grid.mean[i][j] >= 0.0 ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg) return res;  // single sign: empty contour

    std::vector<Segment> segments;
    for (int i = 0; i + 1 < np; ++i) {
        for (int j = 0; j + 1 < nq; ++j) {
            const double x0 = grid.p_grid[i], x1 = grid.p_grid[i + 1];
            const double y0 = grid.q_grid[j], y1 = grid.q_grid[j + 1];
            // corners: 0=(x0,y0) 1=(x1,y0) 2=(x1,y1) 3=(x0,y1)
            const double v0 = grid.mean[i][j], v1 = grid.mean[i + 1][j];
            const double v2 = grid.mean[i + 1][j + 1], v3 = grid.mean[i][j + 1];
            int mask = 0;
            if (v0 >= 0.0) mask |= 1;
            if (v1 >= 0.0) mask |= 2;
            if (v2 >= 0.0) mask |= 4;
            if (v3 >= 0.0) mask |= 8;
            if (mask == 0 || mask == 15) continue;

            const Point pb = edge_cross(x0, y0, v0, x1, y0, v1);  // bottom
            const Point pr = edge_cross(x1, y0, v1, x1, y1, v2);  // right
            const Point pt = edge_cross(x1, y1, v2, x0, y1, v3);  // top
            const Point pl = edge_cross(x0, y1, v3, x0, y0, v0);  // left

            switch (mask) {
                case 1: case 14: segments.push_back({pl, pb}); break;
                case 2: case 13: segments.push_back({pb, pr}); break;
                case 4: case 11: segments.push_back({pr, pt}); break;
                case 8: case 7:  segments.push_back({pt, pl}); break;
                case 3: case 12: segments.push_back({pl, pr}); break;
                case 6: case 9:  segments.push_back({pb, pt}); break;
                case 5: case 10: {
                    // saddle: connect according to the cell-average sign
                    const double center = 0.25 * (v0 + v1 + v2 + v3);
                    const bool center_pos = center >= 0.0;
                    if ((mask == 5) == center_pos) {
                        segments.push_back({pl, pt});
                        segments.push_back({pb, pr});
                    } else {
                        segments.push_back({pl, pb});
                        segments.push_back({pr, pt});
                    }
                    break;
                }
                default: break;
            }
        }
    }
    if (segments.empty()) return res;

    // Stitch segments sharing endpoints into polylines. Interpolated points on
    // a shared edge are computed from the same corner values, so exact
    // comparison on the coordinates is safe.
    const auto key = [](const Point& p) { return std::pair<double, double>(p.x, p.y); };
    std::multimap<std::pair<double, double>, int> by_end;
    for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
        by_end.emplace(key(segments[s].a), s);
        by_end.emplace(key(segments[s].b), s);
    }
    std::vector<bool> used(segments.size(), false);
    for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
        if (used[s]) continue;
        used[s] = true;
        Polyline line = {segments[s].a, segments[s].b};
        for (int dir = 0; dir < 2; ++dir) {
            bool grew = true;
            while (grew) {
                grew = false;
                const Point& tip = dir == 0 ? line.back() : line.front();
                auto [lo, hi] = by_end.equal_range(key(tip));
                for (auto it = lo; it != hi; ++it) {
                    const int t = it->second;
                    if (used[t]) continue;
                    const Point& ta = segments[t].a;
                    const Point& tb = segments[t].b;
                    const Point next = (key(ta) == key(tip)) ? tb : ta;
                    used[t] = true;
                    if (dir == 0)
                        line.push_back(next);
                    else
                        line.insert(line.begin(), next);
                    grew = true;
                    break;
                }
            }
        }
        res.all.push_back(std::move(line));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < res.all.size(); ++i)
        if (length_of(res.all[i]) > length_of(res.all[best])) best = i;
    res.line = res.all[best];
    res.found = true;
    return res;
}

double BoundaryFit::predict(double p) const {
    if (family == BoundaryFamily::Logistic) {
        const double qmin = params[0], qmax = params[1], k = params[2], p0 = params[3];
        return qmin + (qmax - qmin) / (1.0 + std::exp(k * (p - p0)));
    }
    const double c = params[0], k = params[1];
    if (std::abs(k) < 1e-9) return c * p;
    return c * (std::exp(k * p) - 1.0) / (std::exp(k) - 1.0);
}

namespace {

double signed_area_vs_diagonal(const BoundaryFit& fit) {
    // Simpson's rule on [0, 1]
    const int n = 2000;  // even
    const double h = 1.0 / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double p = i * h;
        const double f = fit.predict(p) - p;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f;
    }
    return acc * h / 3.0;
}

constexpr double kBoundaryAreaTol = 1e-3;

}  // namespace

BoundaryFit fit_boundary(const Polyline& contour, BoundaryFamily family,
                         const LmOptions& opt) {
    BoundaryFit fit;
    fit.family = family;
    if (contour.size() < 5) {
        fit.error = "need at least 5 contour points";
        return fit;
    }
    const int n = static_cast<int>(contour.size());

    LmResult lm;
    if (family == BoundaryFamily::Logistic) {
        double qlo = contour[0].y, qhi = contour[0].y;
        std::vector<double> ps;
        for (const auto& pt : contour) {
            qlo = std::min(qlo, pt.y);
            qhi = std::max(qhi, pt.y);
            ps.push_back(pt.x);
        }
        std::nth_element(ps.begin(), ps.begin() + ps.size() / 2, ps.end());
        const double p_med = ps[ps.size() / 2];
        auto residual_fn = [&contour](const std::vector<double>& th,
                                      std::vector<double>& r,
                                      std::vector<double>* jac) {
            const double qmin = th[0], qmax = th[1], k = th[2], p0 = th[3];
            for (std::size_t i = 0; i < contour.size(); ++i) {
                const double dp = contour[i].x - p0;
                const double e = std::exp(k * dp);
                const double s = 1.0 / (1.0 + e);
                r[i] = qmin + (qmax - qmin) * s - contour[i].y;
                if (jac) {
                    (*jac)[i * 4 + 0] = 1.0 - s;
                    (*jac)[i * 4 + 1] = s;
                    (*jac)[i * 4 + 2] = -(qmax - qmin) * s * s * e * dp;
                    (*jac)[i * 4 + 3] = (qmax - qmin) * s * s * e * k;
                }
            }
        };
        lm = levenberg_marquardt(residual_fn, {qlo, qhi, 5.0, p_med}, n, opt);
        // k < 0 is the same curve with the bounds swapped; normalize.
        if (lm.params[2] < 0.0) {
            std::swap(lm.params[0], lm.params[1]);
            lm.params[2] = -lm.params[2];
        }
    } else {
        auto residual_fn = [&contour](const std::vector<double>& th,
                                      std::vector<double>& r,
                                      std::vector<double>* jac) {
            const double c = th[0];
            const double k = std::abs(th[1]) < 1e-9 ? 1e-9 : th[1];
            const double ek = std::exp(k);
            for (std::size_t i = 0; i < contour.size(); ++i) {
                const double p = contour[i].x;
                const double ekp = std::exp(k * p);
                const double denom = ek - 1.0;
                r[i] = c * (ekp - 1.0) / denom - contour[i].y;
                if (jac) {
                    (*jac)[i * 2 + 0] = (ekp - 1.0) / denom;
                    (*jac)[i * 2 + 1] =
                        c * (p * ekp * denom - (ekp - 1.0) * ek) / (denom * denom);
                }
            }
        };
        const double c0 = std::max(1e-3, contour.back().y);
        lm = levenberg_marquardt(residual_fn, {c0, 3.0}, n, opt);
    }

    fit.params = lm.params;
    for (double v : fit.params)
        if (!std::isfinite(v)) {
            fit.error = "fit diverged";
            fit.rmse = std::sqrt(lm.ssr / n);
            return fit;
        }
    fit.rmse = std::sqrt(lm.ssr / n);
    fit.signed_area = signed_area_vs_diagonal(fit);
    fit.classification = fit.signed_area > kBoundaryAreaTol
                             ? TaskClass::NoiseInsensitive
                         : fit.signed_area < -kBoundaryAreaTol
                             ? TaskClass::NoiseSensitive
                             : TaskClass::Boundary;
    fit.ok = true;
    return fit;
}

BoundaryFit fit_boundary_best(const Polyline& contour, const LmOptions& opt) {
    const BoundaryFit lg = fit_boundary(contour, BoundaryFamily::Logistic, opt);
    const BoundaryFit ex = fit_boundary(contour, BoundaryFamily::Exponential, opt);
    if (!lg.ok) return ex;
    if (!ex.ok) return lg;
    return ex.rmse < lg.rmse ? ex : lg;
}

namespace {

// Bilinear interpolation helpers over the advantage grid.
struct CellLookup {
    int i, j;
    double tx, ty;
};

bool locate(const std::vector<double>& axis, double v, int& idx, double& t) {
    if (axis.size() < 2) return false;
    if (v < axis.front() || v > axis.back()) return false;
    for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
        if (v <= axis[i + 1]) {
            idx = static_cast<int>(i);
            t = (v - axis[i]) / (axis[i + 1] - axis[i]);
            return true;
        }
    }
    return false;
}

bool cell_at(const AdvantageGrid& g, double p, double q, CellLookup& c) {
    return locate(g.p_grid, p, c.i, c.tx) && locate(g.q_grid, q, c.j, c.ty);
}

double bilinear(const std::vector<std::vector<double>>& f, const CellLookup& c) {
    const double a = f[c.i][c.j], b = f[c.i + 1][c.j];
    const double d = f[c.i][c.j + 1], e = f[c.i + 1][c.j + 1];
    return a * (1 - c.tx) * (1 - c.ty) + b * c.tx * (1 - c.ty) +
           d * (1 - c.tx) * c.ty + e * c.tx * c.ty;
}

double bilinear_dq(const AdvantageGrid& g, const CellLookup& c) {
    const double dy = g.q_grid[c.j + 1] - g.q_grid[c.j];
    const double lo = g.mean[c.i][c.j] * (1 - c.tx) + g.mean[c.i + 1][c.j] * c.tx;
    const double hi =
        g.mean[c.i][c.j + 1] * (1 - c.tx) + g.mean[c.i + 1][c.j + 1] * c.tx;
    return (hi - lo) / dy;
}

}  // namespace

SeBands se_bands(const BoundaryFit& fit, const AdvantageGrid& grid, double z) {
    SeBands bands;
    const double p0 = grid.p_grid.front(), p1 = grid.p_grid.back();
    const int steps = 100;
    for (int i = 0; i <= steps; ++i) {
        const double p = p0 + (p1 - p0) * i / steps;
        double q = fit.predict(p);
        q = std::clamp(q, grid.q_grid.front(), grid.q_grid.back());
        CellLookup c;
        if (!cell_at(grid, p, q, c)) continue;
        const double grad = bilinear_dq(grid, c);
        if (std::abs(grad) < 1e-12) continue;  // omitted: no q-sensitivity here
        const double se = bilinear(grid.se, c);
        const double offset = z * se / std::abs(grad);
        bands.lower.push_back({p, q - offset});
        bands.upper.push_back({p, q + offset});
    }
    return bands;
}

std::vector<SizeRequirement> quantity_tradeoff(const std::vector<QuantityPoint>& results,
                                               double target) {
    std::map<double, std::map<double, std::vector<double>>> by_p;
    for (const auto& r : results) by_p[r.p][r.size].push_back(r.score);

    std::vector<SizeRequirement> out;
    for (const auto& [p, by_size] : by_p) {
        if (by_size.size() < 3)
            throw std::invalid_argument("quantity_tradeoff needs >= 3 sizes per p");
        SizeRequirement req;
        req.p = p;
        std::vector<double> sizes, means, ses;
        for (const auto& [size, scores] : by_size) {
            sizes.push_back(size);
            means.push_back(mean_of(scores));
            ses.push_back(scores.size() > 1
                              ? sample_sd(scores) / std::sqrt(double(scores.size()))
                              : 0.0);
        }
        for (std::size_t i = 0; i + 1 < means.size(); ++i)
            if (means[i + 1] < means[i] - 2.0 * (ses[i] + ses[i + 1]) - 1e-12)
                req.warning_non_monotone = true;

        // in-grid: linear interpolation of mean score vs log(size)
        bool reached = false;
        for (std::size_t i = 0; i < means.size(); ++i) {
            if (means[i] >= target) {
                if (i == 0) {
                    req.required_size = sizes[0];
                } else {
                    const double t = (target - means[i - 1]) / (means[i] - means[i - 1]);
                    req.required_size = std::exp(std::log(sizes[i - 1]) +
                                                 t * (std::log(sizes[i]) -
                                                      std::log(sizes[i - 1])));
                }
                req.reachable = true;
                reached = true;
                break;
            }
        }
        if (!reached) {
            // beyond the grid: invert the fitted saturation curve
            const double size_max = sizes.back();
            std::vector<Point> pts;
            for (std::size_t i = 0; i < sizes.size(); ++i)
                pts.push_back({1.0 - sizes[i] / size_max, means[i]});
            DecayFit fit;
            if (pts.size() >= 4) fit = fit_decay(pts);
            const double asym = fit.ok ? fit.a : means.back();
            req.asymptote = asym;
            if (asym > target && fit.ok) {
                const double frac = 1.0 - target / fit.a;  // e^{-lambda * s/smax}
                if (frac > 0.0) {
                    req.required_size = -size_max * std::log(frac) / fit.lambda;
                    req.reachable = true;
                }
            }
        } else {
            req.asymptote = means.back();
        }
        out.push_back(req);
    }
    return out;
}

double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2)
        throw std::invalid_argument("spearman_rho needs matched series");
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
            i = j + 1;
        }
        return rank;
    };
    const auto rx = ranks(xs), ry = ranks(ys);
    const double mx = mean_of(rx), my = mean_of(ry);
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx <= 0.0 || dy <= 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace corruptlab::analysis
