#include "parisi/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "parisi/errors.hpp"
#include "parisi/quadrature.hpp"
#include "parisi/rng.hpp"

namespace parisi {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double u) {
    u = std::clamp(u, 1e-16, 1.0 - 1e-16);
    return std::log(u / (1.0 - u));
}

AtomicMeasure decode(const std::vector<double>& t, int k) {
    std::vector<double> qs(k + 1), ws(k + 1);
    double prev = 0.0;
    for (int i = 0; i <= k; ++i) {
        double u = logistic(t[i]);
        prev = prev + u * (1.0 - prev);
        qs[i] = std::min(prev, 1.0);
    }
    double mx = -1e300;
    for (int i = 0; i <= k; ++i) mx = std::max(mx, t[k + 1 + i]);
    double total = 0.0;
    for (int i = 0; i <= k; ++i) {
        ws[i] = std::exp(t[k + 1 + i] - mx);
        total += ws[i];
    }
    for (double& w : ws) w /= total;
    return AtomicMeasure(std::move(qs), std::move(ws));
}

std::vector<double> encode(const AtomicMeasure& mu, int k) {
    // Pad with split copies of the heaviest atom when the measure has fewer
    // than k+1 atoms (merged duplicates from a previous level).
    std::vector<double> qs = mu.atoms(), ws = mu.weights();
    while (static_cast<int>(qs.size()) < k + 1) {
        std::size_t imax = 0;
        for (std::size_t i = 1; i < ws.size(); ++i)
            if (ws[i] > ws[imax]) imax = i;
        double q = qs[imax];
        double w = ws[imax] / 2.0;
        ws[imax] = w;
        double q2 = std::clamp(q + 0.05, 0.0, 1.0);
        if (std::abs(q2 - q) < 1e-3) q2 = std::clamp(q - 0.05, 0.0, 1.0);
        qs.push_back(q2);
        ws.push_back(w);
        std::vector<std::size_t> idx(qs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return qs[a] < qs[b]; });
        std::vector<double> q3, w3;
        for (auto i : idx) {
            q3.push_back(qs[i]);
            w3.push_back(ws[i]);
        }
        qs = q3;
        ws = w3;
    }
    std::vector<double> t(2 * (k + 1));
    double prev = 0.0;
    for (int i = 0; i <= k; ++i) {
        double u = (1.0 - prev > 1e-15) ? (qs[i] - prev) / (1.0 - prev) : 0.5;
        t[i] = logit(u);
        prev = qs[i];
    }
    for (int i = 0; i <= k; ++i) t[k + 1 + i] = std::log(std::max(ws[i], 1e-300));
    return t;
}

// Plain Nelder-Mead on R^dim; deterministic given the starting simplex.
std::pair<std::vector<double>, double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
    double step, double ftol, int max_iter) {
    const int dim = static_cast<int>(x0.size());
    std::vector<std::vector<double>> simplex(dim + 1, x0);
    std::vector<double> fv(dim + 1);
    for (int i = 0; i < dim; ++i) simplex[i + 1][i] += step;
    for (int i = 0; i <= dim; ++i) fv[i] = f(simplex[i]);

    auto order = [&]() {
        std::vector<int> idx(dim + 1);
        for (int i = 0; i <= dim; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (int i : idx) {
            s2.push_back(simplex[i]);
            f2.push_back(fv[i]);
        }
        simplex = std::move(s2);
        fv = std::move(f2);
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        order();
        if (fv[dim] - fv[0] < ftol) break;
        std::vector<double> centroid(dim, 0.0);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) centroid[j] += simplex[i][j] / dim;
        auto blend = [&](double c) {
            std::vector<double> x(dim);
            for (int j = 0; j < dim; ++j) x[j] = centroid[j] + c * (centroid[j] - simplex[dim][j]);
            return x;
        };
        std::vector<double> xr = blend(1.0);
        double fr = f(xr);
        if (fr < fv[0]) {
            std::vector<double> xe = blend(2.0);
            double fe = f(xe);
            if (fe < fr) {
                simplex[dim] = xe;
                fv[dim] = fe;
            } else {
                simplex[dim] = xr;
                fv[dim] = fr;
            }
        } else if (fr < fv[dim - 1]) {
            simplex[dim] = xr;
            fv[dim] = fr;
        } else {
            std::vector<double> xc = blend(fr < fv[dim] ? 0.5 : -0.5);
            double fc = f(xc);
            if (fc < std::min(fr, fv[dim])) {
                simplex[dim] = xc;
                fv[dim] = fc;
            } else {
                for (int i = 1; i <= dim; ++i) {
                    for (int j = 0; j < dim; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    order();
    return {simplex[0], fv[0]};
}

struct KrsbProblem {
    const MixtureSpec& mixture;
    double h;
    int k;
    const GridParams& grid;

    double operator()(const std::vector<double>& t) const {
        return parisi_functional(decode(t, k), mixture, h, grid);
    }
};

// The first-order condition for a single atom: E tanh^2(z sqrt(xi'(q)) + h) = q.
std::vector<double> dirac_stationary_points(const MixtureSpec& mixture, double h) {
    const GaussHermite& quad = gauss_hermite(80);
    auto gap = [&](double q) {
        double sigma = std::sqrt(std::max(mixture.d1(q), 0.0));
        return quad.expect([&](double z) {
                   double v = std::tanh(sigma * z + h);
                   return v * v;
               }) -
               q;
    };
    std::vector<double> roots{0.0};
    const int scan_n = 800;
    double prev = gap(1e-9);
    for (int i = 1; i <= scan_n; ++i) {
        double q = static_cast<double>(i) / scan_n;
        double cur = gap(q);
        if ((prev > 0.0) != (cur > 0.0)) {
            bool lo_positive = prev > 0.0;
            double lo = static_cast<double>(i - 1) / scan_n, hi = q;
            for (int it = 0; it < 100; ++it) {
                double mid = 0.5 * (lo + hi);
                if ((gap(mid) > 0.0) == lo_positive) lo = mid;
                else hi = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return roots;
}

std::pair<AtomicMeasure, double> minimize_krsb_impl(const MixtureSpec& mixture, double h, int k,
                                                    int restarts, std::uint64_t seed,
                                                    const GridParams& grid,
                                                    const AtomicMeasure* warm) {
    if (k < 0) throw domain_error("minimize_krsb: k >= 0 required");
    const int dim = 2 * (k + 1);

    // Restarts search on a coarser grid; the winner is re-polished on the
    // requested grid so the returned value carries full accuracy.
    GridParams coarse = grid;
    coarse.dx = grid.dx * 2.0;
    coarse.quad_order = std::max(40, grid.quad_order / 2);
    KrsbProblem search{mixture, h, k, coarse};
    KrsbProblem fine{mixture, h, k, grid};

    std::vector<double> best_t;
    double best_f = 1e300;
    auto consider = [&](std::vector<double> t0, double step) {
        auto [t, f] = nelder_mead(search, std::move(t0), step, 1e-11, 300 * dim);
        if (f < best_f) {
            best_f = f;
            best_t = std::move(t);
        }
    };

    if (warm) consider(encode(*warm, k), 0.15);
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        std::vector<double> t0(dim);
        if (r == 0) {
            std::fill(t0.begin(), t0.end(), 0.0);
        } else {
            Rng rng(seed, static_cast<std::uint64_t>(k) + 1, static_cast<std::uint64_t>(r));
            for (double& v : t0) v = 2.0 * rng.gaussian();
        }
        consider(std::move(t0), 0.7);
    }

    // Tight polish of the winner on the requested grid.
    {
        auto [t, f] = nelder_mead(fine, best_t, 2e-3, 1e-15, 250 * dim);
        best_f = f;
        best_t = std::move(t);
    }

    AtomicMeasure best_m = decode(best_t, k);

    // Single-atom landscapes admit a closed stationarity equation; snap to its
    // roots when one of them does at least as well.
    if (k == 0) {
        for (double q : dirac_stationary_points(mixture, h)) {
            AtomicMeasure cand = AtomicMeasure::dirac(q);
            double f = parisi_functional(cand, mixture, h, grid);
            if (f <= best_f + 1e-12) {
                best_f = std::min(best_f, f);
                best_m = cand;
            }
        }
    }
    return {best_m, best_f};
}

}  // namespace

std::pair<AtomicMeasure, double> minimize_krsb(const MixtureSpec& mixture, double h, int k,
                                               int restarts, std::uint64_t seed,
                                               const GridParams& grid) {
    return minimize_krsb_impl(mixture, h, k, restarts, seed, grid, nullptr);
}

ParisiEstimate find_parisi_measure(const MixtureSpec& mixture, double h, int k_max,
                                   double improve_tol, std::uint64_t seed, const GridParams& grid,
                                   const EscalationParams& params) {
    if (k_max < 0) throw domain_error("find_parisi_measure: k_max >= 0 required");
    if (mixture.is_zero()) throw domain_error("find_parisi_measure: zero mixture is vacuous");

    auto eta_of = [](const AtomicMeasure& m) {
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m.weights()[i] > 1e-6) return m.atoms()[i];
        return m.atoms().front();
    };

    auto [cur_m, cur_v] = minimize_krsb(mixture, h, 0, params.restarts, seed, grid);
    std::vector<double> history{cur_v};

    auto finish = [&](const AtomicMeasure& m, double v, int k_used, CriterionReport rep,
                      bool conclusive) {
        ParisiEstimate est{m, v, k_used, std::move(rep), eta_of(m), history, conclusive};
        return est;
    };

    for (int k = 0; k < k_max; ++k) {
        auto [next_m, next_v] =
            minimize_krsb_impl(mixture, h, k + 1, params.restarts, seed, grid, &cur_m);
        history.push_back(next_v);
        if (cur_v - next_v < improve_tol) {
            CriterionReport rep =
                check_parisi_criterion(cur_m, mixture, h, params.q_grid_n, grid, params.flow);
            if (rep.pass) return finish(cur_m, cur_v, k, std::move(rep), true);
        }
        if (next_v < cur_v) {
            cur_m = next_m;
            cur_v = next_v;
        }
    }

    CriterionReport rep =
        check_parisi_criterion(cur_m, mixture, h, params.q_grid_n, grid, params.flow);
    return finish(cur_m, cur_v, k_max, std::move(rep), false);
}

}  // namespace parisi
