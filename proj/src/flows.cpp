#include "parisi/flows.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "parisi/errors.hpp"
#include "parisi/quadrature.hpp"
#include "parisi/rng.hpp"

namespace parisi {

namespace {

double interp_curve(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return (1.0 - t) * ys[i - 1] + t * ys[i];
}

std::vector<double> dense_r_grid(const PhiSolution& phi, int r_samples) {
    std::vector<double> r;
    r.reserve(r_samples + phi.nodes.size());
    for (int i = 0; i < r_samples; ++i) r.push_back(static_cast<double>(i) / (r_samples - 1));
    for (double s : phi.nodes) r.push_back(s);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end(), [](double a, double b) { return b - a < 1e-14; }),
            r.end());
    return r;
}

struct CurvePoint {
    double eu2, euxx2;
};

// Forward density transport for X_r. Within a constant-alpha segment the
// generator is the Doob transform of Brownian motion by e^{m Phi}, so the
// density advances by one tilted Gaussian convolution:
//   p(r,y) = e^{m Phi(r,y)} E_z[ p(a, y + sigma z) e^{-m Phi(a, y + sigma z)} ].
// X_r starts as the point mass at h and is kept in closed form (moments by
// direct z-quadrature over the tilted Gaussian) until its accumulated spread
// is resolvable on the grid; only then is the density materialized. Nodes
// crossed while unresolved contribute O(sigma^2) tilt corrections that are
// absorbed into the normalization. The materialized density lives on a grid
// padded by the drift budget int alpha zeta <= xi'(1).
class DensityTracker {
  public:
    explicit DensityTracker(const PhiSolution& phi)
        : phi_(phi), quad_(gauss_hermite(phi.params.quad_order)),
          gp_(phi.params.half_width + std::max(phi.mixture.d1(1.0), 0.0), phi.params.dx),
          resolve_var_(16.0 * phi.params.dx * phi.params.dx) {}

    CurvePoint moments(double r, const PhiSlice& target) {
        advance_past_nodes(r);
        if (delta_) return delta_moments(r, target);
        return grid_moments(r, target);
    }

  private:
    double read_phi(const PhiSlice& sl, double y) const {
        return grid_read(sl.phi, phi_.grid, y, EdgeMode::linear);
    }
    double read_u(const PhiSlice& sl, double y) const {
        return grid_read(sl.dphi, phi_.grid, y, EdgeMode::clamp);
    }
    double read_uxx(const PhiSlice& sl, double y) const {
        return grid_read(sl.ddphi, phi_.grid, y, EdgeMode::clamp);
    }

    void advance_past_nodes(double r) {
        const auto& nodes = phi_.nodes;
        while (seg_ + 2 < static_cast<int>(nodes.size()) && r >= nodes[seg_ + 1] - 1e-14) {
            if (delta_) {
                if (phi_.mixture.d1(nodes[seg_ + 1]) >= resolve_var_) {
                    materialize(nodes[seg_ + 1], phi_.slices[seg_ + 1]);
                    delta_ = false;
                }
                // Otherwise stay a point mass: the crossed segment's spread is
                // below grid resolution and its tilt is constant to O(sigma^2).
            } else {
                p_start_ = propagate(nodes[seg_ + 1], phi_.slices[seg_ + 1]);
            }
            ++seg_;
        }
    }

    // Exact moments while X_r is the tilted Gaussian around h:
    // weights prop to w_k exp(m Phi(r, h + sigma z_k)).
    CurvePoint delta_moments(double r, const PhiSlice& target) const {
        const double var = std::max(phi_.mixture.d1(r), 0.0);
        const double m = phi_.slices[seg_].m;
        if (var <= 1e-30) {
            double u = read_u(target, phi_.h);
            double uxx = read_uxx(target, phi_.h);
            return {u * u, uxx * uxx};
        }
        const double sigma = std::sqrt(var);
        const int nq = static_cast<int>(quad_.z.size());
        double mx = -1e300;
        std::vector<double> logt(nq), us(nq), uxxs(nq);
        for (int k = 0; k < nq; ++k) {
            double y = phi_.h + sigma * quad_.z[k];
            logt[k] = (m > kMFloor) ? m * read_phi(target, y) : 0.0;
            us[k] = read_u(target, y);
            uxxs[k] = read_uxx(target, y);
            mx = std::max(mx, logt[k]);
        }
        double Z = 0.0, m2 = 0.0, mxx = 0.0;
        for (int k = 0; k < nq; ++k) {
            double t = quad_.w[k] * std::exp(logt[k] - mx);
            Z += t;
            m2 += t * us[k] * us[k];
            mxx += t * uxxs[k] * uxxs[k];
        }
        return {m2 / Z, mxx / Z};
    }

    // First (and only) conversion of the closed-form state to a gridded
    // density; normalized after a coarse mass sanity gate.
    void materialize(double r, const PhiSlice& target) {
        const double var = phi_.mixture.d1(r);
        const double sigma = std::sqrt(var);
        const double m = phi_.slices[seg_].m;
        const double phi_a_h = read_phi(phi_.slices[seg_], phi_.h);
        const int n = gp_.size();
        p_start_.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double y = gp_.x(i);
            double gauss = std::exp(-0.5 * (y - phi_.h) * (y - phi_.h) / var) /
                           (sigma * 2.5066282746310005024);
            double tilt = (m > kMFloor) ? std::exp(m * (read_phi(target, y) - phi_a_h)) : 1.0;
            p_start_[i] = gauss * tilt;
        }
        double mass = 0.0;
        for (double v : p_start_) mass += v;
        mass *= gp_.dx();
        if (std::abs(mass - 1.0) > 1e-3)
            throw grid_overflow_error("second_moment_curve: density mass leakage " +
                                      std::to_string(std::abs(mass - 1.0)) + " at materialization");
        for (double& v : p_start_) v /= mass;
    }

    std::vector<double> propagate(double r, const PhiSlice& target) const {
        const int n = gp_.size();
        const double m = phi_.slices[seg_].m;
        const double sigma2 = phi_.mixture.d1(r) - phi_.mixture.d1(phi_.nodes[seg_]);
        if (sigma2 <= 1e-15) return p_start_;
        std::vector<double> gdens(n);
        for (int i = 0; i < n; ++i)
            gdens[i] = (m > kMFloor)
                           ? p_start_[i] * std::exp(-m * read_phi(phi_.slices[seg_], gp_.x(i)))
                           : p_start_[i];
        std::vector<double> p(n);
        const double sigma = std::sqrt(sigma2);
        const int nq = static_cast<int>(quad_.z.size());
        for (int i = 0; i < n; ++i) {
            double y = gp_.x(i);
            double acc = 0.0;
            for (int k = 0; k < nq; ++k)
                acc += quad_.w[k] * grid_read(gdens, gp_, y + sigma * quad_.z[k], EdgeMode::zero);
            p[i] = (m > kMFloor && acc > 0.0) ? acc * std::exp(m * read_phi(target, y)) : acc;
        }
        return p;
    }

    CurvePoint grid_moments(double r, const PhiSlice& target) const {
        std::vector<double> p = propagate(r, target);
        double mass = 0.0, m2 = 0.0, mxx = 0.0;
        for (int i = 0; i < gp_.size(); ++i) {
            double w = p[i];
            double u = read_u(target, gp_.x(i));
            double uxx = read_uxx(target, gp_.x(i));
            mass += w;
            m2 += w * u * u;
            mxx += w * uxx * uxx;
        }
        mass *= gp_.dx();
        if (std::abs(mass - 1.0) > kMassLeakTol)
            throw grid_overflow_error("second_moment_curve: density mass leakage " +
                                      std::to_string(std::abs(mass - 1.0)));
        return {m2 * gp_.dx() / mass, mxx * gp_.dx() / mass};
    }

    const PhiSolution& phi_;
    const GaussHermite& quad_;
    UniformGrid gp_;
    double resolve_var_;
    int seg_ = 0;
    bool delta_ = true;
    std::vector<double> p_start_;
};

MomentCurve deterministic_curve(const PhiSolution& phi, const FlowParams& params) {
    MomentCurve curve;
    curve.r = dense_r_grid(phi, params.r_samples);
    curve.eu2.resize(curve.r.size());
    curve.euxx2.resize(curve.r.size());

    DensityTracker tracker(phi);
    for (std::size_t ir = 0; ir < curve.r.size(); ++ir) {
        const PhiSlice sl = phi.slice_at(curve.r[ir]);
        CurvePoint pt = tracker.moments(curve.r[ir], sl);
        curve.eu2[ir] = pt.eu2;
        curve.euxx2[ir] = pt.euxx2;
    }
    return curve;
}

MomentCurve monte_carlo_curve(const PhiSolution& phi, const FlowParams& params) {
    const UniformGrid& g = phi.grid;
    const MixtureSpec& xi = phi.mixture;

    std::vector<double> t;
    for (int i = 0; i <= params.n_steps; ++i)
        t.push_back(static_cast<double>(i) / params.n_steps);
    for (double s : phi.nodes) t.push_back(s);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end(), [](double a, double b) { return b - a < 1e-14; }),
            t.end());
    const int nt = static_cast<int>(t.size());

    std::vector<PhiSlice> slices(nt);
    std::vector<double> alpha(nt), sig(nt, 0.0);
    for (int k = 0; k < nt; ++k) {
        slices[k] = phi.slice_at(t[k]);
        alpha[k] = phi.slices[phi.segment_of(std::min(t[k], 1.0 - 1e-12))].m;
        if (k > 0) sig[k] = std::sqrt(std::max(xi.d1(t[k]) - xi.d1(t[k - 1]), 0.0));
    }

    std::vector<double> sum_u2(nt, 0.0), sum_u4(nt, 0.0), sum_uxx2(nt, 0.0);
    for (int path = 0; path < params.n_paths; ++path) {
        Rng rng(params.seed, 0x656d5f70617468ULL, static_cast<std::uint64_t>(path));
        double X = phi.h;
        for (int k = 0; k < nt; ++k) {
            if (k > 0) {
                double dt = t[k] - t[k - 1];
                double u_prev = grid_read(slices[k - 1].dphi, g, X, EdgeMode::clamp);
                double zeta_mid = xi.d2(0.5 * (t[k] + t[k - 1]));
                X += alpha[k - 1] * zeta_mid * u_prev * dt + sig[k] * rng.gaussian();
            }
            double u = grid_read(slices[k].dphi, g, X, EdgeMode::clamp);
            double uxx = grid_read(slices[k].ddphi, g, X, EdgeMode::clamp);
            sum_u2[k] += u * u;
            sum_u4[k] += u * u * u * u;
            sum_uxx2[k] += uxx * uxx;
        }
    }

    MomentCurve curve;
    curve.monte_carlo = true;
    curve.r = t;
    curve.eu2.resize(nt);
    curve.euxx2.resize(nt);
    curve.std_err.resize(nt);
    const double np = params.n_paths;
    for (int k = 0; k < nt; ++k) {
        double mean = sum_u2[k] / np;
        double var = std::max(sum_u4[k] / np - mean * mean, 0.0);
        curve.eu2[k] = mean;
        curve.euxx2[k] = sum_uxx2[k] / np;
        curve.std_err[k] = std::sqrt(var / np);
    }
    return curve;
}

}  // namespace

double MomentCurve::eu2_at(double rq) const { return interp_curve(r, eu2, rq); }
double MomentCurve::euxx2_at(double rq) const { return interp_curve(r, euxx2, rq); }

MomentCurve second_moment_curve(const PhiSolution& phi, CurveMethod method,
                                const FlowParams& params) {
    return method == CurveMethod::deterministic ? deterministic_curve(phi, params)
                                                : monte_carlo_curve(phi, params);
}

double directional_derivative(const AtomicMeasure& mu0, const AtomicMeasure& mu,
                              const MixtureSpec& mixture, double /*h*/,
                              const MomentCurve& curve) {
    // E(r) = zeta(r)(eu2(r)-r), piecewise linear on the curve grid; the CDF
    // difference is piecewise constant, so integrate cell by cell exactly.
    std::vector<double> evals(curve.r.size());
    for (std::size_t i = 0; i < curve.r.size(); ++i)
        evals[i] = mixture.d2(curve.r[i]) * (curve.eu2[i] - curve.r[i]);

    std::vector<double> cuts = curve.r;
    for (double q : mu0.atoms()) cuts.push_back(q);
    for (double q : mu.atoms()) cuts.push_back(q);
    cuts.push_back(0.0);
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(
        std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return b - a < 1e-15; }),
        cuts.end());

    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        if (b <= a || a >= 1.0) continue;
        double diff = mu.cdf_unchecked(a) - mu0.cdf_unchecked(a);
        if (diff == 0.0) continue;
        double ea = interp_curve(curve.r, evals, a);
        double eb = interp_curve(curve.r, evals, b);
        acc += diff * 0.5 * (ea + eb) * (b - a);
    }
    return 0.5 * acc;
}

CriterionReport check_parisi_criterion(const AtomicMeasure& mu0, const MixtureSpec& mixture,
                                       double h, int q_grid_n, const GridParams& grid,
                                       const FlowParams& flow) {
    if (mixture.is_zero()) throw domain_error("check_parisi_criterion: zero mixture is vacuous");
    if (q_grid_n < 11) throw domain_error("check_parisi_criterion: q_grid_n >= 11 required");

    PhiSolution phi = solve_phi(mu0, mixture, h, grid);
    MomentCurve curve = second_moment_curve(phi, CurveMethod::deterministic, flow);

    CriterionReport rep;
    rep.q_grid.resize(q_grid_n);
    rep.derivative_values.resize(q_grid_n);
    rep.min_value = 1e300;
    for (int i = 0; i < q_grid_n; ++i) {
        double q = static_cast<double>(i) / (q_grid_n - 1);
        rep.q_grid[i] = q;
        double d = directional_derivative(mu0, AtomicMeasure::dirac(q), mixture, h, curve);
        rep.derivative_values[i] = d;
        if (d < rep.min_value) {
            rep.min_value = d;
            rep.worst_q = q;
        }
    }
    rep.pass = rep.min_value >= -kCriterionTol;
    return rep;
}

SupportReport check_support_conditions(const AtomicMeasure& /*mu*/, const MixtureSpec& mixture,
                                       double /*h*/, double q, const MomentCurve& curve) {
    if (!(q >= 0.0 && q < 1.0))
        throw domain_error(
            "check_support_conditions: q must lie in [0,1); 1 is never in the support");
    SupportReport rep;
    rep.eq_gap = curve.eu2_at(q) - q;
    rep.ineq_slack = 1.0 - mixture.d2(q) * curve.euxx2_at(q);
    return rep;
}

ATLineReport at_line_check(const MixtureSpec& mixture, double h, int quad_order) {
    if (quad_order < 40) throw domain_error("at_line_check: quad_order >= 40 required");
    const GaussHermite& quad = gauss_hermite(quad_order);
    auto gap = [&](double q) {
        double sigma = std::sqrt(std::max(mixture.d1(q), 0.0));
        double e = quad.expect([&](double z) {
            double t = std::tanh(sigma * z + h);
            return t * t;
        });
        return e - q;
    };

    ATLineReport rep;
    const int scan_n = 2000;
    double prev = gap(1e-9);
    for (int i = 1; i <= scan_n; ++i) {
        double q = static_cast<double>(i) / scan_n;
        double cur = gap(q);
        if ((prev > 0.0) != (cur > 0.0)) {
            bool lo_positive = prev > 0.0;
            double lo = static_cast<double>(i - 1) / scan_n, hi = q;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                if ((gap(mid) > 0.0) == lo_positive) lo = mid;
                else hi = mid;
            }
            rep.all_roots.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }

    if (h == 0.0) {
        rep.q_root = 0.0;  // xi'(0)=0 forces tanh^2 = 0; the field-free fixed point
    } else if (!rep.all_roots.empty()) {
        rep.q_root = rep.all_roots.back();
    } else {
        throw root_bracket_error("at_line_check: no sign change found for h != 0");
    }

    double sigma = std::sqrt(std::max(mixture.d1(rep.q_root), 0.0));
    double e4 = quad.expect([&](double z) {
        double c = std::cosh(sigma * z + h);
        return 1.0 / (c * c * c * c);
    });
    rep.lhs_ineq = mixture.d2(rep.q_root) * e4;
    rep.rs_consistent = rep.lhs_ineq <= 1.0 + 1e-9;
    return rep;
}

}  // namespace parisi
