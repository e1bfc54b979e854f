#pragma once

#include <cstdint>
#include <vector>

#include "parisi/parisi_pde.hpp"

namespace parisi {

inline constexpr double kCriterionTol = 1e-5;
inline constexpr double kMassLeakTol = 1e-6;

enum class CurveMethod { deterministic, monte_carlo };

struct FlowParams {
    int r_samples = 257;       // resolution of the deterministic r-grid
    int n_paths = 100000;      // Monte Carlo paths
    int n_steps = 512;         // Euler-Maruyama steps
    std::uint64_t seed = 1;
};

// The optimal-control second moments r -> E u(r)^2 and E (d_xx Phi(r,X_r))^2
// along X_r = h + int alpha zeta u dw + int zeta^{1/2} dB, u = d_x Phi(r,X_r).
struct MomentCurve {
    std::vector<double> r;
    std::vector<double> eu2;
    std::vector<double> euxx2;
    std::vector<double> std_err;  // per-point std error of eu2; empty if deterministic
    bool monte_carlo = false;

    double eu2_at(double rq) const;
    double euxx2_at(double rq) const;
};

// Deterministic mode transports the density of X_r exactly across each
// constant-alpha segment (Gaussian kernel tilted by e^{m Phi}); Monte Carlo
// mode is the independent Euler-Maruyama oracle with per-path seeding.
MomentCurve second_moment_curve(const PhiSolution& phi, CurveMethod method,
                                const FlowParams& params);

// d/dtheta P((1-theta) mu0 + theta mu) at theta=0+:
//   (1/2) int_0^1 zeta(r) (alpha_mu - alpha_mu0)(E u_mu0(r)^2 - r) dr,
// integrated exactly against the piecewise-linear interpolant of the curve.
double directional_derivative(const AtomicMeasure& mu0, const AtomicMeasure& mu,
                              const MixtureSpec& mixture, double h, const MomentCurve& curve);

struct CriterionReport {
    std::vector<double> q_grid;
    std::vector<double> derivative_values;
    double min_value = 0.0;
    bool pass = false;
    double worst_q = 0.0;
};

// Optimality criterion over Dirac probes delta_q, q on a uniform grid.
CriterionReport check_parisi_criterion(const AtomicMeasure& mu0, const MixtureSpec& mixture,
                                       double h, int q_grid_n, const GridParams& grid,
                                       const FlowParams& flow);

struct SupportReport {
    double eq_gap = 0.0;      // E u(q)^2 - q, should vanish on the support
    double ineq_slack = 0.0;  // 1 - zeta(q) E (d_xx Phi)^2, should be >= 0
};
SupportReport check_support_conditions(const AtomicMeasure& mu, const MixtureSpec& mixture,
                                       double h, double q, const MomentCurve& curve);

struct ATLineReport {
    double q_root = 0.0;
    double lhs_ineq = 0.0;  // zeta(q_root) E cosh^{-4}(z sqrt(xi'(q_root)) + h)
    bool rs_consistent = false;
    std::vector<double> all_roots;  // every bracketed root of the fixed-point equation
};

// Root of E tanh^2(z sqrt(xi'(q)) + h) = q (largest when several), then the
// Almeida-Thouless stability check at that root.
ATLineReport at_line_check(const MixtureSpec& mixture, double h, int quad_order = 80);

}  // namespace parisi
