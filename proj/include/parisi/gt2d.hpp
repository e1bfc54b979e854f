#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "parisi/optimizer.hpp"

namespace parisi {

inline constexpr double kCertMargin = 1e-4;

// Covariance path T(s) of the coupled two-system interpolation:
//   [[zeta(s), iota zeta0(s)], [iota zeta0(s), zeta(s)]]  for s < |q|,
//   diag(zeta(s), zeta(s))                                 for s >= |q|,
// with zeta = xi'', zeta0(s) = xi0''(iota s). Positive semi-definiteness
// is probed on a grid at construction.
struct TMatrixPath {
    CouplingSpec coupling;
    double K = 0.0;  // uniform operator-norm bound

    double zeta(double s) const { return coupling.xi.d2(s); }
    double zeta0(double s) const { return coupling.xi0.d2(coupling.iota() * s); }
    bool coupled_at(double s) const { return s < std::abs(coupling.q); }
    // Entries [t11, t12] at s (t22 = t11 by symmetry).
    std::pair<double, double> at(double s) const {
        double off = coupled_at(s) ? coupling.iota() * zeta0(s) : 0.0;
        return {zeta(s), off};
    }
};

TMatrixPath build_T(const CouplingSpec& coupling, int grid_n = 2001);

struct PsiGrid {
    double half_width = 0.0;  // both rotated axes u = x1+x2, v = x1-x2
    double dx = 0.0;
    int quad_order = 40;

    static PsiGrid defaults(const CouplingSpec& coupling, double rel_dx = 0.02);
};

struct PsiSlice {
    double s = 0.0;
    double m = 0.0;
    std::vector<double> psi, pu, pv;  // index iu + nu*iv in rotated coordinates
};

// Solution of the two-dimensional backward equation
//   d_s Psi = -(1/2)(<T, D^2 Psi> + alpha <T grad Psi, grad Psi>)
// with terminal log(cosh x1 cosh x2 cosh l + sinh x1 sinh x2 sinh l),
// solved in rotated coordinates (u,v) = (x1+x2, x1-x2) where each segment's
// Gaussian increment is diagonal, so the Hopf-Cole step factorizes into two
// one-dimensional quadrature passes.
class PsiSolution {
  public:
    CouplingSpec coupling;
    AtomicMeasure measure;
    double lambda = 0.0;
    PsiGrid params;
    UniformGrid grid;               // shared by both rotated axes
    std::vector<double> nodes;      // atoms with {0, |q|, 1}
    std::vector<PsiSlice> slices;   // one per node

    PsiSolution(CouplingSpec cp, AtomicMeasure mu, double lambda_, PsiGrid p);

    int node_index(double s) const;             // exact node lookup
    double psi(int node, double x1, double x2) const;
    double dx1(int node, double x1, double x2) const;
    double dx2(int node, double x1, double x2) const;
    double value_at_h() const;                  // Psi(lambda, 0, h, h)

    // Exact within-segment reconstruction at interior r.
    PsiSlice interior_slice(double r) const;
};

PsiSolution solve_psi(const AtomicMeasure& measure, const CouplingSpec& coupling, double lambda,
                      const PsiGrid& grid);

// Lambda_mu(lambda, q): the coupled-free-energy upper bound
//   2 log 2 + Psi(lambda,0,h,h) - lambda q
//   - int_0^1 alpha s xi'' ds - int_0^{|q|} alpha s xi0''(iota s) ds,
// both integrals in closed form.
double gt_bound(const AtomicMeasure& measure, const CouplingSpec& coupling, double lambda,
                const PsiGrid& grid);

// Golden-section minimization of lambda -> Lambda_mu(lambda, q) after a
// three-point convexity probe; falls back to a grid scan when the probe
// fails. Returns (lambda_star, value).
std::pair<double, double> optimize_lambda(const AtomicMeasure& measure,
                                          const CouplingSpec& coupling, const PsiGrid& grid,
                                          std::pair<double, double> lambda_range);

struct FixedPointReport {
    double q_star = 0.0;
    std::vector<std::pair<double, double>> f_values;  // (q, f(q)) samples
};

// f(q) = E d_x Phi(eta, h+z1) d_x Phi(eta, h+z2), Cov(z1,z2) = xi0'(q),
// Var(z_i) = xi'(eta).
double coupled_overlap_map(const CouplingSpec& coupling, const PhiSolution& muP_phi, double eta,
                           double q, int quad_order = 40);

// f(q) = E d_x Phi(eta, h+z1) d_x Phi(eta, h+z2) with Cov(z1,z2) = xi0'(q),
// Var = xi'(eta); unique fixed point located by bisection on [-eta, eta].
FixedPointReport coupled_fixed_point(const CouplingSpec& coupling, const PhiSolution& muP_phi,
                                     double eta, int quad_order = 40);

struct ModifiedMeasure {
    std::function<double(double)> cdf;
    AtomicMeasure atoms;
};

// CDF s -> alpha_muP(s) zeta(s)/(zeta(s)+zeta0(s)) on [0,|q|), alpha_muP on
// [|q|,1]; atoms preserved exactly, smooth pieces quantile-sliced to total
// discretization distance <= eps.
ModifiedMeasure modified_measure(const AtomicMeasure& muP, const CouplingSpec& coupling,
                                 double eps = 1.0 / 48.0);

enum class ScanMode { positivity, nonnegativity, chaos };

std::string to_string(ScanMode mode);

struct BoundPoint {
    double q = 0.0;
    double lambda_star = 0.0;
    double Lambda = 0.0;
    bool psd_ok = false;
};

struct Hypotheses {
    bool convexity = false;
    bool ratio = false;
    bool dominance = false;
};

struct BoundCurve {
    ScanMode mode = ScanMode::positivity;
    std::vector<BoundPoint> points;
    double two_P = 0.0;
    double q_star = 0.0;
    double eta = 0.0;
    double margin = 0.0;     // min over the region of two_P - Lambda(q)
    std::string verdict;     // mode name or "inconclusive"
    Hypotheses hypotheses;
};

struct ScanParams {
    int q_grid_n = 101;
    double eps_exclusion = 0.1;
    int threads = 1;
    double modified_eps = 1.0 / 48.0;
    std::pair<double, double> lambda_range{-3.0, 3.0};
};

// Certificate scan: Lambda(q) = min(lambda-optimized bound with mu_P,
// modified-measure bound at lambda = 0) over the mode's q-region; the verdict
// is granted only when every grid point clears two_P by more than
// kCertMargin with a PSD path.
BoundCurve scan_bound(const CouplingSpec& base, const ParisiEstimate& muP, ScanMode mode,
                      const GridParams& grid1d, const PsiGrid& grid, const ScanParams& params);

// Scaled residual of the backward equation at an interior probe, via finite
// differences of the recursion in s and of the stored gradients in (u,v).
double pde_residual(const PsiSolution& psi, double s, double u, double v);

}  // namespace parisi
