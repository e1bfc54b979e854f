#include "parisi/parisi_pde.hpp"

#include <algorithm>
#include <cmath>

#include "parisi/errors.hpp"
#include "parisi/quadrature.hpp"

namespace parisi {

namespace {

PhiSlice terminal_slice(const UniformGrid& g) {
    PhiSlice t;
    t.s = 1.0;
    t.m = 1.0;
    t.phi.resize(g.size());
    t.dphi.resize(g.size());
    t.ddphi.resize(g.size());
    for (int i = 0; i < g.size(); ++i) {
        double x = g.x(i);
        double th = std::tanh(x);
        t.phi[i] = log_cosh(x);
        t.dphi[i] = th;
        t.ddphi[i] = 1.0 - th * th;
    }
    return t;
}

// One Hopf-Cole step across Gaussian variance sigma2 at exponent m, with the
// first two x-derivatives carried as tilted quadrature functionals.
PhiSlice hopf_cole_step(const PhiSlice& next, double m, double sigma2, double s_new,
                        const UniformGrid& g, const GaussHermite& quad) {
    PhiSlice out;
    out.s = s_new;
    out.m = m;
    const int n = g.size();
    out.phi.resize(n);
    out.dphi.resize(n);
    out.ddphi.resize(n);
    if (sigma2 <= 1e-15) {
        out.phi = next.phi;
        out.dphi = next.dphi;
        out.ddphi = next.ddphi;
        return out;
    }
    const double sigma = std::sqrt(sigma2);
    const int nq = static_cast<int>(quad.z.size());
    std::vector<double> A(nq), D(nq), S(nq);
    for (int i = 0; i < n; ++i) {
        const double x = g.x(i);
        for (int k = 0; k < nq; ++k) {
            double y = x + sigma * quad.z[k];
            A[k] = grid_read(next.phi, g, y, EdgeMode::linear);
            D[k] = grid_read(next.dphi, g, y, EdgeMode::clamp);
            S[k] = grid_read(next.ddphi, g, y, EdgeMode::clamp);
        }
        if (m > kMFloor) {
            double mx = -1e300;
            for (int k = 0; k < nq; ++k) mx = std::max(mx, m * A[k]);
            double Z = 0.0, num1 = 0.0, num2 = 0.0;
            for (int k = 0; k < nq; ++k) {
                double t = quad.w[k] * std::exp(m * A[k] - mx);
                Z += t;
                num1 += t * D[k];
                num2 += t * (S[k] + m * D[k] * D[k]);
            }
            double u = num1 / Z;
            out.phi[i] = (mx + std::log(Z)) / m;
            out.dphi[i] = u;
            out.ddphi[i] = num2 / Z - m * u * u;
        } else {
            double a = 0.0, d = 0.0, sdd = 0.0;
            for (int k = 0; k < nq; ++k) {
                a += quad.w[k] * A[k];
                d += quad.w[k] * D[k];
                sdd += quad.w[k] * S[k];
            }
            out.phi[i] = a;
            out.dphi[i] = d;
            out.ddphi[i] = sdd;
        }
    }
    return out;
}

void check_grid(const GridParams& p, const MixtureSpec& mixture, double h) {
    if (!(p.half_width > 0.0) || !(p.dx > 0.0))
        throw domain_error("solve_phi: grid half_width and dx must be positive");
    double sigma = std::sqrt(std::max(mixture.d1(1.0), 0.0));
    if (gaussian_escape_mass(p.half_width - std::abs(h), sigma) > kEscapeMassTol)
        throw grid_overflow_error("solve_phi: grid half-width too small for xi'(1)=" +
                                  std::to_string(mixture.d1(1.0)));
}

}  // namespace

std::vector<double> measure_nodes(const AtomicMeasure& measure, const std::vector<double>& extra) {
    std::vector<double> nodes = measure.atoms();
    nodes.push_back(0.0);
    nodes.push_back(1.0);
    for (double e : extra) nodes.push_back(e);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [](double a, double b) { return b - a < 1e-14; }),
                nodes.end());
    return nodes;
}

PhiSolution::PhiSolution(MixtureSpec mix, AtomicMeasure mu, double h_, GridParams p)
    : mixture(std::move(mix)), measure(std::move(mu)), h(h_), params(p),
      grid(p.half_width, p.dx) {}

int PhiSolution::segment_of(double r) const {
    if (!(r >= 0.0 && r <= 1.0)) throw domain_error("segment_of: r in [0,1] required");
    auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    int j = static_cast<int>(it - nodes.begin()) - 1;
    return std::clamp(j, 0, static_cast<int>(nodes.size()) - 2);
}

PhiSlice PhiSolution::slice_at(double r) const {
    for (std::size_t j = 0; j < nodes.size(); ++j)
        if (std::abs(r - nodes[j]) < 1e-14) return slices[j];
    int j = segment_of(r);
    double sigma2 = mixture.d1(nodes[j + 1]) - mixture.d1(r);
    PhiSlice s = hopf_cole_step(slices[j + 1], slices[j].m, sigma2, r, grid,
                                gauss_hermite(params.quad_order));
    return s;
}

double PhiSolution::value_at0(double x) const {
    return grid_read(slices.front().phi, grid, x, EdgeMode::linear);
}

double PhiSolution::dvalue_at0(double x) const {
    return grid_read(slices.front().dphi, grid, x, EdgeMode::clamp);
}

PhiSolution solve_phi(const AtomicMeasure& measure, const MixtureSpec& mixture, double h,
                      const GridParams& grid) {
    check_grid(grid, mixture, h);
    PhiSolution sol(mixture, measure, h, grid);
    sol.nodes = measure_nodes(measure);
    const int M = static_cast<int>(sol.nodes.size());
    sol.slices.resize(M);
    sol.slices[M - 1] = terminal_slice(sol.grid);
    const GaussHermite& quad = gauss_hermite(grid.quad_order);
    for (int j = M - 2; j >= 0; --j) {
        double m = measure.cdf_unchecked(sol.nodes[j]);
        double sigma2 = mixture.d1(sol.nodes[j + 1]) - mixture.d1(sol.nodes[j]);
        sol.slices[j] = hopf_cole_step(sol.slices[j + 1], m, sigma2, sol.nodes[j], sol.grid, quad);
    }
    return sol;
}

PhiSolution solve_phi_fd(const AtomicMeasure& measure, const MixtureSpec& mixture, double h,
                         const GridParams& grid, double dt) {
    check_grid(grid, mixture, h);
    const double zeta_max = mixture.d2(1.0);
    const double safety = 2.0;
    if (!(dt > 0.0) || dt > grid.dx * grid.dx / (2.0 * zeta_max * safety))
        throw rejected_config_error("solve_phi_fd: dt violates stability bound dx^2/(2 zeta " +
                                    std::string("safety)"));

    PhiSolution sol(mixture, measure, h, grid);
    sol.nodes = measure_nodes(measure);
    const int M = static_cast<int>(sol.nodes.size());
    const UniformGrid& g = sol.grid;
    const int n = g.size();
    const double dx = g.dx();
    sol.slices.resize(M);
    sol.slices[M - 1] = terminal_slice(g);

    std::vector<double> phi = sol.slices[M - 1].phi, work(n);
    for (int j = M - 2; j >= 0; --j) {
        const double a = sol.nodes[j], b = sol.nodes[j + 1];
        const double m = measure.cdf_unchecked(a);
        const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / dt)));
        const double ds = (b - a) / steps;
        double s = b;
        for (int step = 0; step < steps; ++step) {
            const double zeta = mixture.d2(s - 0.5 * ds);
            for (int i = 0; i < n; ++i) {
                double fm = (i > 0) ? phi[i - 1] : 2.0 * phi[0] - phi[1];
                double fp = (i < n - 1) ? phi[i + 1] : 2.0 * phi[n - 1] - phi[n - 2];
                double d2 = (fp - 2.0 * phi[i] + fm) / (dx * dx);
                double d1 = (fp - fm) / (2.0 * dx);
                work[i] = phi[i] + ds * 0.5 * zeta * (d2 + m * d1 * d1);
            }
            phi.swap(work);
            s -= ds;
        }
        PhiSlice& sl = sol.slices[j];
        sl.s = a;
        sl.m = m;
        sl.phi = phi;
        sl.dphi.resize(n);
        sl.ddphi.resize(n);
        for (int i = 0; i < n; ++i) {
            double fm = (i > 0) ? phi[i - 1] : 2.0 * phi[0] - phi[1];
            double fp = (i < n - 1) ? phi[i + 1] : 2.0 * phi[n - 1] - phi[n - 2];
            sl.dphi[i] = (fp - fm) / (2.0 * dx);
            sl.ddphi[i] = (fp - 2.0 * phi[i] + fm) / (dx * dx);
        }
    }
    return sol;
}

double rs_closed_form(double q, const MixtureSpec& mixture, double /*h*/, double s, double x,
                      int quad_order) {
    if (!(q >= 0.0 && q <= 1.0)) throw domain_error("rs_closed_form: q in [0,1] required");
    if (!(s >= 0.0 && s <= 1.0)) throw domain_error("rs_closed_form: s in [0,1] required");
    if (s >= q) return 0.5 * (mixture.d1(1.0) - mixture.d1(s)) + log_cosh(x);
    const double sigma = std::sqrt(std::max(mixture.d1(q) - mixture.d1(s), 0.0));
    const GaussHermite& quad = gauss_hermite(quad_order);
    double e = quad.expect([&](double z) { return log_cosh(x + sigma * z); });
    return 0.5 * (mixture.d1(1.0) - mixture.d1(q)) + e;
}

double parisi_functional(const PhiSolution& phi) {
    double correction = 0.0;
    for (std::size_t j = 0; j + 1 < phi.nodes.size(); ++j)
        correction += phi.slices[j].m *
                      (phi.mixture.theta(phi.nodes[j + 1]) - phi.mixture.theta(phi.nodes[j]));
    return 0.6931471805599453094 + phi.value_at0(phi.h) - 0.5 * correction;
}

double parisi_functional(const AtomicMeasure& measure, const MixtureSpec& mixture, double h,
                         const GridParams& grid) {
    return parisi_functional(solve_phi(measure, mixture, h, grid));
}

}  // namespace parisi
