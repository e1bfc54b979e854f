#include "parisi/gt2d.hpp"

#include <algorithm>
#include <cmath>

#include "parisi/errors.hpp"
#include "parisi/parallel.hpp"
#include "parisi/quadrature.hpp"

namespace parisi {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

// Tilted-quadrature step of one row along its contiguous axis.
void row_step(const double* psi, const double* gpar, const double* gort, int n, double x0,
              double dx, double m, double sigma, const GaussHermite& quad, double* out_psi,
              double* out_gpar, double* out_gort) {
    const int nq = static_cast<int>(quad.z.size());
    std::vector<double> A(nq), P(nq), O(nq);
    for (int i = 0; i < n; ++i) {
        const double x = x0 + i * dx;
        for (int k = 0; k < nq; ++k) {
            double y = x + sigma * quad.z[k];
            A[k] = cubic_read(psi, n, x0, dx, y, EdgeMode::linear);
            P[k] = cubic_read(gpar, n, x0, dx, y, EdgeMode::clamp);
            O[k] = cubic_read(gort, n, x0, dx, y, EdgeMode::clamp);
        }
        if (m > kMFloor) {
            double mx = -1e300;
            for (int k = 0; k < nq; ++k) mx = std::max(mx, m * A[k]);
            double Z = 0.0, np = 0.0, no = 0.0;
            for (int k = 0; k < nq; ++k) {
                double t = quad.w[k] * std::exp(m * A[k] - mx);
                Z += t;
                np += t * P[k];
                no += t * O[k];
            }
            out_psi[i] = (mx + std::log(Z)) / m;
            out_gpar[i] = np / Z;
            out_gort[i] = no / Z;
        } else {
            double a = 0.0, p = 0.0, o = 0.0;
            for (int k = 0; k < nq; ++k) {
                a += quad.w[k] * A[k];
                p += quad.w[k] * P[k];
                o += quad.w[k] * O[k];
            }
            out_psi[i] = a;
            out_gpar[i] = p;
            out_gort[i] = o;
        }
    }
}

// Pass along u (contiguous rows).
void pass_u(PsiSlice& sl, int nu, int nv, const UniformGrid& g, double m, double sigma,
            const GaussHermite& quad, int threads) {
    std::vector<double> psi(nu * nv), pu(nu * nv), pv(nu * nv);
    parallel_for(nv, threads, [&](int iv) {
        const int off = iv * nu;
        row_step(sl.psi.data() + off, sl.pu.data() + off, sl.pv.data() + off, nu, g.x0(), g.dx(),
                 m, sigma, quad, psi.data() + off, pu.data() + off, pv.data() + off);
    });
    sl.psi.swap(psi);
    sl.pu.swap(pu);
    sl.pv.swap(pv);
}

// Pass along v (strided columns gathered into scratch buffers).
void pass_v(PsiSlice& sl, int nu, int nv, const UniformGrid& g, double m, double sigma,
            const GaussHermite& quad, int threads) {
    std::vector<double> psi(nu * nv), pu(nu * nv), pv(nu * nv);
    parallel_for(nu, threads, [&](int iu) {
        std::vector<double> cp(nv), cu(nv), cv(nv), op(nv), ou(nv), ov(nv);
        for (int iv = 0; iv < nv; ++iv) {
            cp[iv] = sl.psi[iu + nu * iv];
            cu[iv] = sl.pu[iu + nu * iv];
            cv[iv] = sl.pv[iu + nu * iv];
        }
        row_step(cp.data(), cv.data(), cu.data(), nv, g.x0(), g.dx(), m, sigma, quad, op.data(),
                 ov.data(), ou.data());
        for (int iv = 0; iv < nv; ++iv) {
            psi[iu + nu * iv] = op[iv];
            pu[iu + nu * iv] = ou[iv];
            pv[iu + nu * iv] = ov[iv];
        }
    });
    sl.psi.swap(psi);
    sl.pu.swap(pu);
    sl.pv.swap(pv);
}

PsiSlice terminal_slice_2d(const UniformGrid& g, double lambda) {
    const int n = g.size();
    PsiSlice t;
    t.s = 1.0;
    t.m = 1.0;
    t.psi.resize(n * n);
    t.pu.resize(n * n);
    t.pv.resize(n * n);
    for (int iv = 0; iv < n; ++iv) {
        double v = g.x(iv);
        for (int iu = 0; iu < n; ++iu) {
            double u = g.x(iu);
            // log( (e^{l}cosh u + e^{-l}cosh v)/2 ) via 4-term log-sum-exp.
            double t1 = lambda + u, t2 = lambda - u, t3 = -lambda + v, t4 = -lambda - v;
            double mx = std::max(std::max(t1, t2), std::max(t3, t4));
            double e1 = std::exp(t1 - mx), e2 = std::exp(t2 - mx), e3 = std::exp(t3 - mx),
                   e4 = std::exp(t4 - mx);
            double S = e1 + e2 + e3 + e4;
            t.psi[iu + n * iv] = mx + std::log(0.25 * S);
            t.pu[iu + n * iv] = (e1 - e2) / S;
            t.pv[iu + n * iv] = (e3 - e4) / S;
        }
    }
    return t;
}

struct SegmentIncrement {
    double sigma_u, sigma_v;
};

// Gaussian increment of the rotated coordinates across [a,b]:
//   Var(u) = 2(dd + dc), Var(v) = 2(dd - dc),
// with dd = xi'(b)-xi'(a) and dc the coupled off-diagonal integral.
SegmentIncrement segment_increment(const CouplingSpec& cp, double a, double b) {
    const double Q = std::abs(cp.q);
    const int iota = cp.iota();
    double dd = cp.xi.d1(b) - cp.xi.d1(a);
    double dc = cp.xi0.d1(iota * std::min(b, Q)) - cp.xi0.d1(iota * std::min(a, Q));
    double vu = 2.0 * (dd + dc), vv = 2.0 * (dd - dc);
    if (vu < -1e-10 || vv < -1e-10)
        throw not_psd_error("solve_psi: segment increment not PSD", a);
    return {std::sqrt(std::max(vu, 0.0)), std::sqrt(std::max(vv, 0.0))};
}

std::vector<double> psi_nodes(const AtomicMeasure& measure, const CouplingSpec& cp) {
    return measure_nodes(measure, {std::abs(cp.q)});
}

// Shared backward recursion; keeps every node slice or only the last one.
std::vector<PsiSlice> run_recursion(const AtomicMeasure& measure, const CouplingSpec& cp,
                                    double lambda, const PsiGrid& grid,
                                    const std::vector<double>& nodes, bool keep_all,
                                    int threads = 1) {
    const UniformGrid g(grid.half_width, grid.dx);
    const GaussHermite& quad = gauss_hermite(grid.quad_order);
    const int n = g.size();
    const int M = static_cast<int>(nodes.size());

    std::vector<PsiSlice> out;
    PsiSlice cur = terminal_slice_2d(g, lambda);
    if (keep_all) {
        out.resize(M);
        out[M - 1] = cur;
    }
    for (int j = M - 2; j >= 0; --j) {
        double m = measure.cdf_unchecked(nodes[j]);
        SegmentIncrement inc = segment_increment(cp, nodes[j], nodes[j + 1]);
        if (inc.sigma_u > 1e-9) pass_u(cur, n, n, g, m, inc.sigma_u, quad, threads);
        if (inc.sigma_v > 1e-9) pass_v(cur, n, n, g, m, inc.sigma_v, quad, threads);
        cur.s = nodes[j];
        cur.m = m;
        if (keep_all) out[j] = cur;
    }
    if (!keep_all) out.push_back(std::move(cur));
    return out;
}

double interp2(const std::vector<double>& f, int n, const UniformGrid& g, double u, double v,
               EdgeMode edge) {
    // Cubic along u for the four v-neighbour rows, then cubic across.
    double tv = (v - g.x0()) / g.dx();
    int jv = static_cast<int>(std::floor(tv));
    jv = std::clamp(jv, 1, n - 3);
    double rows[4];
    for (int r = 0; r < 4; ++r) {
        int iv = std::clamp(jv - 1 + r, 0, n - 1);
        rows[r] = cubic_read(f.data() + n * iv, n, g.x0(), g.dx(), u, edge);
    }
    double w = tv - jv;
    const double c0 = -w * (w - 1.0) * (w - 2.0) / 6.0;
    const double c1 = (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0;
    const double c2 = -(w + 1.0) * w * (w - 2.0) / 2.0;
    const double c3 = (w + 1.0) * w * (w - 1.0) / 6.0;
    return c0 * rows[0] + c1 * rows[1] + c2 * rows[2] + c3 * rows[3];
}

double closed_integrals(const AtomicMeasure& measure, const CouplingSpec& cp,
                        const std::vector<double>& nodes) {
    const double Q = std::abs(cp.q);
    const int iota = cp.iota();
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
        double m = measure.cdf_unchecked(nodes[j]);
        acc += m * (cp.xi.theta(nodes[j + 1]) - cp.xi.theta(nodes[j]));
        acc += m * (cp.xi0.theta(iota * std::min(nodes[j + 1], Q)) -
                    cp.xi0.theta(iota * std::min(nodes[j], Q)));
    }
    return acc;
}

}  // namespace

TMatrixPath build_T(const CouplingSpec& coupling, int grid_n) {
    DominanceReport dom = check_dominance(coupling, grid_n);
    if (!dom.weak)
        throw not_psd_error("build_T: xi0'' exceeds xi''(|s|) at s=" +
                                std::to_string(dom.witness.value_or(0.0)),
                            dom.witness.value_or(0.0));
    TMatrixPath path{coupling, 0.0};
    const double Q = std::abs(coupling.q);
    for (int i = 0; i < grid_n; ++i) {
        double s = static_cast<double>(i) / (grid_n - 1);
        double z = path.zeta(s);
        double z0 = path.zeta0(s);
        if (s < Q && z + 1e-12 < std::abs(z0))
            throw not_psd_error("build_T: T(s) not PSD at s=" + std::to_string(s), s);
        path.K = std::max(path.K, z + std::abs(z0));
    }
    return path;
}

PsiGrid PsiGrid::defaults(const CouplingSpec& coupling, double rel_dx) {
    PsiGrid g;
    double var = 2.0 * (std::max(coupling.xi.d1(1.0), 0.0) + std::max(coupling.xi0.d1(1.0), 0.0));
    double sigma = std::sqrt(var);
    g.half_width = 2.0 * std::abs(coupling.h) + 6.0 * sigma;
    g.dx = rel_dx * std::max(sigma, 1.0);
    return g;
}

PsiSolution::PsiSolution(CouplingSpec cp, AtomicMeasure mu, double lambda_, PsiGrid p)
    : coupling(std::move(cp)), measure(std::move(mu)), lambda(lambda_), params(p),
      grid(p.half_width, p.dx) {}

int PsiSolution::node_index(double s) const {
    for (std::size_t j = 0; j < nodes.size(); ++j)
        if (std::abs(nodes[j] - s) < 1e-12) return static_cast<int>(j);
    throw domain_error("PsiSolution: s is not a stored node");
}

double PsiSolution::psi(int node, double x1, double x2) const {
    return interp2(slices[node].psi, grid.size(), grid, x1 + x2, x1 - x2, EdgeMode::linear);
}

double PsiSolution::dx1(int node, double x1, double x2) const {
    double gu = interp2(slices[node].pu, grid.size(), grid, x1 + x2, x1 - x2, EdgeMode::clamp);
    double gv = interp2(slices[node].pv, grid.size(), grid, x1 + x2, x1 - x2, EdgeMode::clamp);
    return gu + gv;
}

double PsiSolution::dx2(int node, double x1, double x2) const {
    double gu = interp2(slices[node].pu, grid.size(), grid, x1 + x2, x1 - x2, EdgeMode::clamp);
    double gv = interp2(slices[node].pv, grid.size(), grid, x1 + x2, x1 - x2, EdgeMode::clamp);
    return gu - gv;
}

double PsiSolution::value_at_h() const { return psi(0, coupling.h, coupling.h); }

PsiSlice PsiSolution::interior_slice(double r) const {
    for (std::size_t j = 0; j < nodes.size(); ++j)
        if (std::abs(nodes[j] - r) < 1e-14) return slices[j];
    auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    int j = std::clamp(static_cast<int>(it - nodes.begin()) - 1, 0,
                       static_cast<int>(nodes.size()) - 2);
    const GaussHermite& quad = gauss_hermite(params.quad_order);
    PsiSlice cur = slices[j + 1];
    SegmentIncrement inc = segment_increment(coupling, r, nodes[j + 1]);
    double m = slices[j].m;
    int n = grid.size();
    if (inc.sigma_u > 1e-9) pass_u(cur, n, n, grid, m, inc.sigma_u, quad, 1);
    if (inc.sigma_v > 1e-9) pass_v(cur, n, n, grid, m, inc.sigma_v, quad, 1);
    cur.s = r;
    cur.m = m;
    return cur;
}

PsiSolution solve_psi(const AtomicMeasure& measure, const CouplingSpec& coupling, double lambda,
                      const PsiGrid& grid) {
    build_T(coupling);  // PSD gate
    PsiSolution sol(coupling, measure, lambda, grid);
    sol.nodes = psi_nodes(measure, coupling);
    sol.slices = run_recursion(measure, coupling, lambda, grid, sol.nodes, true);
    return sol;
}

double gt_bound(const AtomicMeasure& measure, const CouplingSpec& coupling, double lambda,
                const PsiGrid& grid) {
    std::vector<double> nodes = psi_nodes(measure, coupling);
    auto slices = run_recursion(measure, coupling, lambda, grid, nodes, false);
    const UniformGrid g(grid.half_width, grid.dx);
    double psi00 = interp2(slices.back().psi, g.size(), g, 2.0 * coupling.h, 0.0, EdgeMode::linear);
    return 2.0 * kLog2 + psi00 - lambda * coupling.q - closed_integrals(measure, coupling, nodes);
}

std::pair<double, double> optimize_lambda(const AtomicMeasure& measure,
                                          const CouplingSpec& coupling, const PsiGrid& grid,
                                          std::pair<double, double> lambda_range) {
    auto f = [&](double l) { return gt_bound(measure, coupling, l, grid); };
    double a = lambda_range.first, b = lambda_range.second;
    if (!(b > a)) throw domain_error("optimize_lambda: empty range");

    double anchor_l = 0.0;
    double anchor_v = 1e300;
    if (a <= 0.0 && 0.0 <= b) anchor_v = f(0.0);  // never worse than lambda = 0

    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    bool convex_probe = fm <= 0.5 * (fa + fb) + 1e-9;
    if (!convex_probe) {
        // Grid scan fallback, then tighten around the best cell.
        const int n = 17;
        double best_l = a, best_v = fa;
        for (int i = 0; i <= n; ++i) {
            double l = a + (b - a) * i / n;
            double v = (i == 0) ? fa : (i == n ? fb : f(l));
            if (v < best_v) {
                best_v = v;
                best_l = l;
            }
        }
        a = std::max(lambda_range.first, best_l - (b - a) / n);
        b = std::min(lambda_range.second, best_l + (lambda_range.second - lambda_range.first) / n);
    }

    const double invphi = 0.6180339887498948482;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    double best_l = f1 < f2 ? x1 : x2, best_v = std::min(f1, f2);
    for (int it = 0; it < 28 && (b - a) > 1e-4; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
        if (f1 < best_v) {
            best_v = f1;
            best_l = x1;
        }
        if (f2 < best_v) {
            best_v = f2;
            best_l = x2;
        }
    }
    if (anchor_v < best_v) return {anchor_l, anchor_v};
    return {best_l, best_v};
}

double coupled_overlap_map(const CouplingSpec& coupling, const PhiSolution& muP_phi, double eta,
                           double q, int quad_order) {
    const double var = std::max(muP_phi.mixture.d1(eta), 0.0);
    const double sigma = std::sqrt(var);
    const GaussHermite& quad = gauss_hermite(quad_order);
    PhiSlice sl = muP_phi.slice_at(eta);
    const UniformGrid& g = muP_phi.grid;
    const double h = coupling.h;
    if (sigma <= 1e-12) {
        double u = grid_read(sl.dphi, g, h, EdgeMode::clamp);
        return u * u;
    }
    double rho = std::clamp(coupling.xi0.d1(q) / var, -1.0, 1.0);
    double c = std::sqrt(std::max(1.0 - rho * rho, 0.0));
    double acc = 0.0;
    for (std::size_t i = 0; i < quad.z.size(); ++i) {
        double u1 = grid_read(sl.dphi, g, h + sigma * quad.z[i], EdgeMode::clamp);
        double inner = 0.0;
        for (std::size_t j = 0; j < quad.z.size(); ++j) {
            double z2 = rho * quad.z[i] + c * quad.z[j];
            inner += quad.w[j] * grid_read(sl.dphi, g, h + sigma * z2, EdgeMode::clamp);
        }
        acc += quad.w[i] * u1 * inner;
    }
    return acc;
}

FixedPointReport coupled_fixed_point(const CouplingSpec& coupling, const PhiSolution& muP_phi,
                                     double eta, int quad_order) {
    FixedPointReport rep;
    if (coupling.h == 0.0 && eta <= 1e-9) {
        rep.q_star = 0.0;
        return rep;
    }
    auto f_of = [&](double q) {
        return coupled_overlap_map(coupling, muP_phi, eta, q, quad_order);
    };

    const int samples = 33;
    double prev_gap = 0.0, prev_q = -eta;
    double root = eta;
    bool bracketed = false;
    for (int i = 0; i < samples; ++i) {
        double q = -eta + 2.0 * eta * i / (samples - 1);
        double fv = f_of(q);
        rep.f_values.emplace_back(q, fv);
        double gap = fv - q;
        if (i > 0 && (prev_gap > 0.0) != (gap > 0.0) && !bracketed) {
            double lo = prev_q, hi = q;
            bool lo_pos = prev_gap > 0.0;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                if ((f_of(mid) - mid > 0.0) == lo_pos) lo = mid;
                else hi = mid;
            }
            root = 0.5 * (lo + hi);
            bracketed = true;
        }
        prev_gap = gap;
        prev_q = q;
    }
    if (!bracketed) {
        // f - q kept one sign; the fixed point sits at the right endpoint
        // (f(eta) = eta for identical couplings, up to solver noise).
        if (std::abs(f_of(eta) - eta) < 1e-6) root = eta;
        else throw root_bracket_error("coupled_fixed_point: no sign change in [-eta, eta]");
    }
    rep.q_star = root;
    return rep;
}

ModifiedMeasure modified_measure(const AtomicMeasure& muP, const CouplingSpec& coupling,
                                 double eps) {
    const double Q = std::abs(coupling.q);
    const int iota = coupling.iota();
    MonotoneReport mono = check_monotone_ratio(coupling.xi, coupling.xi0, iota < 0);
    if (!mono.monotone)
        throw invalid_modified_measure_error(
            "modified_measure: zeta/(zeta+zeta0) not nondecreasing at s=" +
            std::to_string(mono.witness.value_or(0.0)));

    auto ratio = [&](double s) {
        s = std::max(s, 1e-12);
        double z = coupling.xi.d2(s);
        double z0 = coupling.xi0.d2(iota * s);
        return z / (z + z0);
    };
    auto cdf = [&, Q](double s) {
        if (s < Q) return muP.cdf_unchecked(s) * ratio(s);
        return muP.cdf_unchecked(s);
    };

    if (Q <= muP.min_atom() + 1e-15 || Q <= 1e-15)
        return ModifiedMeasure{cdf, muP};

    std::vector<double> atoms, weights;
    // Exact jumps at the original atoms below Q, smooth quantile slices of the
    // ratio rise between them, one atom at Q restoring the full CDF level.
    const auto& qa = muP.atoms();
    const auto& wa = muP.weights();
    double placed = 0.0;
    for (std::size_t i = 0; i < qa.size() && qa[i] < Q; ++i) {
        double level = muP.cdf_unchecked(qa[i]);
        atoms.push_back(qa[i]);
        weights.push_back(wa[i] * ratio(qa[i]));
        placed += weights.back();
        double right = (i + 1 < qa.size()) ? std::min(qa[i + 1], Q) : Q;
        if (right <= qa[i] + 1e-15) continue;
        double rise = level * (ratio(right) - ratio(qa[i]));
        if (rise <= 1e-15) continue;
        int slices = std::max(
            1, static_cast<int>(std::ceil(rise * (right - qa[i]) / (2.0 * eps))));
        for (int j = 0; j < slices; ++j) {
            double target = ratio(qa[i]) + (j + 0.5) / slices * (ratio(right) - ratio(qa[i]));
            double lo = qa[i], hi = right;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                if (ratio(mid) >= target) hi = mid;
                else lo = mid;
            }
            atoms.push_back(0.5 * (lo + hi));
            weights.push_back(rise / slices);
            placed += weights.back();
        }
    }
    // Atom at Q: lift back to the unmodified level there.
    double upper = 0.0;
    for (std::size_t i = 0; i < qa.size(); ++i)
        if (qa[i] > Q + 1e-15) upper += wa[i];
    double wq = 1.0 - upper - placed;
    if (wq > kWeightFloor) {
        atoms.push_back(Q);
        weights.push_back(wq);
    }
    for (std::size_t i = 0; i < qa.size(); ++i) {
        if (qa[i] > Q + 1e-15) {
            atoms.push_back(qa[i]);
            weights.push_back(wa[i]);
        }
    }
    return ModifiedMeasure{cdf, AtomicMeasure(std::move(atoms), std::move(weights))};
}

std::string to_string(ScanMode mode) {
    switch (mode) {
        case ScanMode::positivity: return "positivity";
        case ScanMode::nonnegativity: return "nonnegativity";
        case ScanMode::chaos: return "chaos";
    }
    return "unknown";
}

namespace {

Hypotheses check_hypotheses(const CouplingSpec& base, ScanMode mode) {
    Hypotheses hyp;
    if (!check_convexity(base.xi).convex)
        throw hypothesis_error("convexity", "xi is not convex on [-1,1]");
    if (mode == ScanMode::chaos && !check_convexity(base.xi0).convex)
        throw hypothesis_error("convexity", "xi0 is not convex on [-1,1]");
    hyp.convexity = true;

    DominanceReport dom = check_dominance(base);
    if (!dom.weak)
        throw hypothesis_error("dominance", "xi0''(s) <= xi''(|s|) fails");
    if (mode == ScanMode::chaos && !dom.strict)
        throw hypothesis_error("dominance", "strict dominance xi0''(s) < xi''(|s|) fails");
    hyp.dominance = true;

    switch (mode) {
        case ScanMode::positivity:
            if (base.h == 0.0)
                throw hypothesis_error("field", "positivity requires h != 0");
            if (!base.identical())
                throw hypothesis_error("coupling", "positivity is a single-system statement");
            if (base.xi.is_even()) {
                hyp.ratio = true;  // case (i); the ratio is identically 1/2
            } else {
                if (!check_monotone_ratio(base.xi, base.xi, true).monotone)
                    throw hypothesis_error("ratio",
                                           "xi''/(xi''+xi''(-s)) not nondecreasing on (0,1]");
                hyp.ratio = true;
            }
            break;
        case ScanMode::nonnegativity:
            if (base.h != 0.0)
                throw hypothesis_error("field", "nonnegativity requires h = 0");
            if (!base.identical())
                throw hypothesis_error("coupling", "nonnegativity is a single-system statement");
            if (!check_monotone_ratio(base.xi, base.xi, true).monotone)
                throw hypothesis_error("ratio", "xi''/(xi''+xi''(-s)) not nondecreasing on (0,1]");
            hyp.ratio = true;
            break;
        case ScanMode::chaos:
            if (!check_monotone_ratio(base.xi, base.xi0, true).monotone ||
                !check_monotone_ratio(base.xi, base.xi0, false).monotone)
                throw hypothesis_error("ratio",
                                       "xi''/(xi''+xi0''(+-s)) not nondecreasing on (0,1]");
            hyp.ratio = true;
            break;
    }
    return hyp;
}

}  // namespace

BoundCurve scan_bound(const CouplingSpec& base, const ParisiEstimate& muP, ScanMode mode,
                      const GridParams& grid1d, const PsiGrid& grid, const ScanParams& params) {
    BoundCurve curve;
    curve.mode = mode;
    curve.hypotheses = check_hypotheses(base, mode);
    curve.two_P = 2.0 * muP.value;
    curve.eta = muP.eta;

    PhiSolution phi = solve_phi(muP.measure, base.xi, base.h, grid1d);
    curve.q_star = coupled_fixed_point(base, phi, muP.eta).q_star;

    // PSD of T holds for every q iff zeta >= |zeta0| pointwise for both signs
    // of iota; dominance gives the upper side, convexity of xi0 the lower.
    bool psd_all = true;
    for (int i = 0; i <= 400 && psd_all; ++i) {
        double s = static_cast<double>(i) / 400;
        double z = base.xi.d2(s);
        if (std::abs(base.xi0.d2(s)) > z + 1e-12 || std::abs(base.xi0.d2(-s)) > z + 1e-12)
            psd_all = false;
    }

    // Candidate q values: uniform grid plus the structurally relevant points.
    std::vector<double> qs;
    for (int i = 0; i < params.q_grid_n; ++i)
        qs.push_back(-1.0 + 2.0 * i / (params.q_grid_n - 1));
    qs.push_back(0.0);
    qs.push_back(muP.eta);
    qs.push_back(-muP.eta);
    qs.push_back(curve.q_star);
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end(), [](double a, double b) { return b - a < 1e-12; }),
             qs.end());

    const double eps = params.eps_exclusion;
    std::vector<double> region;
    for (double q : qs) {
        bool keep = false;
        switch (mode) {
            case ScanMode::positivity: keep = q <= muP.eta - eps + 1e-12; break;
            case ScanMode::nonnegativity: keep = q <= -eps + 1e-12; break;
            case ScanMode::chaos: keep = std::abs(q - curve.q_star) >= eps - 1e-12; break;
        }
        if (keep && q >= -1.0 && q <= 1.0) region.push_back(q);
    }

    curve.points.resize(region.size());
    const double target = curve.two_P - 0.02;  // stop refining once well clear

    parallel_for(static_cast<int>(region.size()), params.threads, [&](int idx) {
        const double q = region[idx];
        CouplingSpec cpq = base.with_q(q);
        BoundPoint pt;
        pt.q = q;
        pt.psd_ok = psd_all;

        // Route A: mu_P with a slope-guided lambda search.
        double best_l = 0.0;
        double best_v = gt_bound(muP.measure, cpq, 0.0, grid);
        {
            const double d = 0.02;
            double gp = gt_bound(muP.measure, cpq, d, grid);
            double gm = gt_bound(muP.measure, cpq, -d, grid);
            if (gp < best_v) { best_v = gp; best_l = d; }
            if (gm < best_v) { best_v = gm; best_l = -d; }
            double dir = (gp - gm < 0.0) ? 1.0 : -1.0;
            double lam = 0.08 * dir;
            double prev_v = best_v;
            for (int step = 0; step < 6 && best_v > target; ++step) {
                if (std::abs(lam) > std::max(std::abs(params.lambda_range.first),
                                             std::abs(params.lambda_range.second)))
                    break;
                double v = gt_bound(muP.measure, cpq, lam, grid);
                if (v < best_v) { best_v = v; best_l = lam; }
                if (v > prev_v) break;
                prev_v = v;
                lam *= 2.0;
            }
            // Local parabolic tighten around the best lambda.
            if (best_v > target) {
                double hstep = std::max(std::abs(best_l) * 0.5, 0.02);
                for (int it = 0; it < 3 && best_v > target; ++it) {
                    double lp = best_l + hstep, lm = best_l - hstep;
                    double vp = gt_bound(muP.measure, cpq, lp, grid);
                    double vm = gt_bound(muP.measure, cpq, lm, grid);
                    if (vp < best_v) { best_v = vp; best_l = lp; }
                    else if (vm < best_v) { best_v = vm; best_l = lm; }
                    else hstep *= 0.5;
                }
            }
        }
        pt.lambda_star = best_l;
        pt.Lambda = best_v;

        // Route B: modified measure at lambda = 0 (only informative beyond eta).
        if (std::abs(q) > muP.eta + 1e-12 && best_v > target) {
            ModifiedMeasure mm = modified_measure(muP.measure, cpq, params.modified_eps);
            double vb = gt_bound(mm.atoms, cpq, 0.0, grid);
            if (vb < pt.Lambda) {
                pt.Lambda = vb;
                pt.lambda_star = 0.0;
            }
        }
        curve.points[idx] = pt;
    });

    curve.margin = 1e300;
    bool all_psd = true;
    for (const auto& pt : curve.points) {
        curve.margin = std::min(curve.margin, curve.two_P - pt.Lambda);
        all_psd = all_psd && pt.psd_ok;
    }
    if (curve.points.empty()) curve.margin = 0.0;
    curve.verdict = (curve.margin > kCertMargin && all_psd && !curve.points.empty())
                        ? to_string(mode)
                        : "inconclusive";
    return curve;
}

double pde_residual(const PsiSolution& psi, double s, double u, double v) {
    auto it = std::upper_bound(psi.nodes.begin(), psi.nodes.end(), s);
    int j = std::clamp(static_cast<int>(it - psi.nodes.begin()) - 1, 0,
                       static_cast<int>(psi.nodes.size()) - 2);
    double a = psi.nodes[j], b = psi.nodes[j + 1];
    double delta = std::min(1e-3, 0.25 * std::min(s - a, b - s));
    if (delta <= 0.0) throw domain_error("pde_residual: probe too close to a node");

    PsiSlice sm = psi.interior_slice(s - delta);
    PsiSlice s0 = psi.interior_slice(s);
    PsiSlice sp = psi.interior_slice(s + delta);
    const UniformGrid& g = psi.grid;
    const int n = g.size();

    auto read = [&](const std::vector<double>& f, double uu, double vv, EdgeMode em) {
        return interp2(f, n, g, uu, vv, em);
    };
    double ds = (read(sp.psi, u, v, EdgeMode::linear) - read(sm.psi, u, v, EdgeMode::linear)) /
                (2.0 * delta);
    double Lu = read(s0.pu, u, v, EdgeMode::clamp);
    double Lv = read(s0.pv, u, v, EdgeMode::clamp);
    double hstep = 2.0 * g.dx();
    double Luu = (read(s0.pu, u + hstep, v, EdgeMode::clamp) -
                  read(s0.pu, u - hstep, v, EdgeMode::clamp)) /
                 (2.0 * hstep);
    double Lvv = (read(s0.pv, u, v + hstep, EdgeMode::clamp) -
                  read(s0.pv, u, v - hstep, EdgeMode::clamp)) /
                 (2.0 * hstep);

    const CouplingSpec& cp = psi.coupling;
    double zeta = cp.xi.d2(s);
    double off = (s < std::abs(cp.q)) ? cp.iota() * cp.xi0.d2(cp.iota() * s) : 0.0;
    double ap = zeta + off, am = zeta - off;
    double m = s0.m;
    double rhs = -(ap * (Luu + m * Lu * Lu) + am * (Lvv + m * Lv * Lv));
    return std::abs(ds - rhs) / std::max({1.0, std::abs(ds), std::abs(rhs)});
}

}  // namespace parisi
