#include "parisi/gibbs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "parisi/errors.hpp"
#include "parisi/parisi_pde.hpp"
#include "parisi/rng.hpp"

namespace parisi {

namespace {

constexpr std::uint64_t kDisorderTag = 0xd150cdeULL;

int popcount32(std::uint32_t x) { return std::popcount(x); }

// In-place lower-Cholesky tolerating exact PSD rank deficiency (zero pivots
// are common: even mixtures make sigma and -sigma rows identical). A negative
// pivot beyond tolerance earns one diagonal jitter retry, then a refusal.
bool cholesky_psd(std::vector<double>& a, int n, double neg_tol) {
    for (int j = 0; j < n; ++j) {
        double d = a[j * static_cast<std::size_t>(n) + j];
        for (int k = 0; k < j; ++k) {
            double v = a[j * static_cast<std::size_t>(n) + k];
            d -= v * v;
        }
        if (d < -neg_tol) return false;
        double piv = d > neg_tol ? std::sqrt(d) : 0.0;
        a[j * static_cast<std::size_t>(n) + j] = piv;
        for (int i = j + 1; i < n; ++i) {
            double v = a[i * static_cast<std::size_t>(n) + j];
            const double* ri = &a[i * static_cast<std::size_t>(n)];
            const double* rj = &a[j * static_cast<std::size_t>(n)];
            double acc = v;
            for (int k = 0; k < j; ++k) acc -= ri[k] * rj[k];
            a[i * static_cast<std::size_t>(n) + j] = piv > 0.0 ? acc / piv : 0.0;
        }
        for (int k = j + 1; k < n; ++k) a[j * static_cast<std::size_t>(n) + k] = 0.0;
    }
    return true;
}

struct DisorderModel {
    int N;
    int n_conf;
    std::vector<double> chol;      // lower factor, (dim)^2
    int dim;                       // n_conf (single/identical) or 2 n_conf
    std::vector<double> spin_sum;  // N - 2 popcount per configuration

    std::vector<double> sample(std::uint64_t seed, int replica) const {
        Rng rng(seed, kDisorderTag, static_cast<std::uint64_t>(replica));
        std::vector<double> g(dim);
        for (double& v : g) v = rng.gaussian();
        std::vector<double> x(dim, 0.0);
        for (int i = 0; i < dim; ++i) {
            const double* row = &chol[static_cast<std::size_t>(i) * dim];
            double acc = 0.0;
            for (int k = 0; k <= i; ++k) acc += row[k] * g[k];
            x[i] = acc;
        }
        return x;
    }
};

std::vector<double> overlap_values(const MixtureSpec& xi, int N, double scale) {
    std::vector<double> v(N + 1);
    for (int d = 0; d <= N; ++d) v[d] = scale * xi.value(1.0 - 2.0 * d / N);
    return v;
}

DisorderModel build_single(const MixtureSpec& xi, int N) {
    DisorderModel m;
    m.N = N;
    m.n_conf = 1 << N;
    m.dim = m.n_conf;
    m.spin_sum.resize(m.n_conf);
    for (int c = 0; c < m.n_conf; ++c)
        m.spin_sum[c] = N - 2.0 * popcount32(static_cast<std::uint32_t>(c));

    std::vector<double> bypop = overlap_values(xi, N, N);
    std::vector<double>& a = m.chol;
    a.assign(static_cast<std::size_t>(m.dim) * m.dim, 0.0);
    for (int i = 0; i < m.n_conf; ++i)
        for (int j = 0; j <= i; ++j) {
            double v = bypop[popcount32(static_cast<std::uint32_t>(i ^ j))];
            a[static_cast<std::size_t>(i) * m.dim + j] = v;
            a[static_cast<std::size_t>(j) * m.dim + i] = v;
        }
    double neg_tol = 1e-8 * std::max(1.0, N * xi.value(1.0));
    if (!cholesky_psd(a, m.dim, neg_tol)) {
        // One diagonal jitter retry before refusing.
        a.assign(static_cast<std::size_t>(m.dim) * m.dim, 0.0);
        for (int i = 0; i < m.n_conf; ++i)
            for (int j = 0; j <= i; ++j) {
                double v = bypop[popcount32(static_cast<std::uint32_t>(i ^ j))];
                a[static_cast<std::size_t>(i) * m.dim + j] = v;
                a[static_cast<std::size_t>(j) * m.dim + i] = v;
            }
        for (int i = 0; i < m.dim; ++i) a[static_cast<std::size_t>(i) * m.dim + i] += 1e-10 * N;
        if (!cholesky_psd(a, m.dim, neg_tol))
            throw not_psd_error("gibbs: configuration Gram not PSD after jitter", 0.0);
    }
    return m;
}

DisorderModel build_coupled(const CouplingSpec& cp, int N) {
    DisorderModel m;
    m.N = N;
    m.n_conf = 1 << N;
    m.dim = 2 * m.n_conf;
    m.spin_sum.resize(m.n_conf);
    for (int c = 0; c < m.n_conf; ++c)
        m.spin_sum[c] = N - 2.0 * popcount32(static_cast<std::uint32_t>(c));

    std::vector<double> self = overlap_values(cp.xi, N, N);
    std::vector<double> cross = overlap_values(cp.xi0, N, N);
    std::vector<double>& a = m.chol;
    a.assign(static_cast<std::size_t>(m.dim) * m.dim, 0.0);
    const int n = m.n_conf;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int d = popcount32(static_cast<std::uint32_t>(i ^ j));
            a[static_cast<std::size_t>(i) * m.dim + j] = self[d];
            a[static_cast<std::size_t>(n + i) * m.dim + (n + j)] = self[d];
            a[static_cast<std::size_t>(i) * m.dim + (n + j)] = cross[d];
            a[static_cast<std::size_t>(n + i) * m.dim + j] = cross[d];
        }
    std::vector<double> backup = a;
    double neg_tol = 1e-8 * std::max(1.0, N * cp.xi.value(1.0));
    if (!cholesky_psd(a, m.dim, neg_tol)) {
        a = backup;
        for (int i = 0; i < m.dim; ++i) a[static_cast<std::size_t>(i) * m.dim + i] += 1e-10 * N;
        if (!cholesky_psd(a, m.dim, neg_tol))
            throw not_psd_error("gibbs: coupled Gram not PSD after jitter", 0.0);
    }
    return m;
}

double logsumexp(const std::vector<double>& v) {
    double mx = -1e300;
    for (double x : v) mx = std::max(mx, x);
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

Estimate reduce(const std::vector<double>& samples) {
    Estimate e;
    double n = static_cast<double>(samples.size());
    for (double v : samples) e.mean += v;
    e.mean /= n;
    double var = 0.0;
    for (double v : samples) var += (v - e.mean) * (v - e.mean);
    e.std_err = samples.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
    return e;
}

void check_caps(int N, int cap, int n_disorder) {
    if (N < 1 || N > cap)
        throw domain_error("gibbs: N must lie in [1," + std::to_string(cap) + "]");
    if (n_disorder < 1) throw domain_error("gibbs: n_disorder >= 1 required");
}

int overlap_class(const CouplingSpec& cp, int N, double q) {
    double d_real = N * (1.0 - q) / 2.0;
    int d = static_cast<int>(std::lround(d_real));
    if (d < 0 || d > N || std::abs(d_real - d) > 1e-9)
        throw domain_error("gibbs: q not in S_N = {-1, -1+2/N, ..., 1}");
    (void)cp;
    return d;
}

}  // namespace

Estimate free_energy_exact(const MixtureSpec& mixture, double h, int N, int n_disorder,
                           std::uint64_t seed) {
    check_caps(N, kMaxSingleN, n_disorder);
    if (n_disorder < 2) throw domain_error("free_energy_exact: n_disorder >= 2 required");
    DisorderModel m = build_single(mixture, N);
    std::vector<double> fes(n_disorder);
    std::vector<double> ham(m.n_conf);
    for (int r = 0; r < n_disorder; ++r) {
        std::vector<double> x = m.sample(seed, r);
        for (int c = 0; c < m.n_conf; ++c) ham[c] = x[c] + h * m.spin_sum[c];
        fes[r] = logsumexp(ham) / N;
    }
    return reduce(fes);
}

GapReport guerra_gap(const AtomicMeasure& measure, const MixtureSpec& mixture, double h, int N,
                     int n_disorder, std::uint64_t seed, const GridParams& grid) {
    Estimate fe = free_energy_exact(mixture, h, N, n_disorder, seed);
    double p = parisi_functional(measure, mixture, h, grid);
    GapReport rep;
    rep.gap = p - fe.mean;
    rep.std_err = fe.std_err;
    rep.ok = rep.gap >= -3.0 * fe.std_err;
    return rep;
}

OverlapHistogram coupled_overlap_distribution(const CouplingSpec& coupling, int N, int n_disorder,
                                              std::uint64_t seed) {
    check_caps(N, kMaxCoupledN, n_disorder);
    const bool identical = coupling.identical();
    DisorderModel m = identical ? build_single(coupling.xi, N) : build_coupled(coupling, N);
    const int n = m.n_conf;
    const double h = coupling.h;

    OverlapHistogram hist;
    hist.N = N;
    hist.q.resize(N + 1);
    for (int d = 0; d <= N; ++d) hist.q[d] = 1.0 - 2.0 * d / N;
    std::vector<std::vector<double>> per_rep(n_disorder, std::vector<double>(N + 1, 0.0));

    std::vector<double> h1(n), h2(n), w1(n), w2(n);
    for (int r = 0; r < n_disorder; ++r) {
        std::vector<double> x = m.sample(seed, r);
        for (int c = 0; c < n; ++c) {
            h1[c] = x[c] + h * m.spin_sum[c];
            h2[c] = identical ? h1[c] : x[n + c] + h * m.spin_sum[c];
        }
        double z1 = logsumexp(h1), z2 = logsumexp(h2);
        for (int c = 0; c < n; ++c) {
            w1[c] = std::exp(h1[c] - z1);
            w2[c] = std::exp(h2[c] - z2);
        }
        for (int i = 0; i < n; ++i) {
            if (w1[i] < 1e-300) continue;
            for (int j = 0; j < n; ++j)
                per_rep[r][popcount32(static_cast<std::uint32_t>(i ^ j))] += w1[i] * w2[j];
        }
    }

    hist.prob.resize(N + 1);
    hist.std_err.resize(N + 1);
    for (int d = 0; d <= N; ++d) {
        std::vector<double> col(n_disorder);
        for (int r = 0; r < n_disorder; ++r) col[r] = per_rep[r][d];
        Estimate e = reduce(col);
        hist.prob[d] = e.mean;
        hist.std_err[d] = e.std_err;
    }
    return hist;
}

ConstrainedFE constrained_coupled_free_energy(const CouplingSpec& coupling, int N, double q,
                                              int n_disorder, std::uint64_t seed) {
    check_caps(N, kMaxCoupledN, n_disorder);
    const int dcls = overlap_class(coupling, N, q);
    const bool identical = coupling.identical();
    DisorderModel m = identical ? build_single(coupling.xi, N) : build_coupled(coupling, N);
    const int n = m.n_conf;
    const double h = coupling.h;

    std::vector<double> samples(n_disorder);
    long long pair_count = 0;
    std::vector<double> h1(n), h2(n);
    for (int r = 0; r < n_disorder; ++r) {
        std::vector<double> x = m.sample(seed, r);
        for (int c = 0; c < n; ++c) {
            h1[c] = x[c] + h * m.spin_sum[c];
            h2[c] = identical ? h1[c] : x[n + c] + h * m.spin_sum[c];
        }
        double mx = -1e300;
        long long count = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (popcount32(static_cast<std::uint32_t>(i ^ j)) == dcls) {
                    mx = std::max(mx, h1[i] + h2[j]);
                    ++count;
                }
        if (count == 0) throw domain_error("constrained_coupled_free_energy: empty pair set");
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (popcount32(static_cast<std::uint32_t>(i ^ j)) == dcls)
                    acc += std::exp(h1[i] + h2[j] - mx);
        samples[r] = (mx + std::log(acc)) / N;
        pair_count = count;
    }
    Estimate e = reduce(samples);
    return ConstrainedFE{e.mean, e.std_err, pair_count};
}

std::vector<double> sample_hamiltonian_values(const MixtureSpec& mixture, int N,
                                              std::uint64_t seed, int replica) {
    check_caps(N, kMaxSingleN, 1);
    DisorderModel m = build_single(mixture, N);
    return m.sample(seed, replica);
}

Estimate coupled_free_energy_exact(const CouplingSpec& coupling, int N, int n_disorder,
                                   std::uint64_t seed) {
    check_caps(N, kMaxCoupledN, n_disorder);
    const bool identical = coupling.identical();
    DisorderModel m = identical ? build_single(coupling.xi, N) : build_coupled(coupling, N);
    const int n = m.n_conf;
    const double h = coupling.h;

    std::vector<double> samples(n_disorder);
    std::vector<double> h1(n), h2(n);
    for (int r = 0; r < n_disorder; ++r) {
        std::vector<double> x = m.sample(seed, r);
        for (int c = 0; c < n; ++c) {
            h1[c] = x[c] + h * m.spin_sum[c];
            h2[c] = identical ? h1[c] : x[n + c] + h * m.spin_sum[c];
        }
        // log sum over all pairs factorizes into the two partition functions.
        samples[r] = (logsumexp(h1) + logsumexp(h2)) / N;
    }
    return reduce(samples);
}

}  // namespace parisi
