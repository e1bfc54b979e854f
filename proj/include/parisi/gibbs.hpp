#pragma once

#include <cstdint>
#include <vector>

#include "parisi/measure.hpp"
#include "parisi/mixture.hpp"
#include "parisi/grid.hpp"

namespace parisi {

inline constexpr int kMaxSingleN = 14;
inline constexpr int kMaxCoupledN = 12;

struct Estimate {
    double mean = 0.0;
    double std_err = 0.0;
};

// (1/N) E log sum_sigma exp H(sigma) by exact enumeration of the 2^N
// configurations per disorder replica; the Gaussian part is drawn through a
// Cholesky factor of the configuration Gram matrix N xi(R).
Estimate free_energy_exact(const MixtureSpec& mixture, double h, int N, int n_disorder,
                           std::uint64_t seed);

struct GapReport {
    double gap = 0.0;
    double std_err = 0.0;
    bool ok = false;
};

// P(measure) - exact free energy; ok when the bound holds within 3 std errors.
GapReport guerra_gap(const AtomicMeasure& measure, const MixtureSpec& mixture, double h, int N,
                     int n_disorder, std::uint64_t seed, const GridParams& grid);

struct OverlapHistogram {
    int N = 0;
    std::vector<double> q;        // the N+1 levels of S_N
    std::vector<double> prob;     // disorder-averaged G x G mass per level
    std::vector<double> std_err;
};

// Exact product-Gibbs distribution of the overlap between two independently
// sampled configurations, averaged over disorder replicas. Identical
// couplings (xi0 == xi) share one Hamiltonian draw.
OverlapHistogram coupled_overlap_distribution(const CouplingSpec& coupling, int N, int n_disorder,
                                              std::uint64_t seed);

struct ConstrainedFE {
    double mean = 0.0;
    double std_err = 0.0;
    long long pair_count = 0;
};

// F_N(q) = (1/N) E log sum_{R = q} exp(H1 + H2), restricted to pairs with the
// exact overlap q in S_N.
ConstrainedFE constrained_coupled_free_energy(const CouplingSpec& coupling, int N, double q,
                                              int n_disorder, std::uint64_t seed);

// Unconstrained coupled free energy (1/N) E log sum over all pairs; the
// constrained values reassemble it by log-sum-exp over q in S_N.
Estimate coupled_free_energy_exact(const CouplingSpec& coupling, int N, int n_disorder,
                                   std::uint64_t seed);

// One disorder draw of the Gaussian part X(sigma), indexed by configuration
// bitmask; exposed so tests can validate the covariance N xi(R) directly.
std::vector<double> sample_hamiltonian_values(const MixtureSpec& mixture, int N,
                                              std::uint64_t seed, int replica);

}  // namespace parisi
