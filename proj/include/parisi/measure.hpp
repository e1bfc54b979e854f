#pragma once

#include <functional>
#include <vector>

namespace parisi {

inline constexpr double kWeightFloor = 1e-12;
inline constexpr double kAtomMergeGap = 1e-10;

// A candidate order parameter: an atomic probability measure on [0,1] with
// strictly increasing atoms and positive weights summing to 1. Construction
// merges atoms closer than kAtomMergeGap and folds weights below kWeightFloor
// into the nearest neighbor, so optimizer output stays well formed.
class AtomicMeasure {
  public:
    AtomicMeasure(std::vector<double> atoms, std::vector<double> weights);

    static AtomicMeasure dirac(double q);

    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return atoms_.size(); }

    // Right-continuous CDF alpha(s) = sum_{q_i <= s} w_i; s in [0,1].
    double cdf(double s) const;

    // CDF evaluated without the domain check (internal grids touch s=1 only).
    double cdf_unchecked(double s) const;

    double min_atom() const { return atoms_.front(); }

    bool operator==(const AtomicMeasure&) const = default;

  private:
    std::vector<double> atoms_;
    std::vector<double> weights_;
};

// d(mu, mu') = int_0^1 |alpha_mu - alpha_mu'| ds, exact for step CDFs.
double distance(const AtomicMeasure& a, const AtomicMeasure& b);

// Quantile discretization of a nondecreasing CDF on [0,1] with cdf(1) = 1:
// k = ceil(1/(2 eps)) equal-mass slices, atom at each mid-level quantile.
// Guarantees d(result, input) <= eps.
AtomicMeasure discretize(const std::function<double(double)>& cdf, double eps);

}  // namespace parisi
