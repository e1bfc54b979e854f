#include "parisi/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parisi/errors.hpp"

namespace parisi {

AtomicMeasure::AtomicMeasure(std::vector<double> atoms, std::vector<double> weights) {
    if (atoms.empty() || atoms.size() != weights.size())
        throw domain_error("measure: atoms and weights must be nonempty and equal length");
    std::vector<std::size_t> idx(atoms.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return atoms[i] < atoms[j]; });

    for (std::size_t k : idx) {
        double q = atoms[k], w = weights[k];
        if (!(q >= 0.0 && q <= 1.0)) throw domain_error("measure: atoms must lie in [0,1]");
        if (!(w >= 0.0) || !std::isfinite(w)) throw domain_error("measure: weights must be >= 0");
        if (!atoms_.empty() && q - atoms_.back() < kAtomMergeGap) {
            weights_.back() += w;
        } else {
            atoms_.push_back(q);
            weights_.push_back(w);
        }
    }

    // Fold dust atoms into their nearest neighbor.
    for (std::size_t i = 0; i < atoms_.size();) {
        if (weights_[i] <= kWeightFloor && atoms_.size() > 1) {
            std::size_t dst;
            if (i == 0) dst = 1;
            else if (i + 1 == atoms_.size()) dst = i - 1;
            else dst = (atoms_[i] - atoms_[i - 1] <= atoms_[i + 1] - atoms_[i]) ? i - 1 : i + 1;
            weights_[dst] += weights_[i];
            atoms_.erase(atoms_.begin() + i);
            weights_.erase(weights_.begin() + i);
        } else {
            ++i;
        }
    }

    double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
        throw domain_error("measure: weights must sum to 1 (got " + std::to_string(total) + ")");
    // Remove the residual rounding so downstream partial sums end at exactly 1.
    for (double& w : weights_) w /= total;
}

AtomicMeasure AtomicMeasure::dirac(double q) { return AtomicMeasure({q}, {1.0}); }

double AtomicMeasure::cdf(double s) const {
    if (!(s >= 0.0 && s <= 1.0)) throw domain_error("cdf: s must lie in [0,1]");
    return cdf_unchecked(s);
}

double AtomicMeasure::cdf_unchecked(double s) const {
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), s);
    double acc = 0.0;
    for (auto p = atoms_.begin(); p != it; ++p) acc += weights_[p - atoms_.begin()];
    return acc;
}

double distance(const AtomicMeasure& a, const AtomicMeasure& b) {
    // Piecewise-constant integrand; integrate exactly between breakpoints.
    std::vector<double> cuts;
    cuts.reserve(a.size() + b.size() + 2);
    cuts.push_back(0.0);
    for (double q : a.atoms()) cuts.push_back(q);
    for (double q : b.atoms()) cuts.push_back(q);
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        if (hi <= lo) continue;
        double v = std::abs(a.cdf_unchecked(lo) - b.cdf_unchecked(lo));
        acc += v * (hi - lo);
    }
    return acc;
}

AtomicMeasure discretize(const std::function<double(double)>& cdf, double eps) {
    if (!(eps > 0.0)) throw domain_error("discretize: eps must be > 0");
    if (std::abs(cdf(1.0) - 1.0) > 1e-9)
        throw invalid_cdf_error("discretize: cdf(1) must equal 1");

    // Monotonicity probe.
    const int probe_n = 2048;
    double prev = cdf(0.0);
    if (prev < -1e-12) throw invalid_cdf_error("discretize: cdf(0) < 0");
    for (int i = 1; i <= probe_n; ++i) {
        double s = static_cast<double>(i) / probe_n;
        double v = cdf(s);
        if (v < prev - 1e-12)
            throw invalid_cdf_error("discretize: callable not nondecreasing near s=" +
                                    std::to_string(s));
        prev = std::max(prev, v);
    }

    // Quantile atoms at mid-levels, weighted by the exact CDF increment
    // between neighboring atoms so step inputs are recovered exactly.
    const int k = static_cast<int>(std::ceil(2.0 / eps));
    std::vector<double> atoms;
    atoms.reserve(k);
    for (int j = 0; j < k; ++j) {
        double level = (j + 0.5) / k;
        double lo = 0.0, hi = 1.0;
        if (cdf(0.0) >= level) {
            hi = 0.0;
        } else {
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                if (cdf(mid) >= level) hi = mid;
                else lo = mid;
            }
        }
        if (atoms.empty() || hi - atoms.back() > 1e-12) atoms.push_back(hi);
    }
    std::vector<double> weights(atoms.size());
    double below = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
        double mid = 0.5 * (atoms[i] + atoms[i + 1]);
        double c = cdf(mid);
        weights[i] = std::max(c - below, 0.0);
        below = c;
    }
    weights.back() = std::max(1.0 - below, 0.0);
    return AtomicMeasure(std::move(atoms), std::move(weights));
}

}  // namespace parisi
