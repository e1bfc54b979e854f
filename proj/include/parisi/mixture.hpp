#pragma once

#include <map>
#include <optional>
#include <vector>

namespace parisi {

inline constexpr double kConvexityTol = 1e-10;
inline constexpr double kMonotoneTol = 1e-10;
inline constexpr double kDominanceTol = 1e-10;

// Mixture function xi(s) = sum_{p>=2} beta_p^2 s^p as a finite coefficient
// list. Coefficients are nonnegative; the zero mixture must be requested
// explicitly since the model is vacuous without interactions.
class MixtureSpec {
  public:
    explicit MixtureSpec(const std::map<int, double>& coeffs, bool allow_zero = false);

    static MixtureSpec sk(double beta);  // xi(s) = (beta^2/2) s^2

    double value(double s) const;  // xi(s)
    double d1(double s) const;     // xi'(s)
    double d2(double s) const;     // xi''(s), written zeta elsewhere
    double theta(double s) const;  // s xi'(s) - xi(s)

    // Domain-checked dispatch, order in {0,1,2}; |s| <= 1.
    double eval(double s, int order) const;

    bool is_zero() const { return coeffs_.empty(); }
    int max_degree() const { return coeffs_.empty() ? 0 : coeffs_.back().first; }
    const std::vector<std::pair<int, double>>& coeffs() const { return coeffs_; }

    bool is_even() const;
    bool operator==(const MixtureSpec&) const = default;

  private:
    std::vector<std::pair<int, double>> coeffs_;  // sorted by degree, values > 0
};

double theta_eval(const MixtureSpec& spec, double s);

struct ConvexityReport {
    bool convex = false;
    std::optional<double> witness;  // minimizing s when not convex
};
ConvexityReport check_convexity(const MixtureSpec& spec, int grid_n = 2001);

struct MonotoneReport {
    bool monotone = false;
    std::optional<double> witness;  // first violating s
};
// Checks s -> xi''(s) / (xi''(s) + g(s)) nondecreasing on (0,1],
// g(s) = den_extra''(-s) when reflect_den, else den_extra''(s).
MonotoneReport check_monotone_ratio(const MixtureSpec& num, const MixtureSpec& den_extra,
                                    bool reflect_den, int grid_n = 2001);

// Two systems with equal self-covariance xi, cross-covariance xi0, common
// external field h and overlap constraint q; iota = +1 iff q >= 0.
struct CouplingSpec {
    MixtureSpec xi;
    MixtureSpec xi0;
    double h = 0.0;
    double q = 0.0;

    CouplingSpec(MixtureSpec xi_, MixtureSpec xi0_, double h_, double q_);

    int iota() const { return q >= 0.0 ? 1 : -1; }
    bool identical() const { return xi == xi0; }
    double zeta(double s) const { return xi.d2(s); }
    double zeta0(double s) const { return xi0.d2(iota() * s); }
    CouplingSpec with_q(double q_new) const { return CouplingSpec(xi, xi0, h, q_new); }
};

struct DominanceReport {
    bool strict = false;
    bool weak = false;
    std::optional<double> witness;
};
// xi0''(s) <= xi''(|s|) on [-1,1] (weak), strict off s = 0.
DominanceReport check_dominance(const CouplingSpec& coupling, int grid_n = 2001);

}  // namespace parisi
