#include "parisi/mixture.hpp"

#include <cmath>

#include "parisi/errors.hpp"

namespace parisi {

MixtureSpec::MixtureSpec(const std::map<int, double>& coeffs, bool allow_zero) {
    for (const auto& [p, c] : coeffs) {
        if (p < 2) throw domain_error("mixture: degrees must satisfy p >= 2");
        if (!(c >= 0.0) || !std::isfinite(c))
            throw domain_error("mixture: coefficients must be finite and nonnegative");
        if (c > 0.0) coeffs_.emplace_back(p, c);
    }
    if (coeffs_.empty() && !allow_zero)
        throw domain_error("mixture: all coefficients are zero (pass allow_zero to permit)");
}

MixtureSpec MixtureSpec::sk(double beta) {
    if (!(beta > 0.0)) throw domain_error("mixture: SK requires beta > 0");
    return MixtureSpec({{2, beta * beta / 2.0}});
}

double MixtureSpec::value(double s) const {
    double acc = 0.0;
    for (const auto& [p, c] : coeffs_) acc += c * std::pow(s, p);
    return acc;
}

double MixtureSpec::d1(double s) const {
    double acc = 0.0;
    for (const auto& [p, c] : coeffs_) acc += c * p * std::pow(s, p - 1);
    return acc;
}

double MixtureSpec::d2(double s) const {
    double acc = 0.0;
    for (const auto& [p, c] : coeffs_) acc += c * p * (p - 1) * std::pow(s, p - 2);
    return acc;
}

double MixtureSpec::theta(double s) const {
    // theta(s) = s xi'(s) - xi(s) = sum (p-1) beta_p^2 s^p; theta' = s xi''.
    double acc = 0.0;
    for (const auto& [p, c] : coeffs_) acc += c * (p - 1) * std::pow(s, p);
    return acc;
}

double MixtureSpec::eval(double s, int order) const {
    if (!(std::abs(s) <= 1.0)) throw domain_error("mixture: |s| <= 1 required");
    switch (order) {
        case 0: return value(s);
        case 1: return d1(s);
        case 2: return d2(s);
        default: throw domain_error("mixture: order must be 0, 1 or 2");
    }
}

bool MixtureSpec::is_even() const {
    for (const auto& [p, c] : coeffs_)
        if (p % 2 == 1 && c > 0.0) return false;
    return true;
}

double theta_eval(const MixtureSpec& spec, double s) {
    if (!(std::abs(s) <= 1.0)) throw domain_error("theta: |s| <= 1 required");
    return spec.theta(s);
}

ConvexityReport check_convexity(const MixtureSpec& spec, int grid_n) {
    if (grid_n < 3) throw domain_error("check_convexity: grid_n >= 3 required");
    double min_val = 0.0, min_s = -1.0;
    bool first = true;
    for (int i = 0; i < grid_n; ++i) {
        double s = -1.0 + 2.0 * i / (grid_n - 1);
        double v = spec.d2(s);
        if (first || v < min_val) {
            min_val = v;
            min_s = s;
            first = false;
        }
    }
    ConvexityReport rep;
    rep.convex = min_val >= -kConvexityTol;
    if (!rep.convex) rep.witness = min_s;
    return rep;
}

MonotoneReport check_monotone_ratio(const MixtureSpec& num, const MixtureSpec& den_extra,
                                    bool reflect_den, int grid_n) {
    if (grid_n < 3) throw domain_error("check_monotone_ratio: grid_n >= 3 required");
    MonotoneReport rep;
    rep.monotone = true;
    double prev = 0.0;
    for (int i = 1; i <= grid_n; ++i) {
        double s = static_cast<double>(i) / grid_n;  // (0,1]
        double zn = num.d2(s);
        double g = reflect_den ? den_extra.d2(-s) : den_extra.d2(s);
        double den = zn + g;
        if (!(den > 0.0))
            throw degenerate_denominator_error("check_monotone_ratio: denominator <= 0 at s=" +
                                               std::to_string(s));
        double r = zn / den;
        if (i > 1 && r < prev - kMonotoneTol) {
            rep.monotone = false;
            rep.witness = s;
            return rep;
        }
        prev = r;
    }
    return rep;
}

CouplingSpec::CouplingSpec(MixtureSpec xi_, MixtureSpec xi0_, double h_, double q_)
    : xi(std::move(xi_)), xi0(std::move(xi0_)), h(h_), q(q_) {
    if (!(std::abs(q) <= 1.0)) throw domain_error("coupling: |q| <= 1 required");
}

DominanceReport check_dominance(const CouplingSpec& coupling, int grid_n) {
    if (grid_n < 3) throw domain_error("check_dominance: grid_n >= 3 required");
    DominanceReport rep;
    rep.weak = true;
    rep.strict = true;
    for (int i = 0; i < grid_n; ++i) {
        double s = -1.0 + 2.0 * i / (grid_n - 1);
        double lhs = coupling.xi0.d2(s);
        double rhs = coupling.xi.d2(std::abs(s));
        if (lhs > rhs + kDominanceTol) {
            rep.weak = false;
            rep.strict = false;
            rep.witness = s;
            return rep;
        }
        if (std::abs(s) > 1e-14 && lhs >= rhs - kDominanceTol && rep.strict) {
            rep.strict = false;
            if (!rep.witness) rep.witness = s;
        }
    }
    return rep;
}

}  // namespace parisi
