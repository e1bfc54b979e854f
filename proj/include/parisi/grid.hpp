#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "parisi/errors.hpp"
#include "parisi/mixture.hpp"

namespace parisi {

struct GridParams {
    double half_width = 0.0;
    double dx = 0.0;
    int quad_order = 80;

    // L = |h| + 6 sqrt(xi'(1)), dx = 0.01 sqrt(max(xi'(1), 1)).
    static GridParams defaults(const MixtureSpec& xi, double h) {
        GridParams g;
        double v = std::max(xi.d1(1.0), 0.0);
        g.half_width = std::abs(h) + 6.0 * std::sqrt(v);
        g.dx = 0.01 * std::sqrt(std::max(v, 1.0));
        return g;
    }
};

// Uniform symmetric grid [-L, L] with an odd point count so x = 0 is a node.
class UniformGrid {
  public:
    UniformGrid() = default;
    UniformGrid(double half_width, double dx) {
        int half_n = static_cast<int>(std::ceil(half_width / dx));
        n_ = 2 * half_n + 1;
        dx_ = dx;
        x0_ = -half_n * dx;
    }
    int size() const { return n_; }
    double dx() const { return dx_; }
    double x0() const { return x0_; }
    double x(int i) const { return x0_ + i * dx_; }
    double xmax() const { return x(n_ - 1); }
    bool operator==(const UniformGrid&) const = default;

  private:
    int n_ = 0;
    double dx_ = 0.0;
    double x0_ = 0.0;
};

enum class EdgeMode { linear, clamp, zero };

// Centered 4-point cubic read off a gridded function. Beyond the grid,
// either extend linearly from the boundary slope (values that grow like |x|),
// clamp (bounded derivative fields), or vanish (densities).
inline double cubic_read(const double* f, int n, double x0, double dx, double x, EdgeMode edge) {
    const double t = (x - x0) / dx;
    if (t <= 0.0) {
        if (edge == EdgeMode::clamp) return f[0];
        if (edge == EdgeMode::zero) return 0.0;
        return f[0] + (t * dx) * (f[1] - f[0]) / dx;
    }
    if (t >= n - 1) {
        if (edge == EdgeMode::clamp) return f[n - 1];
        if (edge == EdgeMode::zero) return 0.0;
        return f[n - 1] + (x - (x0 + (n - 1) * dx)) * (f[n - 1] - f[n - 2]) / dx;
    }
    int i = static_cast<int>(t);
    i = std::clamp(i, 1, n - 3);
    const double u = t - i;
    const double fm1 = f[i - 1], f0 = f[i], f1 = f[i + 1], f2 = f[i + 2];
    // Lagrange cubic through (-1,0,1,2).
    const double c0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    const double c1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    const double c2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    const double c3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    return c0 * fm1 + c1 * f0 + c2 * f1 + c3 * f2;
}

inline double grid_read(const std::vector<double>& f, const UniformGrid& g, double x,
                        EdgeMode edge) {
    return cubic_read(f.data(), g.size(), g.x0(), g.dx(), x, edge);
}

inline double log_cosh(double x) {
    double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094;
}

// Two-sided Gaussian tail mass beyond distance d at scale sigma.
inline double gaussian_escape_mass(double d, double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::erfc(d / (sigma * 1.4142135623730950488));
}

inline double trapezoid(const std::vector<double>& f, double dx) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) acc += 0.5 * (f[i] + f[i + 1]);
    return acc * dx;
}

}  // namespace parisi
