#include "parisi/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace parisi {
namespace {

// Roots and weights of the physicists' Hermite polynomial H_n via Newton
// iteration on the orthonormal recurrence, largest root first.
GaussHermite build(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    const double pim4 = 0.75112554446494248286;  // pi^{-1/4}
    std::vector<double> x(n), w(n);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[i - 2];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 120; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1) x[m - 1] = 0.0;

    GaussHermite q;
    q.z.resize(n);
    q.w.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    for (int i = 0; i < n; ++i) {
        q.z[i] = x[i] * 1.4142135623730950488;  // sqrt(2): weight e^{-x^2} -> N(0,1)
        q.w[i] = w[i] / total;                  // exact E[1] = 1
    }
    return q;
}

}  // namespace

const GaussHermite& gauss_hermite(int order) {
    static std::mutex mu;
    static std::map<int, GaussHermite> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build(order)).first;
    return it->second;
}

}  // namespace parisi
