#pragma once

#include <vector>

namespace parisi {

// Gauss-Hermite rule recast for standard-normal expectations:
// E f(z) ~= sum_i w[i] f(z[i]) with z ~ N(0,1), weights normalized to sum 1.
struct GaussHermite {
    std::vector<double> z;
    std::vector<double> w;

    template <class F>
    double expect(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) acc += w[i] * f(z[i]);
        return acc;
    }
};

// Shared, cached rules; thread-safe.
const GaussHermite& gauss_hermite(int order);

}  // namespace parisi
