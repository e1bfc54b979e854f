#pragma once

#include <cstdint>
#include <utility>

#include "parisi/flows.hpp"

namespace parisi {

// Minimize P over measures with at most k+1 atoms. The feasible set
// {0 <= q_1 <= ... <= q_{k+1} <= 1, a_i >= 0, sum a_i = 1} is mapped to an
// unconstrained cube (stick-breaking logistics for the sorted atoms, softmax
// for the weights) and searched with seeded Nelder-Mead restarts.
std::pair<AtomicMeasure, double> minimize_krsb(const MixtureSpec& mixture, double h, int k,
                                               int restarts, std::uint64_t seed,
                                               const GridParams& grid);

struct ParisiEstimate {
    AtomicMeasure measure;
    double value = 0.0;
    int k_used = 0;
    CriterionReport criterion;
    double eta = 0.0;                  // smallest atom with weight > 1e-6
    std::vector<double> history;       // best value per level k = 0,1,...
    bool conclusive = false;           // false when k_max was exhausted
};

struct EscalationParams {
    int restarts = 8;
    int q_grid_n = 41;
    FlowParams flow;
};

// Level escalation: starting from k=0, stop at the first k where the next
// level improves by less than improve_tol and the Dirac-probe criterion
// passes. Exhausting k_max yields an inconclusive (not failed) estimate.
ParisiEstimate find_parisi_measure(const MixtureSpec& mixture, double h, int k_max,
                                   double improve_tol, std::uint64_t seed,
                                   const GridParams& grid, const EscalationParams& params = {});

}  // namespace parisi
