#pragma once

#include <vector>

#include "parisi/grid.hpp"
#include "parisi/measure.hpp"
#include "parisi/mixture.hpp"

namespace parisi {

inline constexpr double kMFloor = 1e-8;        // below this, Hopf-Cole -> plain expectation
inline constexpr double kEscapeMassTol = 1e-8; // grid gate, ~5.7 sigma two-sided

struct PhiSlice {
    double s = 0.0;
    double m = 0.0;  // alpha on the segment starting at this node
    std::vector<double> phi, dphi, ddphi;
};

// Backward solution of
//   d_s Phi = -(xi''/2)(d_xx Phi + alpha (d_x Phi)^2),  Phi(1,x) = log cosh x,
// for an atomic measure, advanced across each constant-alpha segment by the
// exponential-moment (Hopf-Cole) recursion with Gauss-Hermite quadrature.
// Slices are stored at the s-nodes (atoms plus {0,1}); interior slices are
// reconstructed exactly on demand with a partial-variance step.
class PhiSolution {
  public:
    MixtureSpec mixture;
    AtomicMeasure measure;
    double h = 0.0;
    GridParams params;
    UniformGrid grid;
    std::vector<double> nodes;     // ascending, nodes.front()=0, nodes.back()=1
    std::vector<PhiSlice> slices;  // one per node

    PhiSolution(MixtureSpec mix, AtomicMeasure mu, double h_, GridParams p);

    int segment_of(double r) const;         // j with nodes[j] <= r < nodes[j+1]
    double segment_alpha(int j) const { return slices[j].m; }
    PhiSlice slice_at(double r) const;      // exact within-segment reconstruction

    double value_at0(double x) const;       // Phi(0, x)
    double dvalue_at0(double x) const;      // d_x Phi(0, x)
};

PhiSolution solve_phi(const AtomicMeasure& measure, const MixtureSpec& mixture, double h,
                      const GridParams& grid);

// Explicit central-difference reference integrator of the same PDE; slices
// at the s-nodes, derivatives by differencing. Cross-validation oracle.
PhiSolution solve_phi_fd(const AtomicMeasure& measure, const MixtureSpec& mixture, double h,
                         const GridParams& grid, double dt);

// Phi_{delta_q}(s, x) in closed form:
//   s >= q : (1/2)(xi'(1)-xi'(s)) + log cosh x
//   s <  q : (1/2)(xi'(1)-xi'(q)) + E log cosh(x + z sqrt(xi'(q)-xi'(s)))
double rs_closed_form(double q, const MixtureSpec& mixture, double h, double s, double x,
                      int quad_order = 80);

// P(mu) = log 2 + Phi(0,h) - (1/2) int_0^1 alpha(s) s xi''(s) ds, the integral
// in closed form via theta(s) = s xi'(s) - xi(s).
double parisi_functional(const AtomicMeasure& measure, const MixtureSpec& mixture, double h,
                         const GridParams& grid);
double parisi_functional(const PhiSolution& phi);

// s-nodes of a measure: atoms together with {0, 1} (and any extras), sorted.
std::vector<double> measure_nodes(const AtomicMeasure& measure,
                                  const std::vector<double>& extra = {});

}  // namespace parisi
