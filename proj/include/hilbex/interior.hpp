#pragma once

#include "hilbex/collision.hpp"
#include "hilbex/fluid.hpp"

namespace hilbex {

// Sampling helpers on node-based trajectories (4-point Lagrange in x3,
// centered differences in t).
double sample_field(const std::vector<double>& nodes, const Trajectory<double>& f, int step,
                    double x);
double sample_field_d3(const std::vector<double>& nodes, const Trajectory<double>& f, int step,
                       double x);
double sample_field_dt(const std::vector<double>& nodes, const Trajectory<double>& f, int step,
                       double x, double dt);

// Local Euler state with PDE-consistent time derivatives; the time column of
// (rho, u, T) is eliminated through the Euler system so the construction
// matches the order-by-order algebra.
struct LocalEuler {
  FluidPoint s;
  FluidPoint d3;  // component-wise x3 derivatives
  FluidPoint dt;  // component-wise time derivatives from the PDE
};
LocalEuler local_euler(const EulerSolution& euler, int step, double x3);

// slice of (d mu / sqrt(mu)) for given component-wise derivatives of the state
Eigen::ArrayXd dmu_over_sqrt_mu(const FluidPoint& s, const FluidPoint& d,
                                const VelocityGrid& grid);

// Interior macroscopic fields of one order on the linear-solver nodes.
struct InteriorOrderFields {
  std::vector<double> nodes;
  double dt = 0.0;
  std::vector<double> times;
  Trajectory<double> rho, u1, u2, u3, theta;

  FluidPoint perturbation(int step, double x) const {
    return FluidPoint{sample_field(nodes, rho, step, x) + 1.0,  // placeholder, not used as state
                      {0, 0, 0},
                      1.0};
  }
};

// Builds (I-P) f_2 at one space-time point, generic route: chain-rule
// derivative of the local Maxwellian plus the macroscopic pair closure of the
// quadratic term.
Eigen::ArrayXd micro_f2_slice(const EulerSolution& euler, const HyperbolicSolution& order1,
                              const CollisionOperator& op, int step, double x3);

// Direct evaluation of the explicit first-order formula (Burnett expansion of
// the Maxwellian stream derivative + the closed-form quadratic part); the
// independent route for cross-checking the generic one.
Eigen::ArrayXd micro_f2_slice_direct(const EulerSolution& euler, const HyperbolicSolution& order1,
                                     const CollisionOperator& op, int step, double x3);

// (I-P) f_3 at one point: stream derivative of F_1 plus the pair closure of
// the (f_1, f_2) coupling. Needs order-1 and order-2 macroscopic fields.
Eigen::ArrayXd micro_f3_slice(const EulerSolution& euler, const HyperbolicSolution& order1,
                              const HyperbolicSolution& order2, const CollisionOperator& op,
                              int step, double x3);

// Hydrodynamic slice of an interior order at a point: {rho_k, u_k, theta_k}
// paired through the local Maxwellian basis.
Eigen::ArrayXd interior_macro_slice(const MacroProjector& proj, const HyperbolicSolution& order,
                                    int step, double x3);

// Burnett-moment source fields feeding the next interior order: the
// quadratures of (I-P) f_{k+1} against T A_{i3} and 2 T^{3/2} B_3 on the
// solver nodes, differentiated in x3.
struct InteriorSources {
  std::vector<double> nodes;
  double dt = 0.0;
  Trajectory<double> f1, f2, f3, g;  // momentum and energy sources per (step, node)

  double sample_f(double t, double x, int i) const;
  double sample_g(double t, double x) const;
};

InteriorSources build_interior_sources(const EulerSolution& euler,
                                       const HyperbolicSolution& order1,
                                       const CollisionBackend& backend, const VelocityGrid& grid,
                                       int threads = 0);

}  // namespace hilbex
