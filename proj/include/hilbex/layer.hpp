#pragma once

#include <functional>

#include "hilbex/collision.hpp"
#include "hilbex/fluid.hpp"

namespace hilbex {

// Node mesh in the stretched coordinate y = x3 / eps, graded toward the wall.
struct LayerGrid {
  std::vector<double> y;
  static LayerGrid graded(double y_max, int cells, double ratio);
  int nodes() const { return static_cast<int>(y.size()); }
  double y_max() const { return y.back(); }
};

// Coefficients of the drift-diffusion system for (u1bar, u2bar, thetabar):
//   rho0 dt X_c + rho0 (drift_slope y + drift_const) dy X_c
//     + rho0 sum_d R_cd X_d = D_c dyy X_c + S_c,
// with D = (mu, mu, 3 kappa / 5), Neumann data at y=0 and X(y_max) = 0.
struct LayerCoefficients {
  std::function<double(double)> rho0;
  std::function<double(double)> mu;
  std::function<double(double)> kappa;
  std::function<double(double)> drift_slope;
  std::function<double(double)> drift_const;
  std::function<std::array<std::array<double, 3>, 3>(double)> reaction;
  std::function<double(double, double, int)> source;   // (t, y, c)
  std::function<std::array<double, 3>(double)> neumann; // (b1, b2, a)(t)
  std::function<double(double, int)> init;              // (y, c)
  // when set, the solver builds a decaying start whose discrete wall
  // derivative matches the t=0 Neumann datum exactly (ignores `init`)
  bool construct_compatible_init = false;
};

struct LayerSolution {
  std::vector<double> y;
  double dt = 0.0;
  std::vector<double> times;
  Trajectory<double> u1, u2, th;
  // max over t of the weighted norm ratio against data norms (stability monitor)
  double stability_C = 0.0;
  double weight_l = 3.0;
  bool weighted_norm_warning = false;
};

LayerSolution solve_layer_parabolic(const LayerCoefficients& coeffs, const LayerGrid& grid,
                                    double dt, int steps, double weight_l = 3.0,
                                    double compat_tol = 1e-6,
                                    double weighted_norm_ceiling = 1e8);

struct NeumannData {
  double b1 = 0.0, b2 = 0.0, a = 0.0;
};

// Wall expressions (2-tangential shear + heat) closing the order-(k-1) layer
// boundary conditions from the interior microscopic part, the layer source
// slice at the wall, and the Knudsen correction trace.
struct MatchingInputs {
  FluidPoint wall_state;
  double mu = 0.0, kappa = 0.0;
  Eigen::ArrayXd micro_fk_wall;               // (I-P0) f_k at y=0
  const Eigen::ArrayXd* jbar_wall = nullptr;  // J_{k-2} at y=0, nullable
  double jA_wall[2] = {0.0, 0.0};             // precomputed <A_{3i}, J_{k-2}(0)>
  double jB_wall = 0.0;                       // precomputed <B_3, J_{k-2}(0)>
  Vec3 u1_plus_ubar1_wall{0, 0, 0};           // (u_{1,i} + ubar_{1,i})(0)
  double ubar_km1_3_wall = 0.0;               // ubar_{k-1,3}(0)
  double theta1_plus_thbar1_wall = 0.0;       // (theta_1 + thetabar_1)(0)
  double Bhat_k[2] = {0.0, 0.0};
  double Chat_k = 0.0;
};

NeumannData neumann_from_matching(const MatchingInputs& in, const VelocityGrid& grid);

// ubar_{k+1,3}(y) = -int_y^inf (1/rho0) { dt rhobar_k + divpar(...) } dz.
// The integrand is supplied per (step, node); an algebraic tail fitted on the
// last decade of nodes extends the quadrature beyond y_max.
struct NormalVelocityResult {
  Trajectory<double> u3;       // (step, node)
  double tail_estimate = 0.0;  // magnitude of the fitted tail correction
  bool tail_warning = false;
};
NormalVelocityResult derive_normal_velocity(const LayerGrid& grid,
                                            const Trajectory<double>& integrand,
                                            double tol_far = 1e-6);

// pbar_{k+1}(y) = -int_y^{ymax} rhs dz with pbar(y_max) = 0.
Trajectory<double> derive_pressure(const LayerGrid& grid, const Trajectory<double>& rhs);

// Weighted L^2_l norm of the layer unknowns at one step.
double layer_weighted_norm(const LayerGrid& grid, const LayerSolution& sol, int step, double l);

}  // namespace hilbex
