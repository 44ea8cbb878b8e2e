#pragma once

#include <functional>

#include "hilbex/collision.hpp"
#include "hilbex/fluid.hpp"
#include "hilbex/layer.hpp"

namespace hilbex {

// Steady half-space transport problem v3 d_eta f + L0 f = S with perturbed
// specular reflection at eta = 0 and decay at infinity; (t, x_par) enter only
// through the wall state and data.
struct HalfSpaceProblem {
  FluidPoint wall_state;
  LayerGrid eta;                                   // nodes on [0, eta_max]
  std::function<Eigen::ArrayXd(double)> source;    // S(eta) slice; null = zero
  Eigen::ArrayXd f_b;                              // supported on v3 < 0
  double zeta0 = 1.0;                              // declared source decay rate
  double kappa_w = 3.0;                            // weight w_kappa exponent
  double a_frak = 0.3;                             // mu_0^{-a} weight exponent
};

struct SolvabilityReport {
  double micro_defect = 0.0;        // max_eta ||P0 S||
  std::array<double, 4> moments{};  // mass-flux, two shear, heat-flux of f_b
  double tol = 1e-6;
  bool pass = false;
};

SolvabilityReport check_solvability(const HalfSpaceProblem& problem, const VelocityGrid& grid,
                                    double tol_solvability = 1e-6);

struct KnudsenOptions {
  double tol_solve = 1e-8;
  int max_iter = 2500;
  bool allow_anderson = true;
  // depth 2 stalls on optically thick conservative problems; 5 converges
  int anderson_depth = 5;
  // diagnostic mode: drop the collision gain so the transport sweep can be
  // checked against the closed-form characteristic integral
  bool pure_absorption = false;
};

struct KnudsenSolution {
  std::vector<double> eta;
  Trajectory<double> f;  // (eta node, velocity node)
  double zeta = 0.0;     // fitted exponential decay rate of the weighted profile
  double residual = 0.0; // final sweep update in the weighted sup norm,
                         // relative to the weighted solution scale
  int iterations = 0;
  bool converged = false;
  double wall_relation_defect = 0.0;
  std::vector<double> profile;  // weighted sup over v per eta node

  Eigen::ArrayXd slice(int eta_node) const {
    Eigen::ArrayXd out(f.nodes);
    for (int i = 0; i < f.nodes; ++i) out[i] = f.at(eta_node, i);
    return out;
  }
};

KnudsenSolution solve_halfspace(const HalfSpaceProblem& problem, const CollisionOperator& op,
                                const KnudsenOptions& opt = {},
                                const Trajectory<double>* warm_start = nullptr);

// Correction of the macroscopic source part (the explicit tail-integral
// construction): given S_{k,1} coefficients (a, b, c)(eta) against
// {1, v-u0, |v-u0|^2} sqrt(mu0), produces the odd field f_{k,1} whose
// transport defect against S_{k,1} is microscopic.
struct CorrectionFields {
  std::vector<double> eta;
  std::vector<double> A;                  // A_hat
  std::array<std::vector<double>, 3> B;   // B_hat
  std::vector<double> C;                  // C_hat
  FluidPoint wall_state;

  Eigen::ArrayXd fhat_slice(int eta_node, const VelocityGrid& grid) const;
  // v3 d_eta fhat_{k,1} - S_{k,1} at a node (the Lemma-style defect)
  Eigen::ArrayXd defect_slice(int eta_node, const VelocityGrid& grid) const;

  // stored coefficient samples for the defect evaluation
  std::vector<double> a_s;
  std::array<std::vector<double>, 3> b_s;
  std::vector<double> c_s;
};

CorrectionFields build_correction(const FluidPoint& wall_state, const LayerGrid& eta,
                                  const std::function<double(double)>& a_hat,
                                  const std::array<std::function<double(double)>, 3>& b_hat,
                                  const std::function<double(double)>& c_hat);

// Split source for order k <= 3 of the pipeline (fhat_1 = 0): S_k = S_{k,1} +
// S_{k,2} with S_{k,1} in N_0 and S_{k,2} orthogonal to it. Identities
// S_1 = S_2 = 0 and S_{3,1} = 0 hold by construction.
struct KnudsenSourceSplit {
  bool zero = true;
  std::function<Eigen::ArrayXd(double)> S1;  // macroscopic part
  std::function<Eigen::ArrayXd(double)> S2;  // microscopic part
};

KnudsenSourceSplit assemble_knudsen_source(int order, const CollisionOperator& wall_op,
                                           const Eigen::ArrayXd& macro_wall_sum,
                                           const KnudsenSolution* fhat2);

// Specular mismatch datum (2-sided difference restricted to v3 < 0).
Eigen::ArrayXd boundary_mismatch(const Eigen::ArrayXd& wall_sum, const VelocityGrid& grid);

// Weight w_kappa(v) mu_0(v)^{-a} used for the convergence norms and profiles.
Eigen::ArrayXd knudsen_weight(const FluidPoint& wall_state, const VelocityGrid& grid,
                              double kappa_w, double a_frak);

}  // namespace hilbex
