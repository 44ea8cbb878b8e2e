#pragma once

#include <map>
#include <memory>

#include "hilbex/interior.hpp"
#include "hilbex/knudsen.hpp"
#include "hilbex/layer.hpp"

namespace hilbex {

struct Tolerances {
  double tol_quad = 1e-6;
  double tol_solve = 1e-10;
  double tol_bc = 1e-10;
  double tol_match = 1e-6;
  double tol_solvability = 1e-6;
  double tol_far = 1e-6;
  double blowup_ceiling = 1e3;
};

struct ExpansionConfig {
  int orders = 2;        // N, 1..3 at desk scale
  int taylor_order = 2;  // wall Taylor depth feeding the layer hierarchies
  std::vector<double> epsilons = {0.1, 0.05, 0.025};
  double delta = 0.2;
  double horizon = 0.4;

  double velocity_radius = 7.0;
  int velocity_n = 16;
  GridScheme scheme = GridScheme::UniformTensor;
  CollisionBackend backend;

  SpatialGridSpec spatial;

  double y_max = 24.0;
  int y_cells = 240;
  double y_grading = 1.015;
  double weight_l = 3.0;

  double eta_max = 30.0;
  int eta_cells = 280;
  double eta_grading = 1.01;
  double kappa_w = 3.0;
  double a_frak = 0.3;
  KnudsenOptions knudsen;

  Tolerances tol;
  int collar_cells = 2;
  int threads = 1;
  bool layer_init_match_neumann = true;  // construct a compatible layer start

  void validate() const;
};

// One expansion order: interior fields, viscous-layer fields with the derived
// quantities, boundary matching data, and the Knudsen solutions (solved
// per time step on demand).
struct OrderBundle {
  int k = 0;
  HyperbolicSolution interior;
  std::vector<double> d_k;  // interior wall datum per step

  LayerSolution layer;               // (ubar_par, thetabar)
  Trajectory<double> rho_bar;        // layer density via the pressure combination
  Trajectory<double> u3_bar;         // ubar_{k,3}
  Trajectory<double> p_bar;          // pbar_k
  std::vector<NeumannData> neumann;  // per step
  double normal_velocity_tail = 0.0;

  SolvabilityReport ghat_report;  // solvability of the wall mismatch datum
  bool knudsen_trivial = true;    // fhat_k identically zero
  mutable std::map<int, std::shared_ptr<KnudsenSolution>> knudsen_cache;
};

struct ResidualReport {
  double eps = 0.0;
  double l2_defect = 0.0;
  double sup_defect = 0.0;
  double positivity_min = 0.0;
  double composite_wall_mismatch = 0.0;
  std::vector<double> per_order_mismatch;     // sup over sampled steps, index k-1
  std::array<double, 4> ghat2_moments{};      // order-2 solvability moments
  nlohmann::json to_json() const;
};

struct DefectSweep {
  std::vector<ResidualReport> reports;
  SlopeFit slope;
  nlohmann::json to_json() const;
};

class ExpansionPipeline {
 public:
  explicit ExpansionPipeline(const ExpansionConfig& cfg, const EulerInit& init);

  void build();  // euler + orders 1..N

  const ExpansionConfig& config() const { return cfg_; }
  const VelocityGrid& grid() const { return *grid_; }
  const EulerSolution& euler() const { return euler_; }
  const LayerGrid& layer_grid() const { return ygrid_; }
  const LayerGrid& eta_grid() const { return etagrid_; }
  int steps() const { return euler_.steps(); }
  const OrderBundle& order(int k) const { return bundles_.at(k - 1); }

  // wall-state collision operator at a step (cached)
  const CollisionOperator& wall_op(int step) const;

  // taylor wall coefficient of an interior scalar field: one-sided l-th
  // derivative at x3 = 0, with a Richardson coarse-stencil verification
  struct TaylorCoeff {
    double value = 0.0;
    double richardson_rel_diff = 0.0;
    bool noisy = false;
  };
  static TaylorCoeff taylor_wall_coeff(const std::vector<double>& nodes,
                                       const std::vector<double>& values, int l);

  // slices of expansion constituents at a time step
  Eigen::ArrayXd interior_f_slice(int k, int step, double x3) const;   // f_k
  Eigen::ArrayXd interior_micro_slice(int k, int step, double x3) const;
  Eigen::ArrayXd layer_f_slice(int k, int step, double y) const;       // fbar_k
  Eigen::ArrayXd layer_micro_slice(int k, int step, double y) const;   // (I-P0) fbar_k
  Eigen::ArrayXd knudsen_f_slice(int k, int step, double eta) const;   // fhat_k

  const KnudsenSolution* knudsen_solution(int k, int step) const;

  // wall sum f_k + fbar_k + fhat_k at a step (for mismatch checks)
  Eigen::ArrayXd wall_triple_slice(int k, int step) const;
  double order_specular_mismatch(int k, int step) const;

  // composite and defect
  Eigen::ArrayXd composite_slice(double eps, int step, double x3) const;
  Eigen::ArrayXd composite_d3_slice(double eps, int step, double x3) const;
  ResidualReport evaluate_defect(double eps) const;
  DefectSweep defect_sweep() const;

  // J_bar_1 and related internals exposed for tests
  Eigen::ArrayXd jbar1_slice(int step, double y) const;

 private:
  void build_order_1();
  void build_order_2();
  void build_order_3();

  struct LayerStepCache;
  std::shared_ptr<LayerStepCache> build_layer_step_cache(int step) const;
  const LayerStepCache& layer_cache(int step) const;

  LayerCoefficients base_layer_coeffs(const std::vector<NeumannData>& neumann,
                                      bool match_init) const;
  void finish_layer_density(OrderBundle& b) const;
  Eigen::ArrayXd layer_macro_slice(int k, int step, double y) const;
  Eigen::ArrayXd layer_micro_slice_raw(const CollisionOperator& op, const LayerStepCache& cache,
                                       int k, int step, int ynode) const;
  Eigen::ArrayXd layer_node_macro(const MacroProjector& proj, int k, int step, int ynode) const;
  Eigen::ArrayXd jbar1_slice_raw(const CollisionOperator& op, int step, int ynode,
                                 const LayerStepCache& cache) const;
  Eigen::ArrayXd d33mu_slice(int step) const;
  Eigen::ArrayXd d3F1_wall_slice(const MacroProjector& proj, int step) const;
  Eigen::ArrayXd dlog_mu(const FluidPoint& s, const FluidPoint& d) const;
  FluidPoint wall_state_dot_(int step) const;
  Eigen::ArrayXd ghat_slice(int k, int step) const;
  Eigen::ArrayXd interior_constituent_d3(int k, int step, double x3) const;

  ExpansionConfig cfg_;
  EulerInit init_;
  std::shared_ptr<VelocityGrid> grid_;
  LayerGrid ygrid_, etagrid_;
  EulerSolution euler_;
  std::vector<OrderBundle> bundles_;
  std::vector<double> wall_mu_, wall_kappa_;

  mutable std::map<int, std::shared_ptr<CollisionOperator>> wall_ops_;
  mutable std::map<int, std::shared_ptr<LayerStepCache>> layer_caches_;
};

// Monitored L2/sup norms of G^eps - G for the acoustic-limit comparison.
struct AcousticGapReport {
  std::vector<double> deltas;
  std::vector<double> fluid_gap;    // sup-norm fluid-level gap per delta
  std::vector<double> kinetic_gap;  // L2 kinetic fluctuation gap per delta (eps = delta^2)
  SlopeFit fluid_slope;
  SlopeFit kinetic_slope;
  nlohmann::json to_json() const;
};

AcousticGapReport acoustic_gap_study(const ExpansionConfig& base, const EulerInit& init,
                                     const std::vector<double>& deltas, bool kinetic);

}  // namespace hilbex
