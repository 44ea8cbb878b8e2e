#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "hilbex/kinetic.hpp"

namespace hilbex {

enum class BackendKind { BgkModel, HardSphereQuad };

struct NuParams {
  enum class Type { Constant, Affine } type = Type::Constant;
  double value = 1.0;  // nu_bar for constant, c0 for affine nu(v) = c0 (1 + |v|)
};

struct CollisionBackend {
  BackendKind kind = BackendKind::BgkModel;
  NuParams nu;
  int angular_polar = 8;
  int angular_azimuth = 16;

  nlohmann::json to_json() const;
  static CollisionBackend from_json(const nlohmann::json& j);
};

double collision_freq(const Vec3& v, const FluidPoint& state, const CollisionBackend& backend);

struct InvertReport {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = true;
};

// The linearized collision operator bound to one fluid state and grid.
//
// bgk-model: L = (I-P) nu (I-P); for constant nu this is nu (I-P) exactly.
// hard-sphere-quad: L_raw = nu - K with the closed-form hard-sphere kernels,
// diagonal absorption so L_raw sqrt(mu) = 0 per node, then exposed as
// (I-P) L_raw (I-P) so the null space and self-adjointness are exact on the
// grid. The pre-projection defect on the chi basis is kept as a fidelity
// diagnostic.
class CollisionOperator {
 public:
  CollisionOperator(const CollisionBackend& backend, const FluidPoint& state,
                    const VelocityGrid& grid, int threads = 0);

  const MacroProjector& projector() const { return proj_; }
  const VelocityGrid& grid() const { return *grid_; }
  const FluidPoint& state() const { return state_; }
  const CollisionBackend& backend() const { return backend_; }

  const Eigen::ArrayXd& nu() const { return nu_; }
  double nu_min() const { return nu_min_; }

  Eigen::ArrayXd apply(const Eigen::ArrayXd& g) const;
  // Solve L h = g on the microscopic subspace. Rejects non-microscopic input
  // (measured ||P g|| attached to the exception).
  Eigen::ArrayXd invert(const Eigen::ArrayXd& g, InvertReport* report = nullptr,
                        double tol_solve = 1e-10, int max_iter = 500) const;

  double recorded_tol_L() const { return tol_L_; }
  double raw_null_defect() const { return raw_defect_; }
  bool has_direct_inverse() const {
    return backend_.kind == BackendKind::BgkModel && backend_.nu.type == NuParams::Type::Constant;
  }

  // ||g||_nu^2 = quadrature of nu g^2.
  double nu_norm2(const Eigen::ArrayXd& g) const;

 private:
  Eigen::ArrayXd apply_raw(const Eigen::ArrayXd& g) const;

  CollisionBackend backend_;
  FluidPoint state_;
  const VelocityGrid* grid_;
  MacroProjector proj_;
  Eigen::ArrayXd nu_;
  double nu_min_ = 0.0;
  double tol_L_ = 0.0;
  double raw_defect_ = 0.0;
  std::shared_ptr<Eigen::MatrixXd> kernel_;  // hard-sphere only
};

struct TransportCoeffs {
  double mu = 0.0;
  double kappa = 0.0;
};

TransportCoeffs transport_coeffs(const CollisionOperator& op);

// Quadratic bgk exchange model nu (M[F] - F) with the Maxwellian matched to
// the *discrete* moments of F, so the collision invariants vanish to machine
// precision. Used for Q(F, F) on the bgk backend.
KineticSlice q_model_bgk(const KineticSlice& F, double nu_bar, const VelocityGrid& grid);

// Discrete bilinear collision form. Hard-sphere: tensor quadrature over
// u-nodes x angular nodes with a moment-exact conservative correction; truly
// bilinear. bgk: symmetrized kinetic-model surrogate whose diagonal is
// q_model_bgk.
KineticSlice q_bilinear(const KineticSlice& F1, const KineticSlice& F2,
                        const CollisionBackend& backend, const VelocityGrid& grid,
                        int threads = 0);

}  // namespace hilbex
