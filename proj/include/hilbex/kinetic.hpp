#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>

#include "hilbex/velocity_grid.hpp"

namespace hilbex {

struct FluidPoint {
  double rho = 1.0;
  Vec3 u{0.0, 0.0, 0.0};
  double T = 1.0;

  void validate() const;
  double pressure() const { return rho * T; }
};

// Distribution values over the nodes of one VelocityGrid.
struct KineticSlice {
  Eigen::ArrayXd values;
  std::uint64_t grid_id = 0;

  KineticSlice() = default;
  KineticSlice(const VelocityGrid& g, double fill = 0.0)
      : values(Eigen::ArrayXd::Constant(g.size(), fill)), grid_id(g.id()) {}
  KineticSlice(const VelocityGrid& g, Eigen::ArrayXd v) : values(std::move(v)), grid_id(g.id()) {}
};

void require_on_grid(const KineticSlice& f, const VelocityGrid& g);

struct MomentVector {
  double mass = 0.0;
  Vec3 momentum{0.0, 0.0, 0.0};
  double energy = 0.0;  // quadrature of f * |v|^2 / 2
};

KineticSlice maxwellian(const FluidPoint& state, const VelocityGrid& grid);
MomentVector moments(const KineticSlice& f, const VelocityGrid& grid);

// Specular image f(v1,v2,-v3); exact node permutation, an involution.
KineticSlice reflect_v3(const KineticSlice& f, const VelocityGrid& grid);

// Orthonormal basis chi_0..chi_4 of the collision-invariant space at `state`,
// re-orthonormalized under the grid quadrature so P is an exact projection.
class MacroProjector {
 public:
  MacroProjector(const FluidPoint& state, const VelocityGrid& grid);

  const FluidPoint& state() const { return state_; }
  const VelocityGrid& grid() const { return *grid_; }
  const Eigen::ArrayXd& chi(int i) const { return chi_[i]; }
  const Eigen::ArrayXd& sqrt_mu() const { return sqrt_mu_; }

  std::array<double, 5> coefficients(const Eigen::ArrayXd& g) const;
  Eigen::ArrayXd apply(const Eigen::ArrayXd& g) const;   // P g
  Eigen::ArrayXd micro(const Eigen::ArrayXd& g) const;   // (I - P) g
  double macro_norm(const Eigen::ArrayXd& g) const;      // ||P g||

  // Macroscopic slice from hydrodynamic perturbation parameters, eq. style
  //   {a/rho + b.(v-u)/T + c/(6T)(|v-u|^2/T - 3)} sqrt(mu).
  Eigen::ArrayXd hydrodynamic_slice(double a, const Vec3& b, double c) const;

  // (I - P)[(P g . P h) / sqrt(mu)]: the closure of the symmetrized bilinear
  // collision term on macroscopic arguments.
  Eigen::ArrayXd pair_macro(const Eigen::ArrayXd& g, const Eigen::ArrayXd& h) const;

 private:
  FluidPoint state_;
  const VelocityGrid* grid_;
  std::array<Eigen::ArrayXd, 5> chi_;
  Eigen::ArrayXd sqrt_mu_;
};

struct BurnettTensors {
  // A[i][j] and B[i] as slices; A symmetric and pointwise traceless.
  std::array<std::array<Eigen::ArrayXd, 3>, 3> A;
  std::array<Eigen::ArrayXd, 3> B;
};

BurnettTensors burnett(const FluidPoint& state, const VelocityGrid& grid);

// Maxwellian slice whose *discrete* moments match the given targets,
// found by Newton iteration on (rho, u, T). Targets use raw second moment
// m2 = quadrature of f |v|^2.
struct MatchedMaxwellian {
  FluidPoint state;
  Eigen::ArrayXd values;
};
std::optional<MatchedMaxwellian> match_maxwellian(const VelocityGrid& grid, double m0,
                                                  const Vec3& m1, double m2,
                                                  const FluidPoint& guess);

}  // namespace hilbex
