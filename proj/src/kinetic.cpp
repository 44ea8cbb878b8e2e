#include "hilbex/kinetic.hpp"

#include <cmath>
#include <stdexcept>

namespace hilbex {

void FluidPoint::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("FluidPoint: rho must be > 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("FluidPoint: T must be > 0");
  for (double c : u)
    if (!std::isfinite(c)) throw std::invalid_argument("FluidPoint: velocity must be finite");
}

void require_on_grid(const KineticSlice& f, const VelocityGrid& g) {
  if (f.grid_id != g.id() || f.values.size() != g.size())
    throw std::invalid_argument("kinetic slice does not live on the given velocity grid");
}

KineticSlice maxwellian(const FluidPoint& state, const VelocityGrid& grid) {
  state.validate();
  const double c = state.rho * std::pow(2.0 * M_PI * state.T, -1.5);
  const double inv2T = 0.5 / state.T;
  Eigen::ArrayXd v(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& n = grid.node(i);
    const double dx = n[0] - state.u[0], dy = n[1] - state.u[1], dz = n[2] - state.u[2];
    v[i] = c * safe_exp(-(dx * dx + dy * dy + dz * dz) * inv2T);
  }
  return KineticSlice(grid, std::move(v));
}

MomentVector moments(const KineticSlice& f, const VelocityGrid& grid) {
  require_on_grid(f, grid);
  MomentVector m;
  for (int i = 0; i < grid.size(); ++i) {
    const double wf = grid.weight(i) * f.values[i];
    const Vec3& n = grid.node(i);
    m.mass += wf;
    m.momentum[0] += wf * n[0];
    m.momentum[1] += wf * n[1];
    m.momentum[2] += wf * n[2];
    m.energy += 0.5 * wf * norm2_3(n);
  }
  return m;
}

KineticSlice reflect_v3(const KineticSlice& f, const VelocityGrid& grid) {
  require_on_grid(f, grid);
  KineticSlice out(grid);
  for (int i = 0; i < grid.size(); ++i) out.values[i] = f.values[grid.reflect_v3(i)];
  return out;
}

MacroProjector::MacroProjector(const FluidPoint& state, const VelocityGrid& grid)
    : state_(state), grid_(&grid) {
  state.validate();
  sqrt_mu_ = maxwellian(state, grid).values.sqrt();
  const double rho = state.rho, T = state.T;
  Eigen::ArrayXd w2(grid.size());
  std::array<Eigen::ArrayXd, 3> w;
  for (int d = 0; d < 3; ++d) w[d].resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& n = grid.node(i);
    w[0][i] = n[0] - state.u[0];
    w[1][i] = n[1] - state.u[1];
    w[2][i] = n[2] - state.u[2];
    w2[i] = w[0][i] * w[0][i] + w[1][i] * w[1][i] + w[2][i] * w[2][i];
  }
  chi_[0] = sqrt_mu_ / std::sqrt(rho);
  for (int d = 0; d < 3; ++d) chi_[1 + d] = w[d] * sqrt_mu_ / std::sqrt(rho * T);
  chi_[4] = (w2 / T - 3.0) * sqrt_mu_ / std::sqrt(6.0 * rho);

  // Discrete re-orthonormalization (two MGS passes). The analytic basis is
  // orthonormal only up to quadrature error; this makes P an exact projection
  // on the grid.
  for (int pass = 0; pass < 2; ++pass)
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < i; ++j) chi_[i] -= grid.inner(chi_[i], chi_[j]) * chi_[j];
      chi_[i] /= grid.norm(chi_[i]);
    }
}

std::array<double, 5> MacroProjector::coefficients(const Eigen::ArrayXd& g) const {
  std::array<double, 5> c;
  for (int i = 0; i < 5; ++i) c[i] = grid_->inner(g, chi_[i]);
  return c;
}

Eigen::ArrayXd MacroProjector::apply(const Eigen::ArrayXd& g) const {
  const auto c = coefficients(g);
  Eigen::ArrayXd out = c[0] * chi_[0];
  for (int i = 1; i < 5; ++i) out += c[i] * chi_[i];
  return out;
}

Eigen::ArrayXd MacroProjector::micro(const Eigen::ArrayXd& g) const { return g - apply(g); }

double MacroProjector::macro_norm(const Eigen::ArrayXd& g) const {
  const auto c = coefficients(g);
  double s = 0.0;
  for (double ci : c) s += ci * ci;
  return std::sqrt(s);
}

Eigen::ArrayXd MacroProjector::hydrodynamic_slice(double a, const Vec3& b, double c) const {
  const double rho = state_.rho, T = state_.T;
  Eigen::ArrayXd out(grid_->size());
  for (int i = 0; i < grid_->size(); ++i) {
    const Vec3& n = grid_->node(i);
    const double w0 = n[0] - state_.u[0], w1 = n[1] - state_.u[1], w2c = n[2] - state_.u[2];
    const double w2 = w0 * w0 + w1 * w1 + w2c * w2c;
    out[i] = (a / rho + (b[0] * w0 + b[1] * w1 + b[2] * w2c) / T +
              c / (6.0 * T) * (w2 / T - 3.0)) *
             sqrt_mu_[i];
  }
  return out;
}

Eigen::ArrayXd MacroProjector::pair_macro(const Eigen::ArrayXd& g, const Eigen::ArrayXd& h) const {
  const Eigen::ArrayXd pg = apply(g), ph = apply(h);
  Eigen::ArrayXd prod(grid_->size());
  for (int i = 0; i < grid_->size(); ++i)
    prod[i] = (sqrt_mu_[i] > 0.0) ? pg[i] * ph[i] / sqrt_mu_[i] : 0.0;
  return micro(prod);
}

BurnettTensors burnett(const FluidPoint& state, const VelocityGrid& grid) {
  state.validate();
  const double T = state.T;
  const Eigen::ArrayXd smu = maxwellian(state, grid).values.sqrt();
  BurnettTensors out;
  std::array<Eigen::ArrayXd, 3> w;
  Eigen::ArrayXd w2(grid.size());
  for (int d = 0; d < 3; ++d) w[d].resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& n = grid.node(i);
    w[0][i] = n[0] - state.u[0];
    w[1][i] = n[1] - state.u[1];
    w[2][i] = n[2] - state.u[2];
    w2[i] = w[0][i] * w[0][i] + w[1][i] * w[1][i] + w[2][i] * w[2][i];
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Eigen::ArrayXd a = w[i] * w[j] / T;
      if (i == j) a -= w2 / (3.0 * T);
      out.A[i][j] = a * smu;
    }
  for (int i = 0; i < 3; ++i)
    out.B[i] = w[i] / (2.0 * std::sqrt(T)) * (w2 / T - 5.0) * smu;
  return out;
}

std::optional<MatchedMaxwellian> match_maxwellian(const VelocityGrid& grid, double m0,
                                                  const Vec3& m1, double m2,
                                                  const FluidPoint& guess) {
  FluidPoint s = guess;
  const double scale = std::max({std::abs(m0), std::abs(m2), 1e-300});
  for (int it = 0; it < 50; ++it) {
    KineticSlice M = maxwellian(s, grid);
    // residual of (mass, momentum, raw |v|^2 moment)
    double r0 = -m0, r2 = -m2;
    Vec3 r1{-m1[0], -m1[1], -m1[2]};
    Eigen::Matrix<double, 5, 5> J = Eigen::Matrix<double, 5, 5>::Zero();
    for (int i = 0; i < grid.size(); ++i) {
      const double wf = grid.weight(i) * M.values[i];
      const Vec3& n = grid.node(i);
      const double nn = norm2_3(n);
      r0 += wf;
      r1[0] += wf * n[0];
      r1[1] += wf * n[1];
      r1[2] += wf * n[2];
      r2 += wf * nn;
      // dM/d(rho)/M = 1/rho ; dM/du_k = M (v_k - u_k)/T ; dM/dT = M (|v-u|^2/(2T^2) - 3/(2T))
      const double c0 = 1.0 / s.rho;
      const double cu0 = (n[0] - s.u[0]) / s.T, cu1 = (n[1] - s.u[1]) / s.T,
                   cu2 = (n[2] - s.u[2]) / s.T;
      const double dw2 = (n[0] - s.u[0]) * (n[0] - s.u[0]) + (n[1] - s.u[1]) * (n[1] - s.u[1]) +
                         (n[2] - s.u[2]) * (n[2] - s.u[2]);
      const double cT = dw2 / (2.0 * s.T * s.T) - 1.5 / s.T;
      const double basis[5] = {c0, cu0, cu1, cu2, cT};
      const double mom[5] = {1.0, n[0], n[1], n[2], nn};
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) J(a, b) += wf * mom[a] * basis[b];
    }
    Eigen::Matrix<double, 5, 1> r;
    r << r0, r1[0], r1[1], r1[2], r2;
    if (r.cwiseAbs().maxCoeff() < 1e-14 * scale) {
      return MatchedMaxwellian{s, maxwellian(s, grid).values};
    }
    Eigen::Matrix<double, 5, 1> d = J.partialPivLu().solve(r);
    s.rho -= d(0);
    s.u[0] -= d(1);
    s.u[1] -= d(2);
    s.u[2] -= d(3);
    s.T -= d(4);
    if (!(s.rho > 0.0) || !(s.T > 0.0)) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace hilbex
