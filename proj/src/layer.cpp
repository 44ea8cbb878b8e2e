#include "hilbex/layer.hpp"

#include <cmath>
#include <stdexcept>

namespace hilbex {

LayerGrid LayerGrid::graded(double y_max, int cells, double ratio) {
  if (!(y_max > 0.0) || cells < 8) throw std::invalid_argument("LayerGrid: bad parameters");
  LayerGrid g;
  g.y.resize(cells + 1);
  double h0 = std::abs(ratio - 1.0) < 1e-12
                  ? y_max / cells
                  : y_max * (ratio - 1.0) / (std::pow(ratio, cells) - 1.0);
  g.y[0] = 0.0;
  double h = h0;
  for (int i = 1; i <= cells; ++i) {
    g.y[i] = g.y[i - 1] + h;
    h *= ratio;
  }
  g.y[cells] = y_max;
  return g;
}

namespace {

struct Lap {
  // 3-point second-derivative weights per interior node
  std::vector<double> a, b, c;  // at j: a X_{j-1} + b X_j + c X_{j+1}
  explicit Lap(const std::vector<double>& y) {
    const int n = static_cast<int>(y.size());
    a.assign(n, 0.0);
    b.assign(n, 0.0);
    c.assign(n, 0.0);
    for (int j = 1; j < n - 1; ++j) {
      const double hm = y[j] - y[j - 1], hp = y[j + 1] - y[j];
      a[j] = 2.0 / (hm * (hm + hp));
      c[j] = 2.0 / (hp * (hm + hp));
      b[j] = -a[j] - c[j];
    }
  }
};

}  // namespace

LayerSolution solve_layer_parabolic(const LayerCoefficients& coeffs, const LayerGrid& grid,
                                    double dt, int steps, double weight_l, double compat_tol,
                                    double weighted_norm_ceiling) {
  const int n = grid.nodes();
  const std::vector<double>& y = grid.y;
  const Lap lap(y);

  // One-sided 2nd-order derivative at y = 0 (defines the Neumann elimination of X_0).
  const std::vector<double> wn = fd_weights(0.0, {y[0], y[1], y[2]}, 1);

  std::vector<std::array<double, 3>> X(n, {0.0, 0.0, 0.0});
  if (coeffs.construct_compatible_init) {
    // decaying template rescaled so the discrete wall derivative hits the
    // datum exactly
    const std::array<double, 3> bc0 = coeffs.neumann(0.0);
    double dtpl = 0.0;
    for (int a = 0; a < 3; ++a) dtpl += wn[a] * (-std::exp(-y[a]));
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < 3; ++c) X[j][c] = (bc0[c] / dtpl) * (-std::exp(-y[j]));
    for (int c = 0; c < 3; ++c) X[n - 1][c] = 0.0;
  } else {
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < 3; ++c) X[j][c] = coeffs.init ? coeffs.init(y[j], c) : 0.0;
  }

  // compatibility: one-sided dy of init against the t=0 Neumann datum
  {
    const std::array<double, 3> bc = coeffs.neumann(0.0);
    double scale = 1e-12;
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < 3; ++c) scale = std::max(scale, std::abs(X[j][c]));
    for (int c = 0; c < 3; ++c) {
      const double d0 = wn[0] * X[0][c] + wn[1] * X[1][c] + wn[2] * X[2][c];
      if (std::abs(d0 - bc[c]) > compat_tol * std::max(1.0, scale) + compat_tol)
        throw std::invalid_argument(
            "layer parabolic: initial data incompatible with t=0 Neumann datum, defect = " +
            std::to_string(std::abs(d0 - bc[c])));
    }
  }

  LayerSolution sol;
  sol.y = y;
  sol.dt = dt;
  sol.weight_l = weight_l;
  sol.times.resize(steps + 1);
  sol.u1.resize(steps + 1, n);
  sol.u2.resize(steps + 1, n);
  sol.th.resize(steps + 1, n);

  std::vector<double> qw(n, 0.0);  // trapezoid weights in y
  for (int j = 0; j + 1 < n; ++j) {
    const double h = y[j + 1] - y[j];
    qw[j] += 0.5 * h;
    qw[j + 1] += 0.5 * h;
  }

  double data_norm = 1e-300;  // accumulated squared data norms for the stability monitor
  {
    double i0 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = qw[j] * std::pow(1.0 + y[j], weight_l);
      i0 += w * (X[j][0] * X[j][0] + X[j][1] * X[j][1] + X[j][2] * X[j][2]);
    }
    data_norm += i0;
  }

  auto record = [&](int s) {
    sol.times[s] = s * dt;
    for (int j = 0; j < n; ++j) {
      sol.u1.at(s, j) = X[j][0];
      sol.u2.at(s, j) = X[j][1];
      sol.th.at(s, j) = X[j][2];
    }
  };
  record(0);

  // explicit part: drift, reaction, sources (all divided by rho0)
  auto explicit_rhs = [&](double t, const std::vector<std::array<double, 3>>& W,
                          std::vector<std::array<double, 3>>& out) {
    const double rho0 = coeffs.rho0(t);
    const double slope = coeffs.drift_slope ? coeffs.drift_slope(t) : 0.0;
    const double dconst = coeffs.drift_const ? coeffs.drift_const(t) : 0.0;
    const auto R = coeffs.reaction ? coeffs.reaction(t)
                                   : std::array<std::array<double, 3>, 3>{};
    for (int j = 1; j < n - 1; ++j) {
      const double hm = y[j] - y[j - 1], hp = y[j + 1] - y[j];
      const double drift = slope * y[j] + dconst;
      for (int c = 0; c < 3; ++c) {
        // central first derivative on nonuniform nodes
        const double dy = (-hp / (hm * (hm + hp))) * W[j - 1][c] +
                          ((hp - hm) / (hm * hp)) * W[j][c] +
                          (hm / (hp * (hm + hp))) * W[j + 1][c];
        double reac = 0.0;
        for (int d = 0; d < 3; ++d) reac += R[c][d] * W[j][d];
        const double src = coeffs.source ? coeffs.source(t, y[j], c) : 0.0;
        out[j][c] = -drift * dy - reac + src / rho0;
      }
    }
    for (int c = 0; c < 3; ++c) {
      out[0][c] = 0.0;
      out[n - 1][c] = 0.0;
    }
  };

  std::vector<std::array<double, 3>> E0(n), Estar(n), Xstar(n);
  for (int s = 1; s <= steps; ++s) {
    const double t0 = (s - 1) * dt, t1 = s * dt, th2 = t0 + 0.5 * dt;
    const double rho_mid = coeffs.rho0(th2);
    const double D[3] = {coeffs.mu(th2) / rho_mid, coeffs.mu(th2) / rho_mid,
                         0.6 * coeffs.kappa(th2) / rho_mid};
    const std::array<double, 3> bc1 = coeffs.neumann(t1);

    // predictor: half Euler step (diffusion + explicit), for midpoint sources
    explicit_rhs(t0, X, E0);
    for (int j = 1; j < n - 1; ++j)
      for (int c = 0; c < 3; ++c) {
        const double lapX = lap.a[j] * X[j - 1][c] + lap.b[j] * X[j][c] + lap.c[j] * X[j + 1][c];
        Xstar[j][c] = X[j][c] + 0.5 * dt * (D[c] * lapX + E0[j][c]);
      }
    const std::array<double, 3> bch = coeffs.neumann(th2);
    for (int c = 0; c < 3; ++c) {
      Xstar[n - 1][c] = 0.0;
      Xstar[0][c] = (bch[c] - wn[1] * Xstar[1][c] - wn[2] * Xstar[2][c]) / wn[0];
    }
    explicit_rhs(th2, Xstar, Estar);

    // Crank-Nicolson diffusion with midpoint explicit terms
    for (int c = 0; c < 3; ++c) {
      std::vector<double> A(n - 2, 0.0), B(n - 2, 0.0), C(n - 2, 0.0), r(n - 2, 0.0);
      for (int j = 1; j < n - 1; ++j) {
        const int i = j - 1;
        const double lapX = lap.a[j] * X[j - 1][c] + lap.b[j] * X[j][c] + lap.c[j] * X[j + 1][c];
        A[i] = -0.5 * dt * D[c] * lap.a[j];
        B[i] = 1.0 - 0.5 * dt * D[c] * lap.b[j];
        C[i] = -0.5 * dt * D[c] * lap.c[j];
        r[i] = X[j][c] + 0.5 * dt * D[c] * lapX + dt * Estar[j][c];
      }
      // fold the Neumann elimination X_0 = (bc - wn1 X1 - wn2 X2)/wn0 into row j=1
      {
        const double a0 = A[0];
        A[0] = 0.0;
        B[0] += a0 * (-wn[1] / wn[0]);
        C[0] += a0 * (-wn[2] / wn[0]);
        r[0] -= a0 * (bc1[c] / wn[0]);
      }
      // X_{n-1} = 0 Dirichlet: C of last interior row multiplies zero
      solve_tridiagonal(A, B, C, r);
      for (int j = 1; j < n - 1; ++j) X[j][c] = r[j - 1];
      X[n - 1][c] = 0.0;
      X[0][c] = (bc1[c] - wn[1] * X[1][c] - wn[2] * X[2][c]) / wn[0];
    }
    record(s);

    // stability monitor in the weighted norm
    double xn = 0.0, sn = 0.0, bn = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = qw[j] * std::pow(1.0 + y[j], weight_l);
      xn += w * (X[j][0] * X[j][0] + X[j][1] * X[j][1] + X[j][2] * X[j][2]);
      if (coeffs.source)
        for (int c = 0; c < 3; ++c) {
          const double sv = coeffs.source(t1, y[j], c);
          sn += w * sv * sv;
        }
    }
    for (int c = 0; c < 3; ++c) bn += bc1[c] * bc1[c];
    data_norm += dt * (sn + bn);
    sol.stability_C = std::max(sol.stability_C, xn / data_norm);
    if (sol.stability_C > weighted_norm_ceiling) sol.weighted_norm_warning = true;
  }
  return sol;
}

NeumannData neumann_from_matching(const MatchingInputs& in, const VelocityGrid& grid) {
  if (!(in.mu > 0.0) || !(in.kappa > 0.0))
    throw std::runtime_error("neumann_from_matching: degenerate transport coefficients");
  const FluidPoint& s0 = in.wall_state;
  const BurnettTensors bt = burnett(s0, grid);
  const double T0 = s0.T, rho0 = s0.rho;

  auto inner_or_zero = [&](const Eigen::ArrayXd& a, const Eigen::ArrayXd* b) {
    return b ? grid.inner(a, *b) : 0.0;
  };

  NeumannData out;
  double b[2];
  for (int i = 0; i < 2; ++i) {
    const Eigen::ArrayXd& A3i = bt.A[2][i];
    double acc = rho0 * in.u1_plus_ubar1_wall[i] * in.ubar_km1_3_wall;
    acc += T0 * (in.jbar_wall ? inner_or_zero(A3i, in.jbar_wall) : in.jA_wall[i]);
    acc += T0 * grid.inner(A3i, in.micro_fk_wall);
    acc += rho0 * T0 * T0 * in.Bhat_k[i];
    b[i] = acc / in.mu;
  }
  out.b1 = b[0];
  out.b2 = b[1];
  double acc = (5.0 / 3.0) * rho0 * in.theta1_plus_thbar1_wall * in.ubar_km1_3_wall;
  acc += 2.0 * std::pow(T0, 1.5) * (in.jbar_wall ? inner_or_zero(bt.B[2], in.jbar_wall) : in.jB_wall);
  acc += 2.0 * std::pow(T0, 1.5) * grid.inner(bt.B[2], in.micro_fk_wall);
  acc += 10.0 * rho0 * T0 * T0 * T0 * in.Chat_k;
  out.a = acc / in.kappa;
  return out;
}

namespace {

// Algebraic tail int_{ymax}^inf fitted as C y^{-q} from the last decade of
// nodes; returns 0 when the data is effectively zero there.
double fitted_tail(const std::vector<double>& y, const std::vector<double>& f, bool& ok) {
  const int n = static_cast<int>(y.size());
  const double ymax = y.back();
  std::vector<double> lx, ly;
  double sign = 0.0;
  for (int j = 0; j < n; ++j) {
    if (y[j] < 0.1 * ymax) continue;
    if (std::abs(f[j]) < 1e-300) continue;
    lx.push_back(std::log(y[j]));
    ly.push_back(std::log(std::abs(f[j])));
    sign = f[j] > 0 ? 1.0 : -1.0;
  }
  ok = true;
  if (lx.size() < 3) return 0.0;
  const SlopeFit fit = fit_linear(lx, ly);
  const double q = -fit.slope;
  const double C = std::exp(fit.intercept);
  if (q <= 1.0) {
    ok = false;  // not integrable on the grid evidence
    return 0.0;
  }
  return sign * C * std::pow(ymax, 1.0 - q) / (q - 1.0);
}

}  // namespace

NormalVelocityResult derive_normal_velocity(const LayerGrid& grid,
                                            const Trajectory<double>& integrand, double tol_far) {
  const int n = grid.nodes();
  NormalVelocityResult res;
  res.u3.resize(integrand.steps, n);
  for (int s = 0; s < integrand.steps; ++s) {
    std::vector<double> f(n);
    for (int j = 0; j < n; ++j) f[j] = integrand.at(s, j);
    const std::vector<double> cum = cumulative_integral_from_right(grid.y, f);
    bool ok = true;
    const double tail = fitted_tail(grid.y, f, ok);
    res.tail_estimate = std::max(res.tail_estimate, std::abs(tail));
    if (!ok || std::abs(tail) > tol_far) res.tail_warning = true;
    for (int j = 0; j < n; ++j) res.u3.at(s, j) = -(cum[j] + tail);
  }
  return res;
}

Trajectory<double> derive_pressure(const LayerGrid& grid, const Trajectory<double>& rhs) {
  const int n = grid.nodes();
  Trajectory<double> p;
  p.resize(rhs.steps, n);
  for (int s = 0; s < rhs.steps; ++s) {
    std::vector<double> f(n);
    for (int j = 0; j < n; ++j) f[j] = rhs.at(s, j);
    const std::vector<double> cum = cumulative_integral_from_right(grid.y, f);
    for (int j = 0; j < n; ++j) p.at(s, j) = -cum[j];
  }
  return p;
}

double layer_weighted_norm(const LayerGrid& grid, const LayerSolution& sol, int step, double l) {
  const int n = grid.nodes();
  double acc = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const double h = grid.y[j + 1] - grid.y[j];
    auto val = [&](int jj) {
      return sol.u1.at(step, jj) * sol.u1.at(step, jj) + sol.u2.at(step, jj) * sol.u2.at(step, jj) +
             sol.th.at(step, jj) * sol.th.at(step, jj);
    };
    acc += 0.5 * h *
           (std::pow(1.0 + grid.y[j], l) * val(j) + std::pow(1.0 + grid.y[j + 1], l) * val(j + 1));
  }
  return std::sqrt(acc);
}

}  // namespace hilbex
