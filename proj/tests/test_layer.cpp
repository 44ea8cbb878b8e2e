#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hilbex/layer.hpp"

using namespace hilbex;

namespace {

LayerCoefficients frozen(double rho0, double mu, double kappa, double reaction,
                         std::array<double, 3> neumann) {
  LayerCoefficients lc;
  lc.rho0 = [rho0](double) { return rho0; };
  lc.mu = [mu](double) { return mu; };
  lc.kappa = [kappa](double) { return kappa; };
  lc.drift_slope = [](double) { return 0.0; };
  lc.reaction = [reaction](double) {
    std::array<std::array<double, 3>, 3> R{};
    for (int c = 0; c < 3; ++c) R[c][c] = reaction;
    return R;
  };
  lc.neumann = [neumann](double) { return neumann; };
  return lc;
}

}  // namespace

TEST_CASE("parabolic layer: zero data stays zero") {
  const LayerGrid g = LayerGrid::graded(24.0, 160, 1.02);
  const LayerCoefficients lc = frozen(1.0, 1.0, 5.0 / 3.0, 0.1, {0, 0, 0});
  const LayerSolution sol = solve_layer_parabolic(lc, g, 1e-2, 100);
  for (int s = 0; s < sol.u1.steps; s += 17)
    for (int j = 0; j < g.nodes(); j += 13) {
      CHECK(sol.u1.at(s, j) == 0.0);
      CHECK(sol.th.at(s, j) == 0.0);
    }
}

TEST_CASE("parabolic layer: incompatible start is rejected, matched start accepted") {
  const LayerGrid g = LayerGrid::graded(24.0, 120, 1.02);
  LayerCoefficients lc = frozen(1.0, 1.0, 5.0 / 3.0, 0.2, {0.3, 0.0, -0.1});
  CHECK_THROWS(solve_layer_parabolic(lc, g, 1e-2, 10));  // zero init vs nonzero datum
  lc.construct_compatible_init = true;
  CHECK_NOTHROW(solve_layer_parabolic(lc, g, 1e-2, 10));
}

TEST_CASE("steady profile against a two-point shooting oracle") {
  const double mu = 0.8, rho0 = 1.3, r = 0.5, b = 0.4;
  const LayerGrid g = LayerGrid::graded(24.0, 320, 1.01);
  LayerCoefficients lc = frozen(rho0, mu, mu, r, {b, 0.0, 0.0});
  lc.construct_compatible_init = true;
  const LayerSolution sol = solve_layer_parabolic(lc, g, 2e-3, 15000);

  // independent shooting oracle for mu u'' = rho0 r u, u'(0) = b, u(ymax) = 0:
  // integrate the unit end-slope solution backward with RK4 and scale
  const int n = 24000;
  const double h = g.y_max() / n;
  std::vector<double> u(n + 1), up(n + 1);
  u[n] = 0.0;
  up[n] = 1.0;
  auto acc = [&](double uu) { return rho0 * r * uu / mu; };
  for (int i = n; i > 0; --i) {
    // RK4 for u'' = acc(u), integrating toward the wall
    const double k1u = up[i], k1p = acc(u[i]);
    const double k2u = up[i] - 0.5 * h * k1p, k2p = acc(u[i] - 0.5 * h * k1u);
    const double k3u = up[i] - 0.5 * h * k2p, k3p = acc(u[i] - 0.5 * h * k2u);
    const double k4u = up[i] - h * k3p, k4p = acc(u[i] - h * k3u);
    u[i - 1] = u[i] - h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    up[i - 1] = up[i] - h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  }
  const double scale = b / up[0];
  const int last = sol.u1.steps - 1;
  double err = 0.0;
  for (int j = 0; j < g.nodes(); ++j) {
    const double y = g.y[j];
    const int i = std::min(static_cast<int>(y / h), n - 1);
    const double t = y / h - i;
    const double oracle = scale * ((1.0 - t) * u[i] + t * u[i + 1]);
    err = std::max(err, std::abs(sol.u1.at(last, j) - oracle));
  }
  CHECK(err < 1e-4);
}

TEST_CASE("Neumann residual converges to the imposed datum under refinement") {
  const double b = 0.25;
  auto residual = [&](int cells) {
    const LayerGrid g = LayerGrid::graded(24.0, cells, 1.02);
    LayerCoefficients lc = frozen(1.0, 1.0, 1.0, 0.3, {b, 0.0, 0.0});
    lc.construct_compatible_init = true;
    const LayerSolution sol = solve_layer_parabolic(lc, g, 5e-3, 400);
    const int last = sol.u1.steps - 1;
    const std::vector<double> w = fd_weights(0.0, {g.y[0], g.y[1], g.y[2], g.y[3]}, 1);
    double d = 0.0;
    for (int a = 0; a < 4; ++a) d += w[a] * sol.u1.at(last, a);
    return std::abs(d - b);
  };
  const double rc = residual(80);
  const double rf = residual(160);
  CHECK(rf < 1e-4);
  CHECK(rf < 0.6 * rc + 1e-9);  // residual shrinks under mesh refinement
}

TEST_CASE("weighted-norm stability constant is stable under dt halving") {
  const LayerGrid g = LayerGrid::graded(24.0, 160, 1.02);
  auto run = [&](double dt, int steps) {
    LayerCoefficients lc = frozen(1.0, 1.0, 1.5, 0.2, {0.0, 0.0, 0.0});
    lc.source = [](double t, double y, int c) {
      return c == 2 ? 0.3 * std::exp(-0.5 * y) * std::sin(3.0 * t) : 0.0;
    };
    return solve_layer_parabolic(lc, g, dt, steps, 3.0);
  };
  const LayerSolution a = run(4e-3, 250);
  const LayerSolution b = run(2e-3, 500);
  CHECK(a.stability_C > 0.0);
  CHECK(std::abs(a.stability_C - b.stability_C) < 0.1 * std::max(a.stability_C, b.stability_C));
  CHECK(!a.weighted_norm_warning);
}

TEST_CASE("polynomial-weight decay of the solved layer") {
  const LayerGrid g = LayerGrid::graded(26.0, 200, 1.02);
  LayerCoefficients lc = frozen(1.0, 1.0, 1.0, 0.25, {0.5, -0.2, 0.3});
  lc.construct_compatible_init = true;
  const LayerSolution sol = solve_layer_parabolic(lc, g, 5e-3, 600);
  const int last = sol.u1.steps - 1;
  auto amp_at = [&](double y) {
    int j = 0;
    while (j + 1 < g.nodes() && g.y[j + 1] < y) ++j;
    return std::abs(sol.u1.at(last, j)) + std::abs(sol.u2.at(last, j)) +
           std::abs(sol.th.at(last, j));
  };
  const double mid = amp_at(0.5 * g.y_max());
  const double far = amp_at(g.y_max());
  const double wall = amp_at(0.0);
  CHECK(mid < 0.05 * wall);   // decays strongly by the half domain
  CHECK(far <= mid + 1e-300); // and further toward the cutoff
}

TEST_CASE("matching formula reduces to the first-order boundary data pattern") {
  VelocityGrid grid(8.0, 20, GridScheme::UniformTensor);
  const FluidPoint s0{1.2, {0.1, -0.05, 0.0}, 1.1};
  const double nu = 1.0;
  const BurnettTensors bt = burnett(s0, grid);
  const MacroProjector P(s0, grid);
  // synthetic microscopic part: -L^{-1}[a A31 + b A32 + (d / sqrt(T)) B3]
  const double a = 0.7, b = -0.4, d = 0.55;
  Eigen::ArrayXd micro =
      -(1.0 / nu) * P.micro(a * bt.A[2][0] + b * bt.A[2][1] + d / std::sqrt(s0.T) * bt.B[2]);
  MatchingInputs in;
  in.wall_state = s0;
  in.mu = s0.rho * s0.T / nu;
  in.kappa = 5.0 * s0.rho * s0.T / (3.0 * nu);
  in.micro_fk_wall = micro;
  const NeumannData nd = neumann_from_matching(in, grid);
  CHECK(nd.b1 == doctest::Approx(-a).epsilon(1e-5));
  CHECK(nd.b2 == doctest::Approx(-b).epsilon(1e-5));
  CHECK(nd.a == doctest::Approx(-3.0 * d).epsilon(1e-5));

  // linearity in the microscopic input
  in.micro_fk_wall = 2.0 * micro;
  const NeumannData nd2 = neumann_from_matching(in, grid);
  CHECK(nd2.b1 == doctest::Approx(2.0 * nd.b1).epsilon(1e-12));

  // degenerate transport coefficients are fatal
  in.mu = 0.0;
  CHECK_THROWS(neumann_from_matching(in, grid));
}

TEST_CASE("normal velocity from the continuity bracket: differentiate-the-integral") {
  const LayerGrid g = LayerGrid::graded(30.0, 400, 1.005);
  Trajectory<double> integrand;
  integrand.resize(1, g.nodes());
  // synthetic bracket with algebraic decay
  auto f = [](double y) { return 0.8 / std::pow(1.0 + y, 5.0) - 0.3 / std::pow(1.0 + y, 6.0); };
  for (int j = 0; j < g.nodes(); ++j) integrand.at(0, j) = f(g.y[j]);
  const NormalVelocityResult r = derive_normal_velocity(g, integrand, 1e-5);
  // value check against the analytic tail integral of the synthetic bracket
  auto exact = [](double y) {
    return 0.2 / std::pow(1.0 + y, 4.0) - 0.06 / std::pow(1.0 + y, 5.0);
  };
  for (int j = 0; j < g.nodes(); j += 19)
    CHECK(r.u3.at(0, j) == doctest::Approx(-exact(g.y[j])).epsilon(1e-4).scale(1.0));
  // d/dy of the integral reproduces the bracket (up to the FD truncation of
  // this check itself)
  for (int j = 2; j + 2 < g.nodes(); j += 23) {
    const std::vector<double> w =
        fd_weights(g.y[j], {g.y[j - 1], g.y[j], g.y[j + 1]}, 1);
    const double dy = w[0] * r.u3.at(0, j - 1) + w[1] * r.u3.at(0, j) + w[2] * r.u3.at(0, j + 1);
    CHECK(dy == doctest::Approx(f(g.y[j])).epsilon(6e-3));
  }
  // far-field value is the (small) fitted tail
  CHECK(std::abs(r.u3.at(0, g.nodes() - 1)) < 2e-6);
  // exact tail of the synthetic bracket: int_ymax^inf f = 0.2/(1+y)^4 - 0.06/(1+y)^5
  const double exact_tail = 0.2 / std::pow(31.0, 4.0) - 0.06 / std::pow(31.0, 5.0);
  CHECK(r.tail_estimate == doctest::Approx(exact_tail).epsilon(0.5));

  // zero input gives zero output
  Trajectory<double> z;
  z.resize(1, g.nodes());
  const NormalVelocityResult rz = derive_normal_velocity(g, z, 1e-6);
  for (int j = 0; j < g.nodes(); j += 29) CHECK(rz.u3.at(0, j) == 0.0);
}

TEST_CASE("pressure integral: zero input and derivative consistency") {
  const LayerGrid g = LayerGrid::graded(24.0, 300, 1.01);
  Trajectory<double> rhs;
  rhs.resize(1, g.nodes());
  auto f = [](double y) { return std::exp(-0.7 * y) * (1.0 + 0.2 * y); };
  for (int j = 0; j < g.nodes(); ++j) rhs.at(0, j) = f(g.y[j]);
  const Trajectory<double> p = derive_pressure(g, rhs);
  CHECK(std::abs(p.at(0, g.nodes() - 1)) < 1e-14);  // anchored at the far end
  for (int j = 2; j + 2 < g.nodes(); j += 31) {
    const std::vector<double> w =
        fd_weights(g.y[j], {g.y[j - 1], g.y[j], g.y[j + 1]}, 1);
    const double dy = w[0] * p.at(0, j - 1) + w[1] * p.at(0, j) + w[2] * p.at(0, j + 1);
    CHECK(dy == doctest::Approx(f(g.y[j])).epsilon(6e-3));
  }
  Trajectory<double> z;
  z.resize(1, g.nodes());
  const Trajectory<double> pz = derive_pressure(g, z);
  for (int j = 0; j < g.nodes(); j += 17) CHECK(pz.at(0, j) == 0.0);
}
