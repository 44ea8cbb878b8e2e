#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "hilbex/kinetic.hpp"

using namespace hilbex;

namespace {

FluidPoint random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rho(0.5, 2.0), uc(-0.3, 0.3), Tc(0.8, 1.25);
  return FluidPoint{rho(rng), {uc(rng), uc(rng), uc(rng)}, Tc(rng)};
}

Eigen::ArrayXd random_slice(const VelocityGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::ArrayXd v(g.size());
  const Eigen::ArrayXd smu = maxwellian(FluidPoint{}, g).values.sqrt();
  for (int i = 0; i < g.size(); ++i) v[i] = n(rng) * smu[i];
  return v;
}

}  // namespace

TEST_CASE("grid construction and symmetry") {
  VelocityGrid g(6.0, 16, GridScheme::UniformTensor);
  CHECK(g.size() == 16 * 16 * 16);
  for (int i = 0; i < g.size(); ++i) {
    CHECK(g.weight(i) > 0.0);
    const int r = g.reflect_v3(i);
    CHECK(g.node(r)[0] == g.node(i)[0]);
    CHECK(g.node(r)[1] == g.node(i)[1]);
    CHECK(g.node(r)[2] == -g.node(i)[2]);  // bitwise mirror
    CHECK(g.reflect_v3(r) == i);
    CHECK(g.node(i)[2] != 0.0);  // grazing set off the grid
    for (int d = 0; d < 3; ++d) CHECK(std::abs(g.node(i)[d]) <= g.radius());
  }
}

TEST_CASE("reflecting a slice twice returns it bit-exactly") {
  VelocityGrid g(5.0, 8, GridScheme::GaussTensor);
  std::mt19937_64 rng(11);
  KineticSlice f(g, random_slice(g, rng));
  const KineticSlice f2 = reflect_v3(reflect_v3(f, g), g);
  for (int i = 0; i < g.size(); ++i) CHECK(f2.values[i] == f.values[i]);
}

TEST_CASE("odd axis count and bad radius are rejected") {
  CHECK_THROWS(VelocityGrid(6.0, 15, GridScheme::UniformTensor));
  CHECK_THROWS(VelocityGrid(-1.0, 16, GridScheme::UniformTensor));
  CHECK_THROWS(VelocityGrid(6.0, 2, GridScheme::UniformTensor));
}

TEST_CASE("standard Maxwellian mass against the truncated analytic integral") {
  // oracle: per-axis Gaussian mass on [-R, R] is erf(R/sqrt(2)); the cube
  // integral is its cube
  VelocityGrid g(6.0, 16, GridScheme::UniformTensor);
  const double axis = std::erf(6.0 / std::sqrt(2.0));
  const double truncated = axis * axis * axis;
  const MomentVector m = moments(maxwellian(FluidPoint{}, g), g);
  CHECK(std::abs(m.mass - truncated) < 1e-7);  // quadrature vs truncated integral (aliasing)
  CHECK(std::abs(m.mass - 1.0) < 1e-6);        // tol_quad against the full-space value
  CHECK(g.gaussian_mass_defect() < 1e-6);
}

TEST_CASE("gauss-tensor scheme integrates the Maxwellian as well") {
  VelocityGrid g(7.0, 24, GridScheme::GaussTensor);
  CHECK(g.gaussian_mass_defect() < 1e-6);
}

TEST_CASE("maxwellian point values and moments") {
  VelocityGrid g(7.0, 16, GridScheme::UniformTensor);
  const FluidPoint s{1.0, {0, 0, 0}, 1.0};
  // closed form at v = 0 (no v=0 node on the mesh, evaluate the formula)
  const KineticSlice M = maxwellian(s, g);
  int nearest = 0;
  double best = 1e300;
  for (int i = 0; i < g.size(); ++i)
    if (norm2_3(g.node(i)) < best) {
      best = norm2_3(g.node(i));
      nearest = i;
    }
  const double expected = std::pow(2.0 * M_PI, -1.5) * std::exp(-0.5 * best);
  CHECK(M.values[nearest] == doctest::Approx(expected).epsilon(1e-14));

  const MomentVector m0 = moments(M, g);
  CHECK(std::abs(m0.mass - 1.0) < 1e-6);
  CHECK(std::abs(m0.momentum[0]) < 1e-9);
  CHECK(std::abs(m0.energy - 1.5) < 1e-6);

  // shifted state: analytic Gaussian moments
  const FluidPoint s2{2.0, {1, 0, 0}, 1.0};
  const VelocityGrid g2(8.0, 20, GridScheme::UniformTensor);
  const MomentVector m2 = moments(maxwellian(s2, g2), g2);
  CHECK(std::abs(m2.mass - 2.0) < 1e-6);
  CHECK(std::abs(m2.momentum[0] - 2.0) < 1e-6);
  CHECK(std::abs(m2.momentum[1]) < 1e-9);
  CHECK(std::abs(m2.energy - 4.0) < 1e-5);

  // zero slice
  const MomentVector mz = moments(KineticSlice(g, 0.0), g);
  CHECK(mz.mass == 0.0);
  CHECK(mz.energy == 0.0);
}

TEST_CASE("maxwellian v3-reflection symmetry depends on u3 only") {
  VelocityGrid g(6.0, 12, GridScheme::UniformTensor);
  const KineticSlice a = maxwellian(FluidPoint{1.0, {0, 0, 0.5}, 1.0}, g);
  const KineticSlice b = maxwellian(FluidPoint{1.0, {0.5, 0, 0}, 1.0}, g);
  const KineticSlice ar = reflect_v3(a, g);
  const KineticSlice br = reflect_v3(b, g);
  CHECK((ar.values - a.values).abs().maxCoeff() > 1e-3);
  CHECK((br.values - b.values).abs().maxCoeff() == 0.0);
}

TEST_CASE("projector is exactly idempotent and self-adjoint on the grid") {
  VelocityGrid g(7.0, 16, GridScheme::UniformTensor);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 3; ++rep) {
    const FluidPoint s = random_state(rng);
    const MacroProjector P(s, g);
    const Eigen::ArrayXd f = random_slice(g, rng);
    const Eigen::ArrayXd Pf = P.apply(f);
    CHECK((P.apply(Pf) - Pf).matrix().norm() < 1e-12 * std::max(1.0, Pf.matrix().norm()));
    const Eigen::ArrayXd h = random_slice(g, rng);
    CHECK(std::abs(g.inner(P.apply(f), h) - g.inner(f, P.apply(h))) <
          1e-12 * g.norm(f) * g.norm(h));
    // basis member is fixed
    CHECK((P.apply(P.chi(2)) - P.chi(2)).abs().maxCoeff() < 1e-12);
    // moments are preserved by P
    const MomentVector mf = moments(KineticSlice(g, f * P.sqrt_mu()), g);
    const MomentVector mp = moments(KineticSlice(g, Pf * P.sqrt_mu()), g);
    CHECK(std::abs(mf.mass - mp.mass) < 1e-12 * std::max(1.0, std::abs(mf.mass)));
    CHECK(std::abs(mf.momentum[2] - mp.momentum[2]) < 1e-11);
    CHECK(std::abs(mf.energy - mp.energy) < 1e-11);
  }
}

TEST_CASE("Burnett functions are microscopic and traceless") {
  VelocityGrid g(8.0, 20, GridScheme::UniformTensor);
  std::mt19937_64 rng(17);
  const FluidPoint s = random_state(rng);
  const MacroProjector P(s, g);
  const BurnettTensors bt = burnett(s, g);
  for (int i = 0; i < 3; ++i) {
    CHECK(P.macro_norm(bt.B[i]) < 1e-6);
    for (int j = 0; j < 3; ++j) {
      CHECK(P.macro_norm(bt.A[i][j]) < 1e-6);
      CHECK((bt.A[i][j] - bt.A[j][i]).abs().maxCoeff() == 0.0);
    }
  }
  // pointwise traceless
  const Eigen::ArrayXd trace = bt.A[0][0] + bt.A[1][1] + bt.A[2][2];
  CHECK(trace.abs().maxCoeff() < 1e-12);
  // the projection of a Burnett multiple is numerically zero (microscopy)
  CHECK(g.norm(P.apply(3.0 * bt.A[0][1])) < 1e-6);
}

TEST_CASE("maxwellian moments match analytic values across admissible states") {
  VelocityGrid g(9.0, 24, GridScheme::UniformTensor);
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    const FluidPoint s = random_state(rng);
    const MomentVector m = moments(maxwellian(s, g), g);
    CHECK(std::abs(m.mass - s.rho) < 1e-6);
    for (int d = 0; d < 3; ++d) CHECK(std::abs(m.momentum[d] - s.rho * s.u[d]) < 1e-6);
    const double e = 0.5 * (s.rho * norm2_3(s.u) + 3.0 * s.rho * s.T);
    CHECK(std::abs(m.energy - e) < 1e-6);
  }
}

TEST_CASE("grid JSON round trip") {
  VelocityGrid g(6.5, 12, GridScheme::GaussTensor);
  const VelocityGrid h = VelocityGrid::from_json(g.to_json());
  CHECK(h.radius() == g.radius());
  CHECK(h.n_per_axis() == g.n_per_axis());
  CHECK(h.scheme() == g.scheme());
}

TEST_CASE("matched maxwellian reproduces discrete moments exactly") {
  VelocityGrid g(7.0, 16, GridScheme::UniformTensor);
  std::mt19937_64 rng(5);
  const FluidPoint s = random_state(rng);
  const KineticSlice M = maxwellian(s, g);
  const MomentVector m = moments(M, g);
  const auto matched = match_maxwellian(g, m.mass, m.momentum, 2.0 * m.energy, FluidPoint{});
  REQUIRE(matched.has_value());
  const MomentVector m2 = moments(KineticSlice(g, matched->values), g);
  CHECK(std::abs(m2.mass - m.mass) < 1e-13);
  CHECK(std::abs(m2.momentum[0] - m.momentum[0]) < 1e-13);
  CHECK(std::abs(m2.energy - m.energy) < 1e-13);
}
