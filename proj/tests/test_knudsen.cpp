#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "hilbex/knudsen.hpp"

using namespace hilbex;

namespace {

CollisionBackend bgk() {
  CollisionBackend b;
  b.kind = BackendKind::BgkModel;
  b.nu = {NuParams::Type::Constant, 1.0};
  return b;
}

}  // namespace

TEST_CASE("solvability report: trivial pass, macroscopic source fails") {
  VelocityGrid g(6.0, 12, GridScheme::UniformTensor);
  const FluidPoint s0{1.0, {0.05, -0.02, 0.0}, 1.05};
  HalfSpaceProblem hp;
  hp.wall_state = s0;
  hp.eta = LayerGrid::graded(30.0, 60, 1.05);
  hp.f_b = Eigen::ArrayXd::Zero(g.size());
  SolvabilityReport rep = check_solvability(hp, g);
  CHECK(rep.pass);
  CHECK(rep.micro_defect == 0.0);
  for (double m : rep.moments) CHECK(m == 0.0);

  // chi_0 source at every eta: fails with unit macroscopic defect
  const MacroProjector P(s0, g);
  const Eigen::ArrayXd chi0 = P.chi(0);
  hp.source = [chi0](double) { return chi0; };
  rep = check_solvability(hp, g);
  CHECK(!rep.pass);
  CHECK(rep.micro_defect == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("solvability of the first-order mismatch pattern") {
  VelocityGrid g(7.0, 16, GridScheme::UniformTensor);
  const FluidPoint s0{1.1, {0.1, -0.05, 0.0}, 0.95};
  const MacroProjector P(s0, g);
  HalfSpaceProblem hp;
  hp.wall_state = s0;
  hp.eta = LayerGrid::graded(30.0, 60, 1.05);

  // macroscopic wall slice with zero normal-velocity component: its specular
  // mismatch satisfies all four moments
  const Eigen::ArrayXd macro = P.hydrodynamic_slice(0.4, {0.3, -0.2, 0.0}, 0.25);
  hp.f_b = boundary_mismatch(macro, g);
  SolvabilityReport rep = check_solvability(hp, g, 1e-6);
  CHECK(rep.pass);

  // a nonzero normal-velocity coefficient breaks the mass-flux moment
  const Eigen::ArrayXd bad = P.hydrodynamic_slice(0.4, {0.3, -0.2, 0.35}, 0.25);
  hp.f_b = boundary_mismatch(bad, g);
  rep = check_solvability(hp, g, 1e-6);
  CHECK(!rep.pass);
  CHECK(std::abs(rep.moments[0]) > 1e-3);
}

TEST_CASE("boundary mismatch: even input cancels, odd extension reproduces it") {
  VelocityGrid g(6.0, 12, GridScheme::UniformTensor);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::ArrayXd even(g.size());
  for (int i = 0; i < g.size(); ++i) even[i] = n(rng);
  // symmetrize
  Eigen::ArrayXd sym(g.size());
  for (int i = 0; i < g.size(); ++i) sym[i] = even[i] + even[g.reflect_v3(i)];
  CHECK(boundary_mismatch(sym, g).abs().maxCoeff() == 0.0);

  Eigen::ArrayXd any(g.size());
  for (int i = 0; i < g.size(); ++i) any[i] = n(rng);
  const Eigen::ArrayXd gb = boundary_mismatch(any, g);
  for (int i = 0; i < g.size(); ++i) {
    if (g.node(i)[2] > 0.0) {
      CHECK(gb[i] == 0.0);
    } else {
      // odd extension reproduces the full bracket difference
      const double expected = any[i] - any[g.reflect_v3(i)];
      CHECK(gb[i] == expected);
    }
  }
}

TEST_CASE("correction fields: zeros, analytic tails, microscopic defect") {
  VelocityGrid g(8.0, 20, GridScheme::UniformTensor);
  const FluidPoint s0{1.0, {0, 0, 0}, 1.0};
  const LayerGrid eta = LayerGrid::graded(30.0, 3000, 1.0);
  auto zero = [](double) { return 0.0; };

  // all-zero coefficients give all-zero fields
  {
    const CorrectionFields cf = build_correction(s0, eta, zero, {zero, zero, zero}, zero);
    for (int j = 0; j < eta.nodes(); j += 500) {
      CHECK(cf.A[j] == 0.0);
      CHECK(cf.C[j] == 0.0);
      CHECK(cf.fhat_slice(j, g).abs().maxCoeff() == 0.0);
    }
  }

  // a_hat = e^{-eta}: A = -(2/T) e^{-eta}, C = e^{-eta}/(5 T^2)
  {
    auto ah = [](double e) { return std::exp(-e); };
    const CorrectionFields cf = build_correction(s0, eta, ah, {zero, zero, zero}, zero);
    for (int j = 0; j < eta.nodes(); j += 377) {
      const double e = eta.y[j];
      CHECK(std::abs(cf.A[j] + 2.0 * std::exp(-e)) < 1e-8);
      CHECK(std::abs(cf.C[j] - 0.2 * std::exp(-e)) < 1e-8);
    }
  }

  // random decaying coefficients: the transport defect is microscopic
  {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), rate(0.5, 1.5);
    const MacroProjector P(s0, g);
    for (int rep = 0; rep < 5; ++rep) {
      const double ra = rate(rng), rb = rate(rng), rc = rate(rng);
      const double aa = amp(rng), ab = amp(rng), ac = amp(rng);
      auto mk = [](double A, double r) {
        return [A, r](double e) { return A * std::exp(-r * e); };
      };
      const CorrectionFields cf =
          build_correction(s0, eta, mk(aa, ra), {mk(ab, rb), mk(-ab, rb), mk(0.4 * ab, rb)},
                           mk(ac, rc));
      for (int j : {0, 700, 2100}) {
        const Eigen::ArrayXd defect = cf.defect_slice(j, g);
        CHECK(P.macro_norm(defect) < 1e-8);
      }
    }
  }

  // non-decaying coefficients are rejected
  auto flat = [](double) { return 1.0; };
  CHECK_THROWS(build_correction(s0, eta, flat, {zero, zero, zero}, zero));
}

TEST_CASE("half-space solve: zero problem returns zero") {
  VelocityGrid g(6.0, 10, GridScheme::UniformTensor);
  const FluidPoint s0{1.0, {0, 0, 0}, 1.0};
  const CollisionOperator op(bgk(), s0, g);
  HalfSpaceProblem hp;
  hp.wall_state = s0;
  hp.eta = LayerGrid::graded(30.0, 120, 1.02);
  hp.f_b = Eigen::ArrayXd::Zero(g.size());
  const KnudsenSolution sol = solve_halfspace(hp, op);
  CHECK(sol.converged);
  CHECK(sol.residual == 0.0);
  double mx = 0.0;
  for (double v : sol.f.a) mx = std::max(mx, std::abs(v));
  CHECK(mx == 0.0);
  CHECK(sol.zeta == hp.zeta0);  // declared rate reported for the trivial solution
}

TEST_CASE("pure-absorption transport sweep matches the closed form") {
  VelocityGrid g(6.0, 8, GridScheme::UniformTensor);
  const FluidPoint s0{1.0, {0, 0, 0}, 1.0};
  const CollisionOperator op(bgk(), s0, g);
  const MacroProjector& P = op.projector();
  // microscopic velocity shape
  const BurnettTensors bt = burnett(s0, g);
  const Eigen::ArrayXd m = P.micro(bt.A[2][0] + 0.3 * bt.B[2]);

  HalfSpaceProblem hp;
  hp.wall_state = s0;
  hp.eta = LayerGrid::graded(30.0, 6000, 1.0);
  hp.f_b = Eigen::ArrayXd::Zero(g.size());
  hp.source = [m](double e) { return (std::exp(-e) * m).eval(); };
  KnudsenOptions opt;
  opt.pure_absorption = true;
  const KnudsenSolution sol = solve_halfspace(hp, op, opt);
  CHECK(sol.converged);

  const double nu = 1.0;
  double err = 0.0;
  for (int j = 0; j < hp.eta.nodes(); j += 613) {
    const double e = hp.eta.y[j];
    for (int i = 0; i < g.size(); ++i) {
      const double v3 = g.node(i)[2];
      double exact;
      if (v3 < 0.0) {
        exact = m[i] * std::exp(-e) / (nu + std::abs(v3));
      } else {
        const double f0 = m[g.reflect_v3(i)] * 1.0 / (nu + v3);
        exact = f0 * std::exp(-nu * e / v3) +
                m[i] * (std::exp(-e) - std::exp(-nu * e / v3)) / (nu - v3);
      }
      err = std::max(err, std::abs(sol.f.at(j, i) - exact));
    }
  }
  CHECK(err < 1e-8);
  CHECK(sol.zeta > 0.0);
  CHECK(sol.zeta < hp.zeta0);  // cannot out-decay the forcing
}

TEST_CASE("half-space solve with collision gain: residual, wall relation, decay") {
  VelocityGrid g(6.0, 12, GridScheme::UniformTensor);
  const FluidPoint s0{1.05, {0.08, -0.03, 0.0}, 0.97};
  const CollisionOperator op(bgk(), s0, g);
  const MacroProjector P(s0, g);
  const BurnettTensors bt = burnett(s0, g);
  HalfSpaceProblem hp;
  hp.wall_state = s0;
  hp.eta = LayerGrid::graded(30.0, 200, 1.02);

  // nontrivial solvable datum: the mismatch of an odd cubic slice outside the
  // collision-invariant span, with its four wall moments repaired by odd
  // invariant generators (a miniature of the boundary-matching construction)
  Eigen::ArrayXd fb;
  {
    Eigen::ArrayXd h(g.size());
    const Eigen::ArrayXd& smu = P.sqrt_mu();
    for (int i = 0; i < g.size(); ++i) {
      const Vec3& v = g.node(i);
      const double w1 = v[0] - s0.u[0], w2 = v[1] - s0.u[1], w3 = v[2] - s0.u[2];
      h[i] = (w3 * (w1 * w1 - w2 * w2) + 0.4 * w3 * w3 * w3) * smu[i];
    }
    fb = boundary_mismatch(h, g);
  }
  (void)bt;
  {
    const Eigen::ArrayXd& smu = P.sqrt_mu();
    std::array<Eigen::ArrayXd, 4> gen;
    Eigen::ArrayXd base(g.size());
    for (int i = 0; i < g.size(); ++i) {
      const Vec3& v = g.node(i);
      base[i] = v[2] * smu[i];
    }
    gen[0] = base;
    for (int m = 1; m <= 2; ++m) {
      gen[m] = base;
      for (int i = 0; i < g.size(); ++i)
        gen[m][i] *= (g.node(i)[m - 1] - s0.u[m - 1]);
    }
    gen[3] = base;
    for (int i = 0; i < g.size(); ++i) {
      const Vec3& v = g.node(i);
      const double w2 = (v[0] - s0.u[0]) * (v[0] - s0.u[0]) +
                        (v[1] - s0.u[1]) * (v[1] - s0.u[1]) +
                        (v[2] - s0.u[2]) * (v[2] - s0.u[2]);
      gen[3][i] *= w2;
    }
    for (auto& ge : gen)
      for (int i = 0; i < g.size(); ++i)
        if (g.node(i)[2] > 0.0) ge[i] = 0.0;
    auto momvec = [&](const Eigen::ArrayXd& f) {
      HalfSpaceProblem tmp = hp;
      tmp.f_b = f;
      const SolvabilityReport r = check_solvability(tmp, g, 1e-6);
      return r.moments;
    };
    Eigen::Matrix4d G;
    Eigen::Vector4d r;
    const auto mf = momvec(fb);
    for (int c = 0; c < 4; ++c) {
      const auto mg = momvec(gen[c]);
      for (int a = 0; a < 4; ++a) G(a, c) = mg[a];
      r(c) = mf[c];
    }
    const Eigen::Vector4d coef = G.partialPivLu().solve(r);
    for (int c = 0; c < 4; ++c) fb -= coef(c) * gen[c];
  }
  hp.f_b = fb;
  REQUIRE(check_solvability(hp, g, 1e-6).pass);

  KnudsenOptions opt;
  opt.tol_solve = 1e-8;
  const KnudsenSolution sol = solve_halfspace(hp, op, opt);
  CHECK(sol.converged);
  CHECK(sol.residual < 1e-7);
  CHECK(sol.wall_relation_defect < 1e-10);
  CHECK(sol.zeta > 0.0);
  // nontrivial solution decaying toward the truncation
  CHECK(sol.profile.front() > 1e-4);
  CHECK(sol.profile.back() < 6e-3 * sol.profile.front());  // e^{-zeta eta_max} with the slowest characteristic
}

TEST_CASE("knudsen source assembly: vanishing low orders and microscopic split") {
  VelocityGrid g(6.0, 10, GridScheme::UniformTensor);
  const FluidPoint s0{1.0, {0.05, 0.0, 0.0}, 1.0};
  const CollisionOperator op(bgk(), s0, g);
  const MacroProjector& P = op.projector();

  CHECK(assemble_knudsen_source(1, op, Eigen::ArrayXd::Zero(g.size()), nullptr).zero);
  CHECK(assemble_knudsen_source(2, op, Eigen::ArrayXd::Zero(g.size()), nullptr).zero);

  // synthetic decaying fhat_2 for the order-3 source
  KnudsenSolution fh2;
  fh2.eta = LayerGrid::graded(30.0, 80, 1.05).y;
  fh2.f.resize(static_cast<int>(fh2.eta.size()), g.size());
  const Eigen::ArrayXd shape = P.hydrodynamic_slice(0.2, {0.1, 0.0, 0.05}, -0.1);
  for (std::size_t j = 0; j < fh2.eta.size(); ++j)
    for (int i = 0; i < g.size(); ++i)
      fh2.f.at(static_cast<int>(j), i) = std::exp(-0.8 * fh2.eta[j]) * shape[i];

  const Eigen::ArrayXd gmac = P.hydrodynamic_slice(0.5, {0.2, -0.1, 0.0}, 0.3);
  const KnudsenSourceSplit split = assemble_knudsen_source(3, op, gmac, &fh2);
  CHECK(!split.zero);
  for (double e : {0.4, 2.7, 11.0}) {
    const Eigen::ArrayXd s1 = split.S1(e);
    const Eigen::ArrayXd s2 = split.S2(e);
    CHECK(s1.abs().maxCoeff() == 0.0);           // S_{3,1} vanishes identically
    CHECK(P.macro_norm(s2) < 1e-10);             // S_{3,2} is microscopic
    const bool nontrivial = s2.abs().maxCoeff() > 0.0;
    CHECK(nontrivial);
  }
  const Eigen::ArrayXd near = split.S2(0.4), far = split.S2(15.0);
  CHECK(far.abs().maxCoeff() < 0.01 * near.abs().maxCoeff());  // inherits the decay
}
