#include <cmath>
#include <stdexcept>

#include "fd1d.hpp"
#include "hilbex/fluid.hpp"

namespace hilbex {

namespace {

constexpr double kDissipation = 0.015;
// wall parity per component (p~, w1, w2, w3, theta~)
constexpr double kParity[5] = {1.0, 1.0, 1.0, -1.0, 1.0};

// quintic smoothstep cutoff: 1 on [0,1], 0 on [2,inf)
double cutoff(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double t = s - 1.0;
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}
double cutoff_d(double s) {
  if (s <= 1.0 || s >= 2.0) return 0.0;
  const double t = s - 1.0;
  return -(30.0 * t * t - 60.0 * t * t * t + 30.0 * t * t * t * t);
}

// Euler background on the solver nodes, with padded x3-derivatives
struct Background {
  std::vector<double> rho, u1, u2, u3, T, p, d3u1, d3u2, d3u3, d3T, d3p;

  void sample(const EulerSolution& euler, int step, const std::vector<double>& nodes,
              const fd1d::Mesh& mesh) {
    const int n = static_cast<int>(nodes.size());
    rho.resize(n);
    u1.resize(n);
    u2.resize(n);
    u3.resize(n);
    T.resize(n);
    p.resize(n);
    for (int j = 0; j < n; ++j) {
      FluidPoint s;
      if (j == 0) {
        const WallTrace& w = euler.wall[step];
        s = FluidPoint{w.rho0, {w.u0[0], w.u0[1], 0.0}, w.T0};
      } else if (j <= euler.grid.cells()) {
        s = euler.at(step, j - 1);
      } else {
        s = euler.at(step, euler.grid.cells() - 1);
      }
      rho[j] = s.rho;
      u1[j] = s.u[0];
      u2[j] = s.u[1];
      u3[j] = s.u[2];
      T[j] = s.T;
      p[j] = s.rho * s.T;
    }
    fd1d::Padded<double> pd(n);
    auto deriv = [&](const std::vector<double>& f, double parity, std::vector<double>& out) {
      pd.fill(f, parity);
      out.resize(n);
      for (int j = 0; j < n; ++j) out[j] = pd.d1(mesh, j);
    };
    deriv(u1, 1.0, d3u1);
    deriv(u2, 1.0, d3u2);
    deriv(u3, -1.0, d3u3);
    deriv(T, 1.0, d3T);
    deriv(p, 1.0, d3p);
  }

  void average_with(const Background& o) {
    auto avg = [](std::vector<double>& a, const std::vector<double>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + b[i]);
    };
    avg(rho, o.rho);
    avg(u1, o.u1);
    avg(u2, o.u2);
    avg(u3, o.u3);
    avg(T, o.T);
    avg(p, o.p);
    avg(d3u1, o.d3u1);
    avg(d3u2, o.d3u2);
    avg(d3u3, o.d3u3);
    avg(d3T, o.d3T);
    avg(d3p, o.d3p);
  }
};

// Core stepper in the lifted variables (p~, w~, theta~); templated so the slab
// (real) and tangential-mode (complex) paths share one discretization.
template <class S>
struct HypCore {
  const EulerSolution* euler;
  std::vector<double> nodes;
  fd1d::Mesh mesh;
  double k1 = 0.0, k2 = 0.0;
  bool lift_compatible_init = false;

  std::function<S(double, double, int)> src_f;
  std::function<S(double, double)> src_g;
  std::function<S(double)> datum, datum_dot;

  explicit HypCore(const EulerSolution& e)
      : euler(&e), nodes(linear_solver_nodes(e.grid)), mesh(nodes) {}

  static S make_ik(double k);

  void rhs(double t, const Background& bg, const std::vector<std::vector<S>>& w,
           std::vector<std::vector<S>>& out, std::array<fd1d::Padded<S>, 5>& pad) const {
    const int n = static_cast<int>(nodes.size());
    const S i1 = make_ik(k1), i2 = make_ik(k2);
    const S d_t = datum ? datum(t) : S(0.0);
    const S d_dot = datum_dot ? datum_dot(t) : S(0.0);
    for (int c = 0; c < 5; ++c) pad[c].fill(w[c], kParity[c]);
    for (int c = 0; c < 5; ++c) std::fill(out[c].begin(), out[c].end(), S(0.0));
    for (int j = 0; j < n; ++j) {
      const double x = nodes[j];
      const double chi = cutoff(x), chid = cutoff_d(x);
      const S ud3 = d_t * chi;
      const S divud = d_t * chid;
      const double rho = bg.rho[j], p = bg.p[j], T = bg.T[j];
      const double u3 = bg.u3[j], divu = bg.d3u3[j];

      const S dp = pad[0].d1(mesh, j);
      const S dw1 = pad[1].d1(mesh, j), dw2 = pad[2].d1(mesh, j), dw3 = pad[3].d1(mesh, j);
      const S dth = pad[4].d1(mesh, j);
      const S divw = i1 * w[1][j] + i2 * w[2][j] + dw3;

      const S Sg = src_g ? src_g(t, x) : S(0.0);
      const S Sf1 = src_f ? src_f(t, x, 0) : S(0.0);
      const S Sf2 = src_f ? src_f(t, x, 1) : S(0.0);
      const S Sf3 = src_f ? src_f(t, x, 2) : S(0.0);

      const S G0 = Sg / 3.0 - (5.0 / 3.0) * p * divud - bg.d3p[j] * ud3;
      const S G1 = Sf1 - rho * ud3 * bg.d3u1[j];
      const S G2 = Sf2 - rho * ud3 * bg.d3u2[j];
      const S G3 = Sf3 - rho * d_dot * chi - rho * u3 * d_t * chid - rho * ud3 * bg.d3u3[j];
      const S G4 = Sg - 2.0 * p * divud - 3.0 * rho * ud3 * bg.d3T[j];

      out[0][j] = -u3 * dp - (5.0 / 3.0) * p * divw - (5.0 / 3.0) * divu * w[0][j] -
                  bg.d3p[j] * w[3][j] + G0;
      out[1][j] = (-rho * u3 * dw1 - i1 * w[0][j] - rho * w[3][j] * bg.d3u1[j] + G1) / rho;
      out[2][j] = (-rho * u3 * dw2 - i2 * w[0][j] - rho * w[3][j] * bg.d3u2[j] + G2) / rho;
      out[3][j] = (-rho * u3 * dw3 - dp + bg.d3p[j] / p * w[0][j] - rho * w[3][j] * bg.d3u3[j] +
                   bg.d3p[j] / (3.0 * T) * w[4][j] + G3) /
                  rho;
      out[4][j] = (-rho * u3 * dth - 2.0 * p * divw - 3.0 * rho * w[3][j] * bg.d3T[j] -
                   (2.0 / 3.0) * rho * divu * w[4][j] + G4) /
                  rho;
    }
    double speed = 0.0;
    for (int j = 0; j < n; ++j)
      speed = std::max(speed, std::abs(bg.u3[j]) + std::sqrt(5.0 / 3.0 * bg.T[j]));
    speed *= 1.0 + std::sqrt(k1 * k1 + k2 * k2);
    for (int c = 0; c < 5; ++c) fd1d::add_dissipation(mesh, pad[c], kDissipation, speed, out[c]);
    out[3][0] = S(0.0);  // lifted normal velocity pinned at the wall
  }
};

template <>
double HypCore<double>::make_ik(double k) {
  if (k != 0.0) throw std::invalid_argument("real hyperbolic path requires k_par = 0");
  return 0.0;
}
template <>
Cplx HypCore<Cplx>::make_ik(double k) {
  return Cplx(0.0, k);
}

template <class S>
void run_hyperbolic(HypCore<S>& core, const std::function<S(double, int)>& init, double horizon,
                    double growth_ceiling, std::vector<double>& times, Trajectory<S>& rho_out,
                    Trajectory<S>& u1_out, Trajectory<S>& u2_out, Trajectory<S>& u3_out,
                    Trajectory<S>& th_out, double& max_growth, bool& warning) {
  const EulerSolution& euler = *core.euler;
  const int n = static_cast<int>(core.nodes.size());
  const double dt = euler.dt;
  int steps = static_cast<int>(std::llround(horizon / dt));
  steps = std::min(steps, euler.steps() - 1);
  if (steps < 1) throw std::invalid_argument("linear hyperbolic solve needs at least one step");

  std::vector<std::vector<S>> q(5, std::vector<S>(n, S(0.0)));
  Background bg0;
  bg0.sample(euler, 0, core.nodes, core.mesh);
  for (int j = 0; j < n; ++j) {
    const double x = core.nodes[j];
    const S r0 = init ? init(x, 0) : S(0.0);
    const S v1 = init ? init(x, 1) : S(0.0);
    const S v2 = init ? init(x, 2) : S(0.0);
    const S v3 = init ? init(x, 3) : S(0.0);
    const S th = init ? init(x, 4) : S(0.0);
    q[0][j] = (bg0.rho[j] * th + 3.0 * bg0.T[j] * r0) / 3.0;
    q[1][j] = v1;
    q[2][j] = v2;
    q[3][j] = core.lift_compatible_init
                  ? v3
                  : v3 - (core.datum ? core.datum(0.0) : S(0.0)) * cutoff(x);
    q[4][j] = th;
  }
  if (std::abs(q[3][0]) > 1e-10)
    throw std::invalid_argument("linear hyperbolic: initial u3(0) incompatible with wall datum");
  q[3][0] = S(0.0);

  times.resize(steps + 1);
  rho_out.resize(steps + 1, n);
  u1_out.resize(steps + 1, n);
  u2_out.resize(steps + 1, n);
  u3_out.resize(steps + 1, n);
  th_out.resize(steps + 1, n);

  std::vector<double> qw(n, 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    const double h = core.nodes[j + 1] - core.nodes[j];
    qw[j] += 0.5 * h;
    qw[j + 1] += 0.5 * h;
  }
  double e0 = -1.0;
  max_growth = 1.0;
  warning = false;

  auto record = [&](int s, const Background& bgs) {
    const double t = s * dt;
    times[s] = t;
    double en = 0.0;
    for (int j = 0; j < n; ++j) {
      const double x = core.nodes[j];
      const S ud = (core.datum ? core.datum(t) : S(0.0)) * cutoff(x);
      const S p_t = q[0][j], th = q[4][j];
      const S r0 = (3.0 * p_t - bgs.rho[j] * th) / (3.0 * bgs.T[j]);
      rho_out.at(s, j) = r0;
      u1_out.at(s, j) = q[1][j];
      u2_out.at(s, j) = q[2][j];
      u3_out.at(s, j) = q[3][j] + ud;
      th_out.at(s, j) = th;
      en += qw[j] * (std::norm(q[0][j]) / bgs.p[j] +
                     bgs.rho[j] * (std::norm(q[1][j]) + std::norm(q[2][j]) + std::norm(q[3][j])) +
                     bgs.rho[j] * std::norm(q[4][j]));
    }
    if (s == 0)
      e0 = en;
    else if (e0 > 1e-300) {
      max_growth = std::max(max_growth, en / e0);
      if (max_growth > growth_ceiling) warning = true;
    }
  };

  Background bgA, bg_half, bg_next;
  std::vector<std::vector<S>> k1(5, std::vector<S>(n)), k2 = k1, k3 = k1, k4 = k1, tmp = k1;
  std::array<fd1d::Padded<S>, 5> pad{fd1d::Padded<S>(n), fd1d::Padded<S>(n), fd1d::Padded<S>(n),
                                     fd1d::Padded<S>(n), fd1d::Padded<S>(n)};
  bg_next.sample(euler, 0, core.nodes, core.mesh);
  record(0, bg_next);
  for (int s = 1; s <= steps; ++s) {
    const double t0 = (s - 1) * dt;
    bgA.sample(euler, s - 1, core.nodes, core.mesh);
    bg_next.sample(euler, s, core.nodes, core.mesh);
    bg_half = bgA;
    bg_half.average_with(bg_next);

    core.rhs(t0, bgA, q, k1, pad);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j) tmp[c][j] = q[c][j] + 0.5 * dt * k1[c][j];
    core.rhs(t0 + 0.5 * dt, bg_half, tmp, k2, pad);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j) tmp[c][j] = q[c][j] + 0.5 * dt * k2[c][j];
    core.rhs(t0 + 0.5 * dt, bg_half, tmp, k3, pad);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j) tmp[c][j] = q[c][j] + dt * k3[c][j];
    core.rhs(t0 + dt, bg_next, tmp, k4, pad);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j)
        q[c][j] += dt / 6.0 * (k1[c][j] + 2.0 * k2[c][j] + 2.0 * k3[c][j] + k4[c][j]);
    q[3][0] = S(0.0);
    record(s, bg_next);
  }
}

}  // namespace

HyperbolicSolution solve_linear_hyperbolic(const EulerSolution& euler,
                                           const HyperbolicCoefficients& coeffs, double horizon,
                                           double energy_growth_ceiling) {
  HypCore<double> core(euler);
  core.src_f = coeffs.f;
  core.src_g = coeffs.g;
  core.datum = coeffs.wall_datum;
  core.datum_dot = coeffs.wall_datum_dot;
  core.lift_compatible_init = coeffs.lift_compatible_init;
  HyperbolicSolution sol;
  sol.nodes = core.nodes;
  sol.dt = euler.dt;
  run_hyperbolic<double>(core, coeffs.init, horizon, energy_growth_ceiling, sol.times, sol.rho,
                         sol.u1, sol.u2, sol.u3, sol.theta, sol.max_energy_growth,
                         sol.energy_warning);
  return sol;
}

HyperbolicModeSolution solve_linear_hyperbolic_mode(const EulerSolution& euler,
                                                    const HyperbolicModeCoefficients& coeffs,
                                                    const std::array<double, 2>& kpar,
                                                    double horizon, double energy_growth_ceiling) {
  HypCore<Cplx> core(euler);
  core.k1 = kpar[0];
  core.k2 = kpar[1];
  core.src_f = coeffs.f;
  core.src_g = coeffs.g;
  core.datum = coeffs.wall_datum;
  core.datum_dot = coeffs.wall_datum_dot;
  core.lift_compatible_init = coeffs.lift_compatible_init;
  HyperbolicModeSolution sol;
  sol.nodes = core.nodes;
  sol.dt = euler.dt;
  run_hyperbolic<Cplx>(core, coeffs.init, horizon, energy_growth_ceiling, sol.times, sol.rho,
                       sol.u1, sol.u2, sol.u3, sol.theta, sol.max_energy_growth,
                       sol.energy_warning);
  return sol;
}

}  // namespace hilbex
