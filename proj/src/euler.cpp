#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hilbex/fluid.hpp"
#include "hilbex/numerics.hpp"

namespace hilbex {

double Grid1D::min_width() const {
  double m = widths[0];
  for (double w : widths) m = std::min(m, w);
  return m;
}

Grid1D Grid1D::graded(double xmax, int cells, double ratio) {
  if (!(xmax > 0.0) || cells < 4) throw std::invalid_argument("Grid1D: bad parameters");
  Grid1D g;
  g.edges.resize(cells + 1);
  g.centers.resize(cells);
  g.widths.resize(cells);
  double h0;
  if (std::abs(ratio - 1.0) < 1e-12)
    h0 = xmax / cells;
  else
    h0 = xmax * (ratio - 1.0) / (std::pow(ratio, cells) - 1.0);
  g.edges[0] = 0.0;
  double h = h0;
  for (int i = 0; i < cells; ++i) {
    g.edges[i + 1] = g.edges[i] + h;
    g.widths[i] = h;
    g.centers[i] = 0.5 * (g.edges[i] + g.edges[i + 1]);
    h *= ratio;
  }
  g.edges[cells] = xmax;  // absorb rounding
  return g;
}

namespace {

constexpr int kNc = 5;  // (rho, m1, m2, m3, E), E = rho(|u|^2/2 + 3T/2)

struct Cons {
  double q[kNc];
};

inline Cons to_cons(double rho, const Vec3& u, double T) {
  Cons c;
  c.q[0] = rho;
  c.q[1] = rho * u[0];
  c.q[2] = rho * u[1];
  c.q[3] = rho * u[2];
  c.q[4] = rho * (0.5 * norm2_3(u) + 1.5 * T);
  return c;
}

inline void to_prim(const Cons& c, double& rho, Vec3& u, double& T) {
  rho = c.q[0];
  u = {c.q[1] / rho, c.q[2] / rho, c.q[3] / rho};
  T = (c.q[4] / rho - 0.5 * norm2_3(u)) / 1.5;
}

// flux along x3
inline Cons flux(const Cons& c) {
  double rho, T;
  Vec3 u;
  to_prim(c, rho, u, T);
  const double p = rho * T;
  Cons f;
  f.q[0] = c.q[3];
  f.q[1] = c.q[1] * u[2];
  f.q[2] = c.q[2] * u[2];
  f.q[3] = c.q[3] * u[2] + p;
  f.q[4] = (c.q[4] + p) * u[2];
  return f;
}

inline double max_speed(const Cons& c) {
  double rho, T;
  Vec3 u;
  to_prim(c, rho, u, T);
  return std::abs(u[2]) + std::sqrt(5.0 / 3.0 * T);
}

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

}  // namespace

FluidPoint EulerSolution::interp(int step, double x3) const {
  const int n = grid.cells();
  const auto& xc = grid.centers;
  int j = static_cast<int>(std::upper_bound(xc.begin(), xc.end(), x3) - xc.begin()) - 1;
  int i0 = std::clamp(j - 1, 0, n - 4);
  auto lag = [&](const Trajectory<double>& f) {
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      double l = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) l *= (x3 - xc[i0 + b]) / (xc[i0 + a] - xc[i0 + b]);
      acc += l * f.at(step, i0 + a);
    }
    return acc;
  };
  return FluidPoint{lag(rho), {lag(u1), lag(u2), lag(u3)}, lag(T)};
}

FluidPoint EulerSolution::interp_d3(int step, double x3) const {
  const int n = grid.cells();
  const auto& xc = grid.centers;
  int j = static_cast<int>(std::upper_bound(xc.begin(), xc.end(), x3) - xc.begin()) - 1;
  int i0 = std::clamp(j - 1, 0, n - 4);
  std::vector<double> nodes(xc.begin() + i0, xc.begin() + i0 + 4);
  const std::vector<double> w = fd_weights(x3, nodes, 1);
  auto der = [&](const Trajectory<double>& f) {
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) acc += w[a] * f.at(step, i0 + a);
    return acc;
  };
  FluidPoint d;
  d.rho = der(rho);
  d.u = {der(u1), der(u2), der(u3)};
  d.T = der(T);
  return d;  // carries derivatives, not a physical state
}

namespace {

WallTrace wall_trace_from_cells(const EulerSolution& sol, int step) {
  // One-sided values/derivatives at x3 = 0 from the first cells. Values and
  // first derivatives use the same 4-point stencil as the interpolation
  // helpers, so the matching chain sees one consistent gradient estimate.
  const auto& xc = sol.grid.centers;
  std::vector<double> n4(xc.begin(), xc.begin() + 4);
  std::vector<double> n5(xc.begin(), xc.begin() + 5);
  const std::vector<double> w0 = fd_weights(0.0, n4, 0);
  const std::vector<double> w1 = fd_weights(0.0, n4, 1);
  const std::vector<double> w2 = fd_weights(0.0, n5, 2);
  auto ev = [&](const Trajectory<double>& f, const std::vector<double>& w) {
    double acc = 0.0;
    for (std::size_t a = 0; a < w.size(); ++a) acc += w[a] * f.at(step, static_cast<int>(a));
    return acc;
  };
  WallTrace t;
  t.rho0 = ev(sol.rho, w0);
  t.u0 = {ev(sol.u1, w0), ev(sol.u2, w0), 0.0};  // slip wall: u3(0) = 0 by construction
  t.T0 = ev(sol.T, w0);
  t.d3rho0 = ev(sol.rho, w1);
  t.d3u0 = {ev(sol.u1, w1), ev(sol.u2, w1), ev(sol.u3, w1)};
  t.d3T0 = ev(sol.T, w1);
  t.d3p0 = t.d3rho0 * t.T0 + t.rho0 * t.d3T0;
  t.divu0 = t.d3u0[2];
  t.d33rho0 = ev(sol.rho, w2);
  t.d33u0 = {ev(sol.u1, w2), ev(sol.u2, w2), ev(sol.u3, w2)};
  t.d33T0 = ev(sol.T, w2);
  return t;
}

}  // namespace

EulerSolution solve_euler(const EulerInit& init, double delta, double horizon,
                          const SpatialGridSpec& spec, const EulerOptions& opt) {
  if (spec.mode != SpatialMode::Slab1D)
    throw std::invalid_argument(
        "solve_euler: the nonlinear background solver supports slab-1d only");
  EulerSolution sol;
  sol.grid = Grid1D::graded(spec.x3_max, spec.cells, spec.grading);
  const int n = sol.grid.cells();

  std::vector<Cons> U(n);
  double max_c = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sol.grid.centers[i];
    const double rho = 1.0 + delta * init.phi0(x);
    const double T = 1.0 + delta * init.theta0(x);
    if (!(rho > 0.0) || !(T > 0.0))
      throw std::invalid_argument("solve_euler: initial density/temperature not positive");
    const Vec3 u{delta * init.Phi0[0](x), delta * init.Phi0[1](x), delta * init.Phi0[2](x)};
    U[i] = to_cons(rho, u, T);
    max_c = std::max(max_c, max_speed(U[i]));
  }

  double dt = opt.dt_override > 0.0 ? opt.dt_override : spec.cfl * sol.grid.min_width() / max_c;
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon / dt)));
  dt = horizon / steps;
  sol.dt = dt;

  sol.rho.resize(steps + 1, n);
  sol.u1.resize(steps + 1, n);
  sol.u2.resize(steps + 1, n);
  sol.u3.resize(steps + 1, n);
  sol.T.resize(steps + 1, n);
  sol.times.resize(steps + 1);
  sol.wall.resize(steps + 1);

  auto record = [&](int s, const std::vector<Cons>& W) {
    for (int i = 0; i < n; ++i) {
      double rho, T;
      Vec3 u;
      to_prim(W[i], rho, u, T);
      sol.rho.at(s, i) = rho;
      sol.u1.at(s, i) = u[0];
      sol.u2.at(s, i) = u[1];
      sol.u3.at(s, i) = u[2];
      sol.T.at(s, i) = T;
    }
    sol.times[s] = s * dt;
    sol.wall[s] = wall_trace_from_cells(sol, s);
  };

  // Slip-wall treatment: the wall flux carries only the extrapolated pressure
  // (zero mass/energy flux, exact for u3 = 0), and the first-cell slopes are
  // one-sided so the free wall gradients of (rho, u_par, T) are not clipped.
  // Outer boundary: zero-gradient ghosts.
  auto rhs = [&](const std::vector<Cons>& W, std::vector<Cons>& out) {
    std::vector<Cons> ext(n + 2);
    for (int i = 0; i < n; ++i) ext[i + 1] = W[i];
    ext[0] = W[0];  // placeholder; the wall edge uses the pressure flux
    ext[n + 1] = W[n - 1];

    std::vector<double> hx(n + 2);
    for (int i = 0; i < n; ++i) hx[i + 1] = sol.grid.widths[i];
    hx[0] = sol.grid.widths[0];
    hx[n + 1] = sol.grid.widths[n - 1];

    // MUSCL slopes: minmod in the interior, one-sided in the wall cell
    std::vector<Cons> slope(n + 2);
    for (int c = 0; c < kNc; ++c) {
      slope[0].q[c] = 0.0;
      slope[n + 1].q[c] = 0.0;
      slope[1].q[c] = (ext[2].q[c] - ext[1].q[c]) / (0.5 * (hx[1] + hx[2]));
    }
    for (int i = 2; i < n + 1; ++i)
      for (int c = 0; c < kNc; ++c) {
        const double dl = (ext[i].q[c] - ext[i - 1].q[c]) / (0.5 * (hx[i] + hx[i - 1]));
        const double dr = (ext[i + 1].q[c] - ext[i].q[c]) / (0.5 * (hx[i] + hx[i + 1]));
        slope[i].q[c] = minmod(dl, dr);
      }
    std::vector<Cons> F(n + 1);
    {
      // wall edge: second-order one-sided pressure extrapolation
      double r0, T0, r1, T1;
      Vec3 u0, u1v;
      to_prim(W[0], r0, u0, T0);
      to_prim(W[1], r1, u1v, T1);
      const double p0 = r0 * T0, p1 = r1 * T1;
      const double x0 = sol.grid.centers[0], x1 = sol.grid.centers[1];
      double pw = p0 - x0 * (p1 - p0) / (x1 - x0);
      pw = std::max(pw, 1e-12);
      for (int c = 0; c < kNc; ++c) F[0].q[c] = 0.0;
      F[0].q[3] = pw;
    }
    for (int e = 1; e <= n; ++e) {
      const int il = e, ir = e + 1;
      Cons UL, UR;
      for (int c = 0; c < kNc; ++c) {
        UL.q[c] = ext[il].q[c] + 0.5 * hx[il] * slope[il].q[c];
        UR.q[c] = ext[ir].q[c] - 0.5 * hx[ir] * slope[ir].q[c];
      }
      const Cons fL = flux(UL), fR = flux(UR);
      const double a = std::max(max_speed(UL), max_speed(UR));
      for (int c = 0; c < kNc; ++c)
        F[e].q[c] = 0.5 * (fL.q[c] + fR.q[c]) - 0.5 * a * (UR.q[c] - UL.q[c]);
    }
    out.resize(n);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < kNc; ++c)
        out[i].q[c] = -(F[i + 1].q[c] - F[i].q[c]) / sol.grid.widths[i];
  };

  record(0, U);
  std::vector<Cons> k1, k2, U1(n);
  for (int s = 1; s <= steps; ++s) {
    rhs(U, k1);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < kNc; ++c) U1[i].q[c] = U[i].q[c] + dt * k1[i].q[c];
    rhs(U1, k2);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < kNc; ++c)
        U[i].q[c] = 0.5 * (U[i].q[c] + U1[i].q[c] + dt * k2[i].q[c]);
    record(s, U);

    // gradient blow-up detector
    double gmax = 0.0;
    for (int i = 1; i < n; ++i) {
      const double hh = 0.5 * (sol.grid.widths[i] + sol.grid.widths[i - 1]);
      gmax = std::max(gmax, std::abs(sol.rho.at(s, i) - sol.rho.at(s, i - 1)) / hh);
      gmax = std::max(gmax, std::abs(sol.u3.at(s, i) - sol.u3.at(s, i - 1)) / hh);
      gmax = std::max(gmax, std::abs(sol.T.at(s, i) - sol.T.at(s, i - 1)) / hh);
    }
    if (gmax > opt.blowup_ceiling) {
      sol.blew_up = true;
      sol.reached_time = s * dt;
      sol.times.resize(s + 1);
      sol.wall.resize(s + 1);
      sol.rho.steps = sol.u1.steps = sol.u2.steps = sol.u3.steps = sol.T.steps = s + 1;
      return sol;
    }
  }
  sol.reached_time = horizon;
  return sol;
}

}  // namespace hilbex
