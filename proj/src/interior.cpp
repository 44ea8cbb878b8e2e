#include "hilbex/interior.hpp"

#include <algorithm>
#include <cmath>

namespace hilbex {

double sample_field(const std::vector<double>& nodes, const Trajectory<double>& f, int step,
                    double x) {
  const int n = static_cast<int>(nodes.size());
  int j = static_cast<int>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
  const int i0 = std::clamp(j - 1, 0, n - 4);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    double l = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) l *= (x - nodes[i0 + b]) / (nodes[i0 + a] - nodes[i0 + b]);
    acc += l * f.at(step, i0 + a);
  }
  return acc;
}

double sample_field_d3(const std::vector<double>& nodes, const Trajectory<double>& f, int step,
                       double x) {
  const int n = static_cast<int>(nodes.size());
  int j = static_cast<int>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
  const int i0 = std::clamp(j - 1, 0, n - 4);
  const std::vector<double> xs(nodes.begin() + i0, nodes.begin() + i0 + 4);
  const std::vector<double> w = fd_weights(x, xs, 1);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) acc += w[a] * f.at(step, i0 + a);
  return acc;
}

double sample_field_dt(const std::vector<double>& nodes, const Trajectory<double>& f, int step,
                       double x, double dt) {
  const int last = f.steps - 1;
  auto v = [&](int s) { return sample_field(nodes, f, s, x); };
  if (step == 0) return (-1.5 * v(0) + 2.0 * v(1) - 0.5 * v(2)) / dt;
  if (step == last) return (1.5 * v(last) - 2.0 * v(last - 1) + 0.5 * v(last - 2)) / dt;
  if (step >= 2 && step + 2 <= last)
    return (v(step - 2) - 8.0 * v(step - 1) + 8.0 * v(step + 1) - v(step + 2)) / (12.0 * dt);
  return (v(step + 1) - v(step - 1)) / (2.0 * dt);
}

LocalEuler local_euler(const EulerSolution& euler, int step, double x3) {
  LocalEuler le;
  le.s = euler.interp(step, x3);
  le.d3 = euler.interp_d3(step, x3);
  const double rho = le.s.rho, T = le.s.T;
  const Vec3& u = le.s.u;
  const double d3p = le.d3.rho * T + rho * le.d3.T;
  le.dt.rho = -(le.d3.rho * u[2] + rho * le.d3.u[2]);
  le.dt.u = {-u[2] * le.d3.u[0], -u[2] * le.d3.u[1], -u[2] * le.d3.u[2] - d3p / rho};
  le.dt.T = -u[2] * le.d3.T - (2.0 / 3.0) * T * le.d3.u[2];
  return le;
}

Eigen::ArrayXd dmu_over_sqrt_mu(const FluidPoint& s, const FluidPoint& d,
                                const VelocityGrid& grid) {
  const Eigen::ArrayXd smu = maxwellian(s, grid).values.sqrt();
  Eigen::ArrayXd out(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& v = grid.node(i);
    const double w0 = v[0] - s.u[0], w1 = v[1] - s.u[1], w2 = v[2] - s.u[2];
    const double wsq = w0 * w0 + w1 * w1 + w2 * w2;
    const double dlog = d.rho / s.rho - 1.5 * d.T / s.T +
                        (w0 * d.u[0] + w1 * d.u[1] + w2 * d.u[2]) / s.T +
                        wsq * d.T / (2.0 * s.T * s.T);
    out[i] = smu[i] * dlog;
  }
  return out;
}

Eigen::ArrayXd interior_macro_slice(const MacroProjector& proj, const HyperbolicSolution& order,
                                    int step, double x3) {
  const double r = sample_field(order.nodes, order.rho, step, x3);
  const Vec3 u{sample_field(order.nodes, order.u1, step, x3),
               sample_field(order.nodes, order.u2, step, x3),
               sample_field(order.nodes, order.u3, step, x3)};
  const double th = sample_field(order.nodes, order.theta, step, x3);
  return proj.hydrodynamic_slice(r, u, th);
}

namespace {

// slice of (d_t + v3 d3) mu / sqrt(mu) using the PDE-consistent derivatives
Eigen::ArrayXd stream_dmu(const EulerSolution& euler, const VelocityGrid& grid, int step,
                          double x3) {
  const LocalEuler le = local_euler(euler, step, x3);
  const Eigen::ArrayXd part_t = dmu_over_sqrt_mu(le.s, le.dt, grid);
  const Eigen::ArrayXd part_3 = dmu_over_sqrt_mu(le.s, le.d3, grid);
  Eigen::ArrayXd out(grid.size());
  for (int i = 0; i < grid.size(); ++i) out[i] = part_t[i] + grid.node(i)[2] * part_3[i];
  return out;
}

}  // namespace

Eigen::ArrayXd micro_f2_slice(const EulerSolution& euler, const HyperbolicSolution& order1,
                              const CollisionOperator& op, int step, double x3) {
  const VelocityGrid& grid = op.grid();
  const MacroProjector& proj = op.projector();
  const Eigen::ArrayXd dmu = stream_dmu(euler, grid, step, x3);
  const Eigen::ArrayXd lin = op.invert(proj.micro(-dmu));
  const Eigen::ArrayXd f1 = interior_macro_slice(proj, order1, step, x3);
  return lin + 0.5 * proj.pair_macro(f1, f1);
}

Eigen::ArrayXd micro_f2_slice_direct(const EulerSolution& euler, const HyperbolicSolution& order1,
                                     const CollisionOperator& op, int step, double x3) {
  const VelocityGrid& grid = op.grid();
  const MacroProjector& proj = op.projector();
  const LocalEuler le = local_euler(euler, step, x3);
  const BurnettTensors bt = burnett(le.s, grid);
  const double T = le.s.T;

  // stream derivative of mu through the Burnett functions: in slab geometry
  // only the x3 gradients survive, sum_l d3(u_l) A_{3l} + (d3 T / sqrt(T)) B_3
  Eigen::ArrayXd gsum = Eigen::ArrayXd::Zero(grid.size());
  for (int l = 0; l < 3; ++l) gsum += le.d3.u[l] * bt.A[2][l];
  gsum += (le.d3.T / std::sqrt(T)) * bt.B[2];
  const Eigen::ArrayXd lin = -op.invert(proj.micro(gsum));

  // quadratic part of the first-order coupling, written out
  const double r1 = sample_field(order1.nodes, order1.rho, step, x3);
  const Vec3 u1{sample_field(order1.nodes, order1.u1, step, x3),
                sample_field(order1.nodes, order1.u2, step, x3),
                sample_field(order1.nodes, order1.u3, step, x3)};
  const double th1 = sample_field(order1.nodes, order1.theta, step, x3);
  (void)r1;  // density perturbation does not enter the microscopic part
  Eigen::ArrayXd quad = Eigen::ArrayXd::Zero(grid.size());
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < 3; ++j) quad += (u1[l] * u1[j] / (2.0 * T)) * bt.A[l][j];
  for (int l = 0; l < 3; ++l) quad += (th1 / (3.0 * std::pow(T, 1.5))) * u1[l] * bt.B[l];
  // (|w|^2/T - 5)^2 sqrt(mu) piece
  const Eigen::ArrayXd& smu = proj.sqrt_mu();
  Eigen::ArrayXd wsq(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& v = grid.node(i);
    const double w0 = v[0] - le.s.u[0], w1 = v[1] - le.s.u[1], w2 = v[2] - le.s.u[2];
    wsq[i] = w0 * w0 + w1 * w1 + w2 * w2;
  }
  const Eigen::ArrayXd sq = (wsq / T - 5.0).square() * smu;
  quad += (th1 * th1 / (72.0 * T * T)) * proj.micro(sq);
  return lin + proj.micro(quad);
}

Eigen::ArrayXd micro_f3_slice(const EulerSolution& euler, const HyperbolicSolution& order1,
                              const HyperbolicSolution& order2, const CollisionOperator& op,
                              int step, double x3) {
  const VelocityGrid& grid = op.grid();
  const MacroProjector& proj = op.projector();
  const LocalEuler le = local_euler(euler, step, x3);

  // (d_t + v3 d3)(sqrt(mu) f_1) / sqrt(mu) = (d f_1-params piece) + f_1 * d log sqrt(mu)
  auto params = [&](int s) {
    return std::array<double, 5>{sample_field(order1.nodes, order1.rho, s, x3),
                                 sample_field(order1.nodes, order1.u1, s, x3),
                                 sample_field(order1.nodes, order1.u2, s, x3),
                                 sample_field(order1.nodes, order1.u3, s, x3),
                                 sample_field(order1.nodes, order1.theta, s, x3)};
  };
  const std::array<double, 5> p0 = params(step);
  std::array<double, 5> pt{}, p3{};
  {
    const double dt = order1.dt;
    const int last = order1.rho.steps - 1;
    auto dt_of = [&](const Trajectory<double>& f) {
      if (step == 0)
        return (-1.5 * sample_field(order1.nodes, f, 0, x3) +
                2.0 * sample_field(order1.nodes, f, 1, x3) -
                0.5 * sample_field(order1.nodes, f, 2, x3)) /
               dt;
      if (step == last)
        return (1.5 * sample_field(order1.nodes, f, last, x3) -
                2.0 * sample_field(order1.nodes, f, last - 1, x3) +
                0.5 * sample_field(order1.nodes, f, last - 2, x3)) /
               dt;
      return (sample_field(order1.nodes, f, step + 1, x3) -
              sample_field(order1.nodes, f, step - 1, x3)) /
             (2.0 * dt);
    };
    pt = {dt_of(order1.rho), dt_of(order1.u1), dt_of(order1.u2), dt_of(order1.u3),
          dt_of(order1.theta)};
    p3 = {sample_field_d3(order1.nodes, order1.rho, step, x3),
          sample_field_d3(order1.nodes, order1.u1, step, x3),
          sample_field_d3(order1.nodes, order1.u2, step, x3),
          sample_field_d3(order1.nodes, order1.u3, step, x3),
          sample_field_d3(order1.nodes, order1.theta, step, x3)};
  }

  // partial derivative of the hydrodynamic slice in its parameters, holding
  // the background state fixed
  auto param_slice = [&](const std::array<double, 5>& q) {
    return proj.hydrodynamic_slice(q[0], {q[1], q[2], q[3]}, q[4]);
  };
  // background-variation part: d(hydro slice)/d(state) contracted with state
  // derivatives, evaluated by a centered difference in a scalar dial
  auto state_variation = [&](const FluidPoint& d) {
    const double eps = 1e-6;
    FluidPoint sp = le.s, sm = le.s;
    sp.rho += eps * d.rho;
    sm.rho -= eps * d.rho;
    sp.T += eps * d.T;
    sm.T -= eps * d.T;
    for (int c = 0; c < 3; ++c) {
      sp.u[c] += eps * d.u[c];
      sm.u[c] -= eps * d.u[c];
    }
    const MacroProjector prp(sp, grid), prm(sm, grid);
    const Eigen::ArrayXd fp = prp.hydrodynamic_slice(p0[0], {p0[1], p0[2], p0[3]}, p0[4]);
    const Eigen::ArrayXd fm = prm.hydrodynamic_slice(p0[0], {p0[1], p0[2], p0[3]}, p0[4]);
    return ((fp - fm) / (2.0 * eps)).eval();
  };

  // (d F_1)/sqrt(mu) = d[f_1 slice] + f_1 d(log sqrt(mu)); the slice carries
  // one factor sqrt(mu), F_1 = sqrt(mu) f_1 carries two.
  const Eigen::ArrayXd f1_here = param_slice(p0);
  const Eigen::ArrayXd smu_here = proj.sqrt_mu();
  auto dlog = [&](const FluidPoint& d) {
    Eigen::ArrayXd out(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
      const Vec3& v = grid.node(i);
      const double w0 = v[0] - le.s.u[0], w1 = v[1] - le.s.u[1], w2 = v[2] - le.s.u[2];
      const double wsq = w0 * w0 + w1 * w1 + w2 * w2;
      out[i] = d.rho / le.s.rho - 1.5 * d.T / le.s.T +
               (w0 * d.u[0] + w1 * d.u[1] + w2 * d.u[2]) / le.s.T +
               wsq * d.T / (2.0 * le.s.T * le.s.T);
    }
    return out;
  };
  (void)smu_here;
  const Eigen::ArrayXd dlog_t = dlog(le.dt), dlog_3 = dlog(le.d3);
  const Eigen::ArrayXd dt_part = param_slice(pt) + state_variation(le.dt) +
                                 0.5 * f1_here * dlog_t;
  const Eigen::ArrayXd d3_part = param_slice(p3) + state_variation(le.d3) +
                                 0.5 * f1_here * dlog_3;
  Eigen::ArrayXd stream(grid.size());
  for (int i = 0; i < grid.size(); ++i)
    stream[i] = dt_part[i] + grid.node(i)[2] * d3_part[i];

  const Eigen::ArrayXd lin = op.invert(proj.micro(-stream));
  const Eigen::ArrayXd f1 = interior_macro_slice(proj, order1, step, x3);
  const Eigen::ArrayXd f2m = interior_macro_slice(proj, order2, step, x3);
  return lin + proj.pair_macro(f1, f2m);
}

double InteriorSources::sample_f(double t, double x, int i) const {
  const int last = f1.steps - 1;
  const double s = std::clamp(t / dt, 0.0, static_cast<double>(last));
  const int s0 = std::min(static_cast<int>(s), last - 1);
  const double a = s - s0;
  const Trajectory<double>& F = i == 0 ? f1 : (i == 1 ? f2 : f3);
  return (1.0 - a) * sample_field(nodes, F, s0, x) + a * sample_field(nodes, F, s0 + 1, x);
}

double InteriorSources::sample_g(double t, double x) const {
  const int last = g.steps - 1;
  const double s = std::clamp(t / dt, 0.0, static_cast<double>(last));
  const int s0 = std::min(static_cast<int>(s), last - 1);
  const double a = s - s0;
  return (1.0 - a) * sample_field(nodes, g, s0, x) + a * sample_field(nodes, g, s0 + 1, x);
}

InteriorSources build_interior_sources(const EulerSolution& euler,
                                       const HyperbolicSolution& order1,
                                       const CollisionBackend& backend, const VelocityGrid& grid,
                                       int threads) {
  InteriorSources out;
  out.nodes = order1.nodes;
  out.dt = order1.dt;
  const int steps = order1.rho.steps;
  const int n = static_cast<int>(out.nodes.size());

  // Burnett-moment fields of (I-P) f_2: q_i = T <A_{i3}, micro>, qB = 2 T^{3/2} <B_3, micro>
  Trajectory<double> q1, q2, q3, qB;
  q1.resize(steps, n);
  q2.resize(steps, n);
  q3.resize(steps, n);
  qB.resize(steps, n);
  parallel_for(static_cast<std::size_t>(steps), resolve_thread_count(threads), [&](std::size_t s) {
    const int step = static_cast<int>(s);
    for (int j = 0; j < n; ++j) {
      const double x = out.nodes[j];
      const FluidPoint st = euler.interp(step, x);
      const CollisionOperator op(backend, st, grid);
      const Eigen::ArrayXd micro = micro_f2_slice(euler, order1, op, step, x);
      const BurnettTensors bt = burnett(st, grid);
      q1.at(step, j) = st.T * grid.inner(bt.A[0][2], micro);
      q2.at(step, j) = st.T * grid.inner(bt.A[1][2], micro);
      q3.at(step, j) = st.T * grid.inner(bt.A[2][2], micro);
      qB.at(step, j) = 2.0 * std::pow(st.T, 1.5) * grid.inner(bt.B[2], micro);
    }
  });

  out.f1.resize(steps, n);
  out.f2.resize(steps, n);
  out.f3.resize(steps, n);
  out.g.resize(steps, n);
  for (int s = 0; s < steps; ++s) {
    for (int j = 0; j < n; ++j) {
      const double x = out.nodes[j];
      const double f1v = -sample_field_d3(out.nodes, q1, s, x);
      const double f2v = -sample_field_d3(out.nodes, q2, s, x);
      const double f3v = -sample_field_d3(out.nodes, q3, s, x);
      out.f1.at(s, j) = f1v;
      out.f2.at(s, j) = f2v;
      out.f3.at(s, j) = f3v;
      const FluidPoint st = euler.interp(s, x);
      // energy source: - d3 ( qB + 2 sum_j u_j q_j ) - 2 u . f
      Trajectory<double> tmp;  // avoided: assemble the combination directly
      (void)tmp;
      double d3comb = -sample_field_d3(out.nodes, qB, s, x);
      // d3(2 u_j q_j) = 2 (d3 u_j) q_j + 2 u_j d3 q_j
      const FluidPoint d3st = euler.interp_d3(s, x);
      const double qv[3] = {sample_field(out.nodes, q1, s, x), sample_field(out.nodes, q2, s, x),
                            sample_field(out.nodes, q3, s, x)};
      const double dqv[3] = {sample_field_d3(out.nodes, q1, s, x),
                             sample_field_d3(out.nodes, q2, s, x),
                             sample_field_d3(out.nodes, q3, s, x)};
      for (int c = 0; c < 3; ++c) d3comb -= 2.0 * (d3st.u[c] * qv[c] + st.u[c] * dqv[c]);
      const double u_dot_f = st.u[0] * f1v + st.u[1] * f2v + st.u[2] * f3v;
      out.g.at(s, j) = d3comb - 2.0 * u_dot_f;
    }
  }
  return out;
}

}  // namespace hilbex
