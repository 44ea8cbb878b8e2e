#include "hilbex/knudsen.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace hilbex {

Eigen::ArrayXd knudsen_weight(const FluidPoint& wall_state, const VelocityGrid& grid,
                              double kappa_w, double a_frak) {
  const Eigen::ArrayXd mu0 = maxwellian(wall_state, grid).values;
  Eigen::ArrayXd w(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double v2 = norm2_3(grid.node(i));
    w[i] = std::pow(1.0 + v2, 0.5 * kappa_w) * std::pow(mu0[i], -a_frak);
  }
  return w;
}

SolvabilityReport check_solvability(const HalfSpaceProblem& problem, const VelocityGrid& grid,
                                    double tol_solvability) {
  SolvabilityReport rep;
  rep.tol = tol_solvability;
  const MacroProjector proj(problem.wall_state, grid);
  if (problem.source) {
    for (int j = 0; j < problem.eta.nodes(); ++j) {
      const Eigen::ArrayXd s = problem.source(problem.eta.y[j]);
      rep.micro_defect = std::max(rep.micro_defect, proj.macro_norm(s));
    }
  }
  const Eigen::ArrayXd smu = proj.sqrt_mu();
  const Vec3& u0 = problem.wall_state.u;
  std::array<double, 4> m{0, 0, 0, 0};
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& v = grid.node(i);
    const double base = grid.weight(i) * v[2] * problem.f_b[i] * smu[i];
    m[0] += base;
    m[1] += base * (v[0] - u0[0]);
    m[2] += base * (v[1] - u0[1]);
    const double w2 = (v[0] - u0[0]) * (v[0] - u0[0]) + (v[1] - u0[1]) * (v[1] - u0[1]) +
                      (v[2] - u0[2]) * (v[2] - u0[2]);
    m[3] += base * w2;
  }
  rep.moments = m;
  double worst = rep.micro_defect;
  for (double x : m) worst = std::max(worst, std::abs(x));
  rep.pass = worst <= tol_solvability;
  return rep;
}

namespace {

// moments mu_k(b) = int_0^1 e^{-b(1-xi)} xi^k dxi, k = 0..2
void exp_moments(double b, double& m0, double& m1, double& m2) {
  if (b < 1e-3) {
    m0 = 1.0 - b * (0.5 - b * (1.0 / 6.0 - b / 24.0));
    m1 = 0.5 - b * (1.0 / 6.0 - b * (1.0 / 24.0 - b / 120.0));
    m2 = 1.0 / 3.0 - b * (1.0 / 12.0 - b * (1.0 / 60.0 - b / 360.0));
    return;
  }
  m0 = -std::expm1(-b) / b;
  m1 = (1.0 - m0) / b;
  m2 = (1.0 - 2.0 * m1) / b;
}

// weights of the quadratic source reconstruction at {start, mid, end} of a
// cell, against the upwinded exponential kernel
void source_weights(double b, double& c0, double& cm, double& c1) {
  double m0, m1, m2;
  exp_moments(b, m0, m1, m2);
  c0 = 2.0 * m2 - 3.0 * m1 + m0;
  cm = -4.0 * m2 + 4.0 * m1;
  c1 = 2.0 * m2 - m1;
}

}  // namespace

KnudsenSolution solve_halfspace(const HalfSpaceProblem& problem, const CollisionOperator& op,
                                const KnudsenOptions& opt, const Trajectory<double>* warm_start) {
  const VelocityGrid& grid = op.grid();
  const int nv = grid.size();
  const int ne = problem.eta.nodes();
  const std::vector<double>& eta = problem.eta.y;
  if (problem.f_b.size() != nv)
    throw std::invalid_argument("solve_halfspace: boundary datum not on the velocity grid");
  for (int i = 0; i < nv; ++i)
    if (grid.node(i)[2] > 0.0 && problem.f_b[i] != 0.0)
      throw std::invalid_argument("solve_halfspace: f_b must vanish on v3 > 0");

  const Eigen::ArrayXd weight = knudsen_weight(problem.wall_state, grid, problem.kappa_w,
                                               problem.a_frak);

  // ordered sweeps: downward for v3 < 0, then upward for v3 > 0
  std::vector<int> down, up;
  for (int i = 0; i < nv; ++i) (grid.node(i)[2] < 0.0 ? down : up).push_back(i);

  KnudsenSolution sol;
  sol.eta = eta;
  sol.f.resize(ne, nv);
  if (warm_start && warm_start->steps == ne && warm_start->nodes == nv) sol.f = *warm_start;

  // S samples at nodes and midpoints
  std::vector<Eigen::ArrayXd> Sn(ne, Eigen::ArrayXd::Zero(nv));
  std::vector<Eigen::ArrayXd> Sm(ne - 1, Eigen::ArrayXd::Zero(nv));
  if (problem.source) {
    for (int j = 0; j < ne; ++j) Sn[j] = problem.source(eta[j]);
    for (int j = 0; j + 1 < ne; ++j) Sm[j] = problem.source(0.5 * (eta[j] + eta[j + 1]));
  }

  auto weighted_sup = [&](const Trajectory<double>& f) {
    double m = 0.0;
    for (int j = 0; j < ne; ++j)
      for (int i = 0; i < nv; ++i) m = std::max(m, weight[i] * std::abs(f.at(j, i)));
    return m;
  };

  Trajectory<double> fnew;
  fnew.resize(ne, nv);

  // one full transport pass with the gain term lagged
  auto sweep = [&](const Trajectory<double>& f, Trajectory<double>& out) {
    // gain at nodes: K f = nu f - L f (the full collision coupling)
    std::vector<Eigen::ArrayXd> q(ne);
    for (int j = 0; j < ne; ++j) {
      if (opt.pure_absorption) {
        q[j] = Sn[j];
        continue;
      }
      Eigen::ArrayXd fj(nv);
      for (int i = 0; i < nv; ++i) fj[i] = f.at(j, i);
      q[j] = op.nu() * fj - op.apply(fj) + Sn[j];
    }
    // incoming characteristics from eta_max: zero closure
    for (int i : down) {
      const double av = -grid.node(i)[2];
      const double nu_i = op.nu()[i];
      out.at(ne - 1, i) = 0.0;
      for (int j = ne - 2; j >= 0; --j) {
        const double h = eta[j + 1] - eta[j];
        const double b = nu_i * h / av;
        double c0, cm, c1;
        source_weights(b, c0, cm, c1);
        // characteristic runs from eta_{j+1} down to eta_j
        const double q_start = q[j + 1][i], q_end = q[j][i];
        const double q_mid = problem.source
                                 ? 0.5 * (q[j][i] + q[j + 1][i] - Sn[j][i] - Sn[j + 1][i]) + Sm[j][i]
                                 : 0.5 * (q[j][i] + q[j + 1][i]);
        out.at(j, i) = out.at(j + 1, i) * std::exp(-b) +
                       (h / av) * (c0 * q_start + cm * q_mid + c1 * q_end);
      }
    }
    // wall reflection: incoming (v3 > 0) from fresh outgoing plus the datum
    for (int i : up) {
      const int r = grid.reflect_v3(i);
      out.at(0, i) = out.at(0, r) + problem.f_b[r];
    }
    for (int i : up) {
      const double av = grid.node(i)[2];
      const double nu_i = op.nu()[i];
      for (int j = 1; j < ne; ++j) {
        const double h = eta[j] - eta[j - 1];
        const double b = nu_i * h / av;
        double c0, cm, c1;
        source_weights(b, c0, cm, c1);
        const double q_start = q[j - 1][i], q_end = q[j][i];
        const double q_mid = problem.source
                                 ? 0.5 * (q[j][i] + q[j - 1][i] - Sn[j][i] - Sn[j - 1][i]) + Sm[j - 1][i]
                                 : 0.5 * (q[j][i] + q[j - 1][i]);
        out.at(j, i) = out.at(j - 1, i) * std::exp(-b) +
                       (h / av) * (c0 * q_start + cm * q_mid + c1 * q_end);
      }
    }
  };

  // source iteration with optional Anderson(depth) relaxation on stall
  std::deque<std::vector<double>> hist_x, hist_g;
  double prev_delta = -1.0;
  bool anderson = false;
  int stall = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    sweep(sol.f, fnew);
    double delta = 0.0, scale = 1.0;
    for (int j = 0; j < ne; ++j)
      for (int i = 0; i < nv; ++i) {
        delta = std::max(delta, weight[i] * std::abs(fnew.at(j, i) - sol.f.at(j, i)));
        scale = std::max(scale, weight[i] * std::abs(fnew.at(j, i)));
      }
    sol.iterations = it + 1;
    sol.residual = delta / scale;
    if (delta <= opt.tol_solve * scale) {
      sol.f = fnew;
      sol.converged = true;
      break;
    }
    if (prev_delta > 0.0 && delta > 0.9 * prev_delta) ++stall;
    prev_delta = delta;
    if (opt.allow_anderson && (stall >= 5 || it >= 8)) anderson = true;

    if (!anderson) {
      sol.f = fnew;
      continue;
    }
    // Anderson mixing on the flattened iterates
    const std::size_t N = sol.f.a.size();
    std::vector<double> x(sol.f.a), g(fnew.a);
    hist_x.push_back(x);
    hist_g.push_back(g);
    while (static_cast<int>(hist_x.size()) > opt.anderson_depth + 1) {
      hist_x.pop_front();
      hist_g.pop_front();
    }
    const int m = static_cast<int>(hist_x.size()) - 1;
    if (m >= 1) {
      Eigen::MatrixXd dR(N, m);
      std::vector<double> r_now(N);
      for (std::size_t p = 0; p < N; ++p) r_now[p] = g[p] - x[p];
      for (int c = 0; c < m; ++c)
        for (std::size_t p = 0; p < N; ++p)
          dR(p, c) = r_now[p] - (hist_g[c][p] - hist_x[c][p]);
      Eigen::VectorXd rn(N);
      for (std::size_t p = 0; p < N; ++p) rn(p) = r_now[p];
      const Eigen::VectorXd gamma =
          (dR.transpose() * dR + 1e-14 * Eigen::MatrixXd::Identity(m, m))
              .ldlt()
              .solve(dR.transpose() * rn);
      for (std::size_t p = 0; p < N; ++p) {
        double acc = g[p];
        for (int c = 0; c < m; ++c) acc -= gamma(c) * (g[p] - hist_g[c][p] + 0.0);
        sol.f.a[p] = acc;
      }
      // proper AA update: x_{k+1} = g_k - sum gamma_c (g_k - g_c)
    } else {
      sol.f = fnew;
    }
  }
  if (!sol.converged)
    throw std::runtime_error("solve_halfspace: no convergence, residual = " +
                             std::to_string(sol.residual));

  // wall relation defect (diagnostic; held by construction)
  for (int i : up) {
    const int r = grid.reflect_v3(i);
    sol.wall_relation_defect = std::max(
        sol.wall_relation_defect,
        std::abs(sol.f.at(0, i) - sol.f.at(0, r) - problem.f_b[r]));
  }

  // fitted decay rate of the weighted sup profile
  sol.profile.resize(ne);
  for (int j = 0; j < ne; ++j) {
    double m = 0.0;
    for (int i = 0; i < nv; ++i) m = std::max(m, weight[i] * std::abs(sol.f.at(j, i)));
    sol.profile[j] = m;
  }
  {
    std::vector<double> xs, ys;
    const double hmax = eta.back();
    for (int j = 0; j < ne; ++j)
      if (eta[j] >= 0.3 * hmax && eta[j] <= 0.9 * hmax && sol.profile[j] > 1e-280) {
        xs.push_back(eta[j]);
        ys.push_back(std::log(sol.profile[j]));
      }
    double sup_all = 0.0;
    for (double p : sol.profile) sup_all = std::max(sup_all, p);
    if (sup_all <= 1e-280) {
      sol.zeta = problem.zeta0;  // identically zero solution: report the declared rate
    } else if (xs.size() >= 3) {
      sol.zeta = -fit_linear(xs, ys).slope;
      if (!(sol.zeta > 0.0))
        throw std::runtime_error(
            "solve_halfspace: fitted decay rate is not positive (eta_max too small?)");
    } else {
      throw std::runtime_error("solve_halfspace: profile too degenerate to fit a decay rate");
    }
  }
  return sol;
}

Eigen::ArrayXd CorrectionFields::fhat_slice(int j, const VelocityGrid& grid) const {
  const MacroProjector proj(wall_state, grid);
  const Eigen::ArrayXd& smu = proj.sqrt_mu();
  Eigen::ArrayXd out(grid.size());
  const Vec3& u0 = wall_state.u;
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& v = grid.node(i);
    const double w1 = v[0] - u0[0], w2 = v[1] - u0[1], w3 = v[2] - u0[2];
    const double wsq = w1 * w1 + w2 * w2 + w3 * w3;
    out[i] = (A[j] * v[2] + B[0][j] * v[2] * w1 + B[1][j] * v[2] * w2 + B[2][j] +
              C[j] * v[2] * wsq) *
             smu[i];
  }
  return out;
}

Eigen::ArrayXd CorrectionFields::defect_slice(int j, const VelocityGrid& grid) const {
  const MacroProjector proj(wall_state, grid);
  const Eigen::ArrayXd& smu = proj.sqrt_mu();
  const double T0 = wall_state.T;
  Eigen::ArrayXd out(grid.size());
  const Vec3& u0 = wall_state.u;
  const double a = a_s[j], c = c_s[j];
  const double b1 = b_s[0][j], b2 = b_s[1][j], b3 = b_s[2][j];
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& v = grid.node(i);
    const double w1 = v[0] - u0[0], w2 = v[1] - u0[1], w3 = v[2] - u0[2];
    const double wsq = w1 * w1 + w2 * w2 + w3 * w3;
    const double v3 = v[2];
    const double dAdeta = 2.0 * a / T0 + 3.0 * c;
    const double transport = dAdeta * v3 * v3 + (b1 / T0) * v3 * v3 * w1 +
                             (b2 / T0) * v3 * v3 * w2 + b3 * v3 -
                             (a / (5.0 * T0 * T0)) * v3 * v3 * wsq;
    const double source = a + b1 * w1 + b2 * w2 + b3 * w3 + c * wsq;
    out[i] = (transport - source) * smu[i];
  }
  return out;
}

CorrectionFields build_correction(const FluidPoint& wall_state, const LayerGrid& eta,
                                  const std::function<double(double)>& a_hat,
                                  const std::array<std::function<double(double)>, 3>& b_hat,
                                  const std::function<double(double)>& c_hat) {
  const int n = eta.nodes();
  CorrectionFields out;
  out.wall_state = wall_state;
  out.eta = eta.y;
  std::vector<double> a(n), c(n);
  std::array<std::vector<double>, 3> b;
  for (auto& v : b) v.resize(n);
  for (int j = 0; j < n; ++j) {
    a[j] = a_hat(eta.y[j]);
    c[j] = c_hat(eta.y[j]);
    for (int d = 0; d < 3; ++d) b[d][j] = b_hat[d](eta.y[j]);
  }
  // decay check on the sampled coefficients
  double head = 0.0, tail = 0.0;
  for (int j = 0; j < n; ++j) {
    const double m = std::abs(a[j]) + std::abs(b[0][j]) + std::abs(b[1][j]) + std::abs(b[2][j]) +
                     std::abs(c[j]);
    if (eta.y[j] < 0.5 * eta.y_max())
      head = std::max(head, m);
    else
      tail = std::max(tail, m);
  }
  if (head > 0.0 && tail > 0.1 * head)
    throw std::invalid_argument("build_correction: source coefficients do not decay on the grid");

  const double T0 = wall_state.T;
  std::vector<double> integ(n);
  for (int j = 0; j < n; ++j) integ[j] = 2.0 * a[j] / T0 + 3.0 * c[j];
  const std::vector<double> IA = cumulative_integral_from_right(eta.y, integ);
  out.A.resize(n);
  for (int j = 0; j < n; ++j) out.A[j] = -IA[j];
  for (int d = 0; d < 2; ++d) {
    const std::vector<double> I = cumulative_integral_from_right(eta.y, b[d]);
    out.B[d].resize(n);
    for (int j = 0; j < n; ++j) out.B[d][j] = -I[j] / T0;
  }
  {
    const std::vector<double> I = cumulative_integral_from_right(eta.y, b[2]);
    out.B[2].resize(n);
    for (int j = 0; j < n; ++j) out.B[2][j] = -I[j];
  }
  {
    const std::vector<double> I = cumulative_integral_from_right(eta.y, a);
    out.C.resize(n);
    for (int j = 0; j < n; ++j) out.C[j] = I[j] / (5.0 * T0 * T0);
  }
  out.a_s = a;
  out.b_s = b;
  out.c_s = c;
  return out;
}

KnudsenSourceSplit assemble_knudsen_source(int order, const CollisionOperator& wall_op,
                                           const Eigen::ArrayXd& macro_wall_sum,
                                           const KnudsenSolution* fhat2) {
  KnudsenSourceSplit out;
  if (order <= 2) return out;  // S_1 = S_{1,1} = S_{1,2} = S_{2,1} = 0; S_2 = 0 with fhat_1 = 0
  if (order > 3)
    throw std::invalid_argument("assemble_knudsen_source: orders above 3 are out of desk scale");
  if (fhat2 == nullptr || fhat2->f.steps == 0) return out;
  const MacroProjector& proj = wall_op.projector();
  Eigen::ArrayXd g = macro_wall_sum;
  const KnudsenSolution sol = *fhat2;  // copy for capture lifetime
  const std::vector<double> eta = sol.eta;
  out.zero = false;
  auto eval = [&proj, &wall_op, g, sol, eta](double e) {
    // locate bracketing nodes and interpolate the fhat_2 slice linearly
    const int n = static_cast<int>(eta.size());
    int j = 0;
    while (j + 1 < n - 1 && eta[j + 1] < e) ++j;
    const double t = std::clamp((e - eta[j]) / (eta[j + 1] - eta[j]), 0.0, 1.0);
    Eigen::ArrayXd fj(sol.f.nodes);
    for (int i = 0; i < sol.f.nodes; ++i)
      fj[i] = (1.0 - t) * sol.f.at(j, i) + t * sol.f.at(j + 1, i);
    return wall_op.apply(proj.pair_macro(g, fj));
  };
  out.S2 = eval;
  out.S1 = [n = proj.grid().size()](double) { return Eigen::ArrayXd::Zero(n).eval(); };
  return out;
}

Eigen::ArrayXd boundary_mismatch(const Eigen::ArrayXd& wall_sum, const VelocityGrid& grid) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    if (grid.node(i)[2] < 0.0) {
      out[i] = wall_sum[i] - wall_sum[grid.reflect_v3(i)];
    }
  }
  return out;
}

}  // namespace hilbex
