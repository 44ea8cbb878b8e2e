#include <cmath>
#include <stdexcept>

#include "fd1d.hpp"
#include "hilbex/fluid.hpp"

namespace hilbex {

std::vector<double> linear_solver_nodes(const Grid1D& g) {
  std::vector<double> x;
  x.reserve(g.cells() + 2);
  x.push_back(0.0);
  for (double c : g.centers) x.push_back(c);
  x.push_back(g.xmax());
  return x;
}

namespace {
constexpr double kDissipation = 0.015;
// wall parity per component (phi, Phi1, Phi2, Phi3, theta)
constexpr double kParity[5] = {1.0, 1.0, 1.0, -1.0, 1.0};
}  // namespace

template <class S>
struct AcousticCore {
  fd1d::Mesh mesh;
  double k1 = 0.0, k2 = 0.0;
  bool closed_outer = false;

  explicit AcousticCore(const std::vector<double>& nodes) : mesh(nodes) {}

  void rhs(const std::vector<std::vector<S>>& q, std::vector<std::vector<S>>& out,
           std::array<fd1d::Padded<S>, 5>& pad, fd1d::Padded<S>& psum) const {
    const int n = mesh.n();
    const S i1 = make_ik(k1), i2 = make_ik(k2);
    for (int c = 0; c < 5; ++c) pad[c].fill(q[c], kParity[c], closed_outer, kParity[c]);
    std::vector<S> sum(n);
    for (int j = 0; j < n; ++j) sum[j] = q[0][j] + q[4][j];
    psum.fill(sum, 1.0, closed_outer, 1.0);
    for (int c = 0; c < 5; ++c) std::fill(out[c].begin(), out[c].end(), S(0.0));
    for (int j = 0; j < n; ++j) {
      const S divPhi = i1 * q[1][j] + i2 * q[2][j] + pad[3].d1(mesh, j);
      out[0][j] = -divPhi;
      out[1][j] = -i1 * sum[j];
      out[2][j] = -i2 * sum[j];
      out[3][j] = -psum.d1(mesh, j);
      out[4][j] = -(2.0 / 3.0) * divPhi;
    }
    const double speed = std::sqrt(5.0 / 3.0) * (1.0 + std::sqrt(k1 * k1 + k2 * k2));
    for (int c = 0; c < 5; ++c) fd1d::add_dissipation(mesh, pad[c], kDissipation, speed, out[c]);
    out[3][0] = S(0.0);  // characteristic wall (also implied by the odd mirror)
  }

  static S make_ik(double k);
};

template <>
double AcousticCore<double>::make_ik(double k) {
  if (k != 0.0) throw std::invalid_argument("real acoustic path requires k_par = 0");
  return 0.0;
}
template <>
Cplx AcousticCore<Cplx>::make_ik(double k) {
  return Cplx(0.0, k);
}

namespace {

template <class S, class Record>
void acoustic_march(AcousticCore<S>& core, std::vector<std::vector<S>>& q, int steps, double dt,
                    const Record& record) {
  const int n = core.mesh.n();
  std::vector<std::vector<S>> k1(5, std::vector<S>(n)), k2 = k1, k3 = k1, k4 = k1, tmp = k1;
  std::array<fd1d::Padded<S>, 5> pad{fd1d::Padded<S>(n), fd1d::Padded<S>(n), fd1d::Padded<S>(n),
                                     fd1d::Padded<S>(n), fd1d::Padded<S>(n)};
  fd1d::Padded<S> psum(n);
  record(0);
  for (int s = 1; s <= steps; ++s) {
    core.rhs(q, k1, pad, psum);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j) tmp[c][j] = q[c][j] + 0.5 * dt * k1[c][j];
    core.rhs(tmp, k2, pad, psum);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j) tmp[c][j] = q[c][j] + 0.5 * dt * k2[c][j];
    core.rhs(tmp, k3, pad, psum);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j) tmp[c][j] = q[c][j] + dt * k3[c][j];
    core.rhs(tmp, k4, pad, psum);
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < n; ++j)
        q[c][j] += dt / 6.0 * (k1[c][j] + 2.0 * k2[c][j] + 2.0 * k3[c][j] + k4[c][j]);
    q[3][0] = S(0.0);
    record(s);
  }
}

std::vector<double> trapezoid_weights(const std::vector<double>& x) {
  std::vector<double> qw(x.size(), 0.0);
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    const double h = x[j + 1] - x[j];
    qw[j] += 0.5 * h;
    qw[j + 1] += 0.5 * h;
  }
  return qw;
}

}  // namespace

AcousticSolution solve_acoustic(const AcousticInit& init, double horizon, const Grid1D& grid,
                                double dt, bool closed_outer) {
  AcousticSolution sol;
  sol.nodes = linear_solver_nodes(grid);
  AcousticCore<double> core(sol.nodes);
  core.closed_outer = closed_outer;
  const int n = static_cast<int>(sol.nodes.size());
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon / dt)));
  sol.dt = horizon / steps;

  std::vector<std::vector<double>> q(5, std::vector<double>(n, 0.0));
  for (int j = 0; j < n; ++j) {
    const double x = sol.nodes[j];
    q[0][j] = init.phi0(x);
    q[1][j] = init.Phi0[0](x);
    q[2][j] = init.Phi0[1](x);
    q[3][j] = init.Phi0[2](x);
    q[4][j] = init.theta0(x);
  }
  if (std::abs(q[3][0]) > 1e-12)
    throw std::invalid_argument("solve_acoustic: Phi0_3 must vanish at the wall");
  q[3][0] = 0.0;

  sol.phi.resize(steps + 1, n);
  sol.Phi1.resize(steps + 1, n);
  sol.Phi2.resize(steps + 1, n);
  sol.Phi3.resize(steps + 1, n);
  sol.theta.resize(steps + 1, n);
  sol.times.resize(steps + 1);
  sol.energy.resize(steps + 1);
  const std::vector<double> qw = trapezoid_weights(sol.nodes);

  auto record = [&](int s) {
    double en = 0.0;
    for (int j = 0; j < n; ++j) {
      sol.phi.at(s, j) = q[0][j];
      sol.Phi1.at(s, j) = q[1][j];
      sol.Phi2.at(s, j) = q[2][j];
      sol.Phi3.at(s, j) = q[3][j];
      sol.theta.at(s, j) = q[4][j];
      en += qw[j] * 0.5 *
            (q[0][j] * q[0][j] + q[1][j] * q[1][j] + q[2][j] * q[2][j] + q[3][j] * q[3][j] +
             1.5 * q[4][j] * q[4][j]);
    }
    sol.times[s] = s * sol.dt;
    sol.energy[s] = en;
  };
  acoustic_march(core, q, steps, sol.dt, record);
  return sol;
}

AcousticModeSolution solve_acoustic_mode(const AcousticModeInit& init,
                                         const std::array<double, 2>& kpar, double horizon,
                                         const Grid1D& grid, double dt, bool closed_outer) {
  AcousticModeSolution sol;
  sol.nodes = linear_solver_nodes(grid);
  AcousticCore<Cplx> core(sol.nodes);
  core.closed_outer = closed_outer;
  core.k1 = kpar[0];
  core.k2 = kpar[1];
  const int n = static_cast<int>(sol.nodes.size());
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon / dt)));
  sol.dt = horizon / steps;

  std::vector<std::vector<Cplx>> q(5, std::vector<Cplx>(n, Cplx(0.0)));
  for (int j = 0; j < n; ++j) {
    const double x = sol.nodes[j];
    q[0][j] = init.phi0(x);
    q[1][j] = init.Phi0[0](x);
    q[2][j] = init.Phi0[1](x);
    q[3][j] = init.Phi0[2](x);
    q[4][j] = init.theta0(x);
  }
  if (std::abs(q[3][0]) > 1e-12)
    throw std::invalid_argument("solve_acoustic_mode: Phi0_3 must vanish at the wall");
  q[3][0] = Cplx(0.0);

  sol.phi.resize(steps + 1, n);
  sol.Phi1.resize(steps + 1, n);
  sol.Phi2.resize(steps + 1, n);
  sol.Phi3.resize(steps + 1, n);
  sol.theta.resize(steps + 1, n);
  sol.times.resize(steps + 1);
  sol.energy.resize(steps + 1);
  const std::vector<double> qw = trapezoid_weights(sol.nodes);

  auto record = [&](int s) {
    double en = 0.0;
    for (int j = 0; j < n; ++j) {
      sol.phi.at(s, j) = q[0][j];
      sol.Phi1.at(s, j) = q[1][j];
      sol.Phi2.at(s, j) = q[2][j];
      sol.Phi3.at(s, j) = q[3][j];
      sol.theta.at(s, j) = q[4][j];
      en += qw[j] * 0.5 *
            (std::norm(q[0][j]) + std::norm(q[1][j]) + std::norm(q[2][j]) + std::norm(q[3][j]) +
             1.5 * std::norm(q[4][j]));
    }
    sol.times[s] = s * sol.dt;
    sol.energy[s] = en;
  };
  acoustic_march(core, q, steps, sol.dt, record);
  return sol;
}

}  // namespace hilbex
