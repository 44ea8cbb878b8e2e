#include "hilbex/collision.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace hilbex {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

// Collision frequency of the hard-sphere kernel B = |(v-u).w| about the
// standard Maxwellian, in the shifted/scaled variable s = |v-u|/sqrt(T):
//   nu(v) = rho sqrt(T) nu_std(s).
double nu_std(double s) {
  if (s < 1e-8) return 4.0 * kSqrt2Pi;
  const double a = std::sqrt(2.0 / M_PI);
  return 2.0 * M_PI * (a * std::exp(-0.5 * s * s) + (s + 1.0 / s) * std::erf(s / std::sqrt(2.0)));
}

// Grad kernels of the standard-state hard-sphere operator, L = nu + K1 - K2.
double k1_std(double z2v, double z2u, double dist) {
  return (1.0 / kSqrt2Pi) * dist * safe_exp(-0.25 * (z2v + z2u));
}

double k2_std(double z2v, double z2u, double dist) {
  const double d2 = dist * dist;
  const double q = (z2v - z2u);
  return (4.0 / kSqrt2Pi) / dist * safe_exp(-0.125 * d2 - 0.125 * q * q / d2);
}

}  // namespace

nlohmann::json CollisionBackend::to_json() const {
  nlohmann::json j;
  if (kind == BackendKind::BgkModel) {
    j["kind"] = "bgk-model";
    j["nu"] = {{"type", nu.type == NuParams::Type::Constant ? "constant" : "affine"},
               {"value", nu.value}};
  } else {
    j["kind"] = "hard-sphere-quad";
    j["quad"] = {{"angular_polar", angular_polar}, {"angular_azimuth", angular_azimuth}};
  }
  return j;
}

CollisionBackend CollisionBackend::from_json(const nlohmann::json& j) {
  CollisionBackend b;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "bgk-model") {
    b.kind = BackendKind::BgkModel;
    if (j.contains("nu")) {
      const auto& nj = j.at("nu");
      const std::string t = nj.value("type", "constant");
      if (t == "constant")
        b.nu.type = NuParams::Type::Constant;
      else if (t == "affine")
        b.nu.type = NuParams::Type::Affine;
      else
        throw std::invalid_argument("collision.nu.type must be constant or affine");
      b.nu.value = nj.value("value", 1.0);
      if (!(b.nu.value > 0.0)) throw std::invalid_argument("collision.nu.value must be > 0");
    }
  } else if (kind == "hard-sphere-quad") {
    b.kind = BackendKind::HardSphereQuad;
    if (j.contains("quad")) {
      b.angular_polar = j.at("quad").value("angular_polar", 8);
      b.angular_azimuth = j.at("quad").value("angular_azimuth", 16);
    }
  } else {
    throw std::invalid_argument("collision.kind must be bgk-model or hard-sphere-quad");
  }
  return b;
}

double collision_freq(const Vec3& v, const FluidPoint& state, const CollisionBackend& backend) {
  state.validate();
  if (backend.kind == BackendKind::BgkModel) {
    if (backend.nu.type == NuParams::Type::Constant) return backend.nu.value;
    return backend.nu.value * (1.0 + std::sqrt(norm2_3(v)));
  }
  const double s = std::sqrt((v[0] - state.u[0]) * (v[0] - state.u[0]) +
                             (v[1] - state.u[1]) * (v[1] - state.u[1]) +
                             (v[2] - state.u[2]) * (v[2] - state.u[2])) /
                   std::sqrt(state.T);
  return state.rho * std::sqrt(state.T) * nu_std(s);
}

CollisionOperator::CollisionOperator(const CollisionBackend& backend, const FluidPoint& state,
                                     const VelocityGrid& grid, int threads)
    : backend_(backend), state_(state), grid_(&grid), proj_(state, grid) {
  const int n = grid.size();
  nu_.resize(n);
  for (int i = 0; i < n; ++i) nu_[i] = collision_freq(grid.node(i), state, backend);
  nu_min_ = nu_.minCoeff();

  if (backend.kind == BackendKind::HardSphereQuad) {
    kernel_ = std::make_shared<Eigen::MatrixXd>(n, n);
    Eigen::MatrixXd& K = *kernel_;
    const double sT = std::sqrt(state.T);
    const double scale = state.rho / state.T;
    std::vector<double> z2(n);
    std::vector<Vec3> z(n);
    for (int i = 0; i < n; ++i) {
      const Vec3& nd = grid.node(i);
      z[i] = {(nd[0] - state.u[0]) / sT, (nd[1] - state.u[1]) / sT, (nd[2] - state.u[2]) / sT};
      z2[i] = norm2_3(z[i]);
    }
    parallel_for(n, resolve_thread_count(threads), [&](std::size_t ii) {
      const int i = static_cast<int>(ii);
      for (int j = 0; j < n; ++j) {
        if (j == i) {
          K(i, j) = 0.0;
          continue;
        }
        const double dx = z[i][0] - z[j][0], dy = z[i][1] - z[j][1], dz = z[i][2] - z[j][2];
        const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
        K(i, j) = grid.weight(j) * scale *
                  (k2_std(z2[i], z2[j], dist) - k1_std(z2[i], z2[j], dist));
      }
    });
    // Diagonal absorption: force L_raw sqrt(mu) = 0 row by row. This absorbs
    // the universal lattice error of the singular kernel quadrature, which is
    // proportional to the integrand at the singular node and hence diagonal.
    const Eigen::ArrayXd& smu = proj_.sqrt_mu();
    for (int i = 0; i < n; ++i) {
      double acc = nu_[i] * smu[i];
      for (int j = 0; j < n; ++j)
        if (j != i) acc -= K(i, j) * smu[j];
      K(i, i) = acc / smu[i];
    }
    double defect = 0.0;
    for (int b = 0; b < 5; ++b) defect = std::max(defect, grid.norm(apply_raw(proj_.chi(b))));
    raw_defect_ = defect;
  }

  double tolL = 0.0;
  for (int b = 0; b < 5; ++b) tolL = std::max(tolL, grid.norm(apply(proj_.chi(b))));
  tol_L_ = tolL;
}

Eigen::ArrayXd CollisionOperator::apply_raw(const Eigen::ArrayXd& g) const {
  if (backend_.kind == BackendKind::BgkModel) return nu_ * g;
  Eigen::VectorXd kg = (*kernel_) * g.matrix();
  return nu_ * g - kg.array();
}

Eigen::ArrayXd CollisionOperator::apply(const Eigen::ArrayXd& g) const {
  return proj_.micro(apply_raw(proj_.micro(g)));
}

double CollisionOperator::nu_norm2(const Eigen::ArrayXd& g) const {
  return (grid_->weights() * nu_ * g * g).sum();
}

Eigen::ArrayXd CollisionOperator::invert(const Eigen::ArrayXd& g, InvertReport* report,
                                         double tol_solve, int max_iter) const {
  const double gnorm = grid_->norm(g);
  const double macro = proj_.macro_norm(g);
  const double tol_micro = 10.0 * 1e-6;  // tol_micro = 10 tol_quad
  if (gnorm > 0.0 && macro > tol_micro * std::max(1.0, gnorm))
    throw std::invalid_argument("invert_L: input is not microscopic, ||P g|| = " +
                                std::to_string(macro));
  Eigen::ArrayXd rhs = proj_.micro(g);
  if (has_direct_inverse()) {
    if (report) *report = InvertReport{0, 0.0, true};
    return rhs / backend_.nu.value;
  }
  // Conjugate gradients on the microscopic subspace, re-projected every
  // iteration.
  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(grid_->size());
  Eigen::ArrayXd r = rhs;
  Eigen::ArrayXd p = r;
  double rr = grid_->inner(r, r);
  const double stop2 = tol_solve * tol_solve * std::max(rr, 1e-300);
  int it = 0;
  for (; it < max_iter && rr > stop2; ++it) {
    Eigen::ArrayXd ap = proj_.micro(apply_raw(p));
    const double alpha = rr / grid_->inner(p, ap);
    x += alpha * p;
    r -= alpha * ap;
    r = proj_.micro(r);
    const double rr_new = grid_->inner(r, r);
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  const double rel = std::sqrt(rr) / std::max(grid_->norm(rhs), 1e-300);
  if (report) *report = InvertReport{it, rel, rel <= tol_solve * 10.0};
  if (rel > tol_solve * 10.0)
    throw std::runtime_error("invert_L: no convergence, rel residual = " + std::to_string(rel));
  return proj_.micro(x);
}

TransportCoeffs transport_coeffs(const CollisionOperator& op) {
  const auto& grid = op.grid();
  const BurnettTensors bt = burnett(op.state(), grid);
  TransportCoeffs tc;
  const Eigen::ArrayXd a31 = op.projector().micro(bt.A[2][0]);
  const Eigen::ArrayXd b3 = op.projector().micro(bt.B[2]);
  tc.mu = op.state().T * grid.inner(bt.A[2][0], op.invert(a31));
  tc.kappa = (2.0 / 3.0) * op.state().T * grid.inner(bt.B[2], op.invert(b3));
  if (!(tc.mu > 0.0) || !(tc.kappa > 0.0))
    throw std::runtime_error("transport coefficients must be positive");
  return tc;
}

KineticSlice q_model_bgk(const KineticSlice& F, double nu_bar, const VelocityGrid& grid) {
  require_on_grid(F, grid);
  const MomentVector m = moments(F, grid);
  if (m.mass <= 0.0) {
    // Exchange model is only meaningful toward a positive-mass Maxwellian;
    // zero mass relaxes to zero.
    KineticSlice out(grid);
    out.values = -nu_bar * F.values;
    return out;
  }
  FluidPoint guess;
  guess.rho = m.mass;
  guess.u = {m.momentum[0] / m.mass, m.momentum[1] / m.mass, m.momentum[2] / m.mass};
  const double m2 = 2.0 * m.energy;
  double Tg = (m2 - m.mass * norm2_3(guess.u)) / (3.0 * m.mass);
  guess.T = std::max(Tg, 1e-8);
  auto matched = match_maxwellian(grid, m.mass, m.momentum, m2, guess);
  if (!matched) throw std::runtime_error("q_model_bgk: Maxwellian moment match failed");
  KineticSlice out(grid);
  out.values = nu_bar * (matched->values - F.values);
  return out;
}

namespace {

// Fast axis lookup: uniform grids by arithmetic, gauss grids by a short scan
// from an arithmetic guess.
struct AxisLookup {
  const std::vector<double>* ax;
  double a0 = 0.0, inv_h = 0.0;
  bool uniform = false;

  explicit AxisLookup(const VelocityGrid& g) : ax(&g.axis()) {
    const auto& a = *ax;
    uniform = g.scheme() == GridScheme::UniformTensor;
    if (uniform) {
      a0 = a.front();
      inv_h = 1.0 / (a[1] - a[0]);
    }
  }
  // largest k with ax[k] <= x, or -1 outside the hull
  inline int cell(double x) const {
    const auto& a = *ax;
    const int n = static_cast<int>(a.size());
    if (x < a.front() || x > a.back()) return -1;
    if (uniform) {
      int k = static_cast<int>((x - a0) * inv_h);
      k = std::clamp(k, 0, n - 2);
      while (k > 0 && a[k] > x) --k;
      while (k < n - 2 && a[k + 1] <= x) ++k;
      return k;
    }
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (a[mid] <= x ? lo : hi) = mid;
    }
    return lo;
  }
};

inline double trilinear(const AxisLookup& look, const Eigen::ArrayXd& f, int n, const Vec3& p) {
  const auto& ax = *look.ax;
  const int cx = look.cell(p[0]);
  if (cx < 0) return 0.0;
  const int cy = look.cell(p[1]);
  if (cy < 0) return 0.0;
  const int cz = look.cell(p[2]);
  if (cz < 0) return 0.0;
  const double tx = (p[0] - ax[cx]) / (ax[cx + 1] - ax[cx]);
  const double ty = (p[1] - ax[cy]) / (ax[cy + 1] - ax[cy]);
  const double tz = (p[2] - ax[cz]) / (ax[cz + 1] - ax[cz]);
  const int base = (cx * n + cy) * n + cz;
  const double* F = f.data();
  const double f00 = F[base] * (1 - tz) + F[base + 1] * tz;
  const double f01 = F[base + n] * (1 - tz) + F[base + n + 1] * tz;
  const double f10 = F[base + n * n] * (1 - tz) + F[base + n * n + 1] * tz;
  const double f11 = F[base + n * n + n] * (1 - tz) + F[base + n * n + n + 1] * tz;
  return (f00 * (1 - ty) + f01 * ty) * (1 - tx) + (f10 * (1 - ty) + f11 * ty) * tx;
}

void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  // nodes/weights for cos(theta) on [-1, 1]
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

KineticSlice q_hard_sphere(const KineticSlice& F1, const KineticSlice& F2,
                           const CollisionBackend& backend, const VelocityGrid& grid,
                           int threads) {
  const int n = grid.size();
  const int nv = grid.n_per_axis();
  // Angular quadrature aligned with the relative velocity: with the polar
  // axis along V the kernel is |V| cos(chi), smooth on the half sphere
  // (omega -> -omega maps a collision pair to itself, hence the factor 2).
  std::vector<double> gx, gw;
  gauss_legendre_01(backend.angular_polar, gx, gw);
  struct Ang {
    double c, s, wgt;
  };
  std::vector<Ang> polar(backend.angular_polar);
  for (int a = 0; a < backend.angular_polar; ++a) {
    const double c = 0.5 * (gx[a] + 1.0);  // cos(chi) on [0, 1]
    polar[a] = {c, std::sqrt(std::max(0.0, 1.0 - c * c)), 0.5 * gw[a]};
  }
  const int nphi = backend.angular_azimuth;
  std::vector<double> cphi(nphi), sphi(nphi);
  for (int p = 0; p < nphi; ++p) {
    const double phi = 2.0 * M_PI * (p + 0.5) / nphi;
    cphi[p] = std::cos(phi);
    sphi[p] = std::sin(phi);
  }
  const double wphi = 2.0 * M_PI / nphi;

  // Ratio representation against an analytic reference Maxwellian built from
  // the moments of the first argument: F_i = mu_ref G_i. The gain term uses
  // the exact collision invariance mu_ref(u') mu_ref(v') = mu_ref(u) mu_ref(v),
  // so only the smooth ratios are interpolated off the grid. The reference is
  // an exact 1-homogeneous function of F_1, which keeps the form bilinear.
  FluidPoint ref{1.0, {0.0, 0.0, 0.0}, 1.0};
  {
    const MomentVector m = moments(F1, grid);
    if (m.mass > 1e-12) {
      const Vec3 u{m.momentum[0] / m.mass, m.momentum[1] / m.mass, m.momentum[2] / m.mass};
      const double T = (2.0 * m.energy - m.mass * norm2_3(u)) / (3.0 * m.mass);
      if (T > 1e-6) ref = FluidPoint{m.mass, u, T};
    }
  }
  const Eigen::ArrayXd mu_ref = maxwellian(ref, grid).values;
  Eigen::ArrayXd G1(n), G2(n);
  for (int i = 0; i < n; ++i) {
    const double m = mu_ref[i];
    G1[i] = m > 1e-290 ? F1.values[i] / m : 0.0;
    G2[i] = m > 1e-290 ? F2.values[i] / m : 0.0;
  }

  const AxisLookup look(grid);
  KineticSlice out(grid);
  const int nthreads =
      threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());

  // angle loop over the collision sphere of one ordered pair
  auto pair_sums = [&](const Vec3& v, const Vec3& u, double& gain12, double& gain21,
                       double& wtot) {
    const Vec3 V{v[0] - u[0], v[1] - u[1], v[2] - u[2]};
    const double Vn = std::sqrt(norm2_3(V));
    gain12 = gain21 = wtot = 0.0;
    if (Vn == 0.0) return;
    const Vec3 Vh{V[0] / Vn, V[1] / Vn, V[2] / Vn};
    Vec3 e1;
    if (std::abs(Vh[0]) <= std::abs(Vh[1]) && std::abs(Vh[0]) <= std::abs(Vh[2]))
      e1 = {0.0, -Vh[2], Vh[1]};
    else if (std::abs(Vh[1]) <= std::abs(Vh[2]))
      e1 = {-Vh[2], 0.0, Vh[0]};
    else
      e1 = {-Vh[1], Vh[0], 0.0};
    const double e1n = std::sqrt(norm2_3(e1));
    e1 = {e1[0] / e1n, e1[1] / e1n, e1[2] / e1n};
    const Vec3 e2{Vh[1] * e1[2] - Vh[2] * e1[1], Vh[2] * e1[0] - Vh[0] * e1[2],
                  Vh[0] * e1[1] - Vh[1] * e1[0]};
    for (const Ang& pa : polar) {
      const double proj = Vn * pa.c;  // V . omega
      const Vec3 ca{pa.c * Vh[0], pa.c * Vh[1], pa.c * Vh[2]};
      double g12 = 0.0, g21 = 0.0;
      for (int p = 0; p < nphi; ++p) {
        const double s1 = pa.s * cphi[p], s2 = pa.s * sphi[p];
        const Vec3 om{ca[0] + s1 * e1[0] + s2 * e2[0], ca[1] + s1 * e1[1] + s2 * e2[1],
                      ca[2] + s1 * e1[2] + s2 * e2[2]};
        const Vec3 vp{v[0] - proj * om[0], v[1] - proj * om[1], v[2] - proj * om[2]};
        const Vec3 up{u[0] + proj * om[0], u[1] + proj * om[1], u[2] + proj * om[2]};
        const double g1u = trilinear(look, G1, nv, up);
        const double g2v = trilinear(look, G2, nv, vp);
        g12 += g1u * g2v;
        if (&gain21 != &gain12) {
          // reversed roles share the same collision sphere with u' and v' swapped
          const double g1v = trilinear(look, G1, nv, vp);
          const double g2u = trilinear(look, G2, nv, up);
          g21 += g1v * g2u;
        }
      }
      const double wb = 2.0 * pa.wgt * wphi * Vn * pa.c;  // 2 x half-sphere, B = |V| cos(chi)
      gain12 += wb * g12;
      gain21 += wb * g21;
      wtot += wb * nphi;
    }
  };

  const bool diagonal = (F1.values == F2.values).all();
  if (diagonal && nthreads <= 1) {
    // unordered-pair sweep: the gain sum is symmetric in the roles, so one
    // angle loop feeds both rows
    out.values.setZero();
    for (int iv = 0; iv < n; ++iv) {
      const Vec3 v = grid.node(iv);
      for (int ju = iv + 1; ju < n; ++ju) {
        const Vec3 u = grid.node(ju);
        double gain, dummy, wtot;
        pair_sums(v, u, gain, gain, wtot);
        (void)dummy;
        const double muref_pair = mu_ref[ju] * mu_ref[iv];
        const double loss = F1.values[ju] * F2.values[iv];
        const double common = muref_pair * gain - wtot * loss;
        out.values[iv] += grid.weight(ju) * common;
        out.values[ju] += grid.weight(iv) * common;
      }
    }
  } else {
    parallel_for(n, std::max(1, nthreads), [&](std::size_t iv) {
      const Vec3 v = grid.node(static_cast<int>(iv));
      const double f2v = F2.values[iv];
      const double muv = mu_ref[iv];
      double acc = 0.0;
      for (int ju = 0; ju < n; ++ju) {
        const Vec3 u = grid.node(ju);
        double gain, dummy, wtot;
        pair_sums(v, u, gain, gain, wtot);
        (void)dummy;
        acc += grid.weight(ju) * (mu_ref[ju] * muv * gain - wtot * F1.values[ju] * f2v);
      }
      out.values[iv] = acc;
    });
  }

  // Conservative correction against a fixed standard-Maxwellian basis: remove
  // the interpolation-induced defect in the five collision invariants exactly.
  const KineticSlice mu_corr = maxwellian(FluidPoint{}, grid);
  Eigen::Matrix<double, 5, 5> G = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 1> r = Eigen::Matrix<double, 5, 1>::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec3& nd = grid.node(i);
    const double nn = norm2_3(nd);
    const double mom[5] = {1.0, nd[0], nd[1], nd[2], nn};
    const double wpsi = grid.weight(i) * mu_corr.values[i];
    const double wq = grid.weight(i) * out.values[i];
    for (int a = 0; a < 5; ++a) {
      r(a) += wq * mom[a];
      for (int b = 0; b < 5; ++b) G(a, b) += wpsi * mom[a] * mom[b];
    }
  }
  const Eigen::Matrix<double, 5, 1> c = G.partialPivLu().solve(r);
  for (int i = 0; i < n; ++i) {
    const Vec3& nd = grid.node(i);
    const double nn = norm2_3(nd);
    out.values[i] -=
        mu_corr.values[i] * (c(0) + c(1) * nd[0] + c(2) * nd[1] + c(3) * nd[2] + c(4) * nn);
  }
  return out;
}

}  // namespace

KineticSlice q_bilinear(const KineticSlice& F1, const KineticSlice& F2,
                        const CollisionBackend& backend, const VelocityGrid& grid, int threads) {
  require_on_grid(F1, grid);
  require_on_grid(F2, grid);
  if (backend.kind == BackendKind::HardSphereQuad)
    return q_hard_sphere(F1, F2, backend, grid, threads);
  // bgk surrogate: symmetrized exchange model; the diagonal is the model
  // Q(F,F) = nu (M[F] - F).
  const double nb = backend.nu.type == NuParams::Type::Constant ? backend.nu.value : backend.nu.value;
  KineticSlice q1 = q_model_bgk(F1, nb, grid);
  KineticSlice q2 = q_model_bgk(F2, nb, grid);
  KineticSlice out(grid);
  out.values = 0.5 * (q1.values + q2.values);
  return out;
}

}  // namespace hilbex
