#include "hilbex/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hilbex {

void ExpansionConfig::validate() const {
  if (orders < 1 || orders > 3)
    throw std::invalid_argument("expansion.orders must be between 1 and 3 at desk scale");
  if (taylor_order < 1 || taylor_order > 3)
    throw std::invalid_argument("expansion.taylor_order must be between 1 and 3");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw std::invalid_argument("expansion.epsilons must be positive");
    if (i > 0 && epsilons[i] >= epsilons[i - 1])
      throw std::invalid_argument("expansion.epsilons must be strictly decreasing");
  }
  if (!(delta >= 0.0)) throw std::invalid_argument("expansion.delta must be nonnegative");
  if (!(horizon > 0.0)) throw std::invalid_argument("expansion.horizon must be positive");
  if (y_max < 20.0) throw std::invalid_argument("layer.y_max must be at least 20");
}

namespace {

double series_at(const std::vector<double>& s, double t, double dt) {
  const int last = static_cast<int>(s.size()) - 1;
  if (last <= 0) return s.empty() ? 0.0 : s[0];
  const double x = std::clamp(t / dt, 0.0, static_cast<double>(last));
  const int i = std::min(static_cast<int>(x), last - 1);
  const double a = x - i;
  return (1.0 - a) * s[i] + a * s[i + 1];
}

double series_dot(const std::vector<double>& s, double t, double dt) {
  const int last = static_cast<int>(s.size()) - 1;
  if (last < 1) return 0.0;
  const double x = std::clamp(t / dt, 0.0, static_cast<double>(last));
  int i = std::clamp(static_cast<int>(std::lround(x)), 1, std::max(last - 1, 1));
  if (last == 1) return (s[1] - s[0]) / dt;
  return (s[i + 1] - s[i - 1]) / (2.0 * dt);
}

double field_dt(const Trajectory<double>& f, int step, int node, double dt) {
  const int last = f.steps - 1;
  if (last < 2) return last < 1 ? 0.0 : (f.at(1, node) - f.at(0, node)) / dt;
  if (step == 0) return (-1.5 * f.at(0, node) + 2.0 * f.at(1, node) - 0.5 * f.at(2, node)) / dt;
  if (step == last)
    return (1.5 * f.at(last, node) - 2.0 * f.at(last - 1, node) + 0.5 * f.at(last - 2, node)) / dt;
  return (f.at(step + 1, node) - f.at(step - 1, node)) / (2.0 * dt);
}

// y-derivative field of a (step, ynode) trajectory on the layer mesh
Trajectory<double> y_derivative(const LayerGrid& g, const Trajectory<double>& f) {
  Trajectory<double> d;
  d.resize(f.steps, f.nodes);
  const int n = f.nodes;
  for (int s = 0; s < f.steps; ++s) {
    for (int j = 0; j < n; ++j) {
      const int b = std::clamp(j - 1, 0, n - 3);
      const std::vector<double> w = fd_weights(g.y[j], {g.y[b], g.y[b + 1], g.y[b + 2]}, 1);
      d.at(s, j) = w[0] * f.at(s, b) + w[1] * f.at(s, b + 1) + w[2] * f.at(s, b + 2);
    }
  }
  return d;
}

std::vector<double> column(const Trajectory<double>& f, int step) {
  std::vector<double> v(f.nodes);
  for (int j = 0; j < f.nodes; ++j) v[j] = f.at(step, j);
  return v;
}

}  // namespace

nlohmann::json ResidualReport::to_json() const {
  nlohmann::json j;
  j["eps"] = eps;
  j["l2_defect"] = l2_defect;
  j["sup_defect"] = sup_defect;
  j["positivity_min"] = positivity_min;
  j["composite_wall_mismatch"] = composite_wall_mismatch;
  j["per_order_mismatch"] = per_order_mismatch;
  j["ghat2_moments"] = ghat2_moments;
  return j;
}

nlohmann::json DefectSweep::to_json() const {
  nlohmann::json j;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(r.to_json());
  j["slope"] = slope.slope;
  j["r2"] = slope.r2;
  return j;
}

nlohmann::json AcousticGapReport::to_json() const {
  nlohmann::json j;
  j["deltas"] = deltas;
  j["fluid_gap"] = fluid_gap;
  j["fluid_slope"] = fluid_slope.slope;
  j["fluid_r2"] = fluid_slope.r2;
  if (!kinetic_gap.empty()) {
    j["kinetic_gap"] = kinetic_gap;
    j["kinetic_slope"] = kinetic_slope.slope;
    j["kinetic_r2"] = kinetic_slope.r2;
  }
  return j;
}

// Per-step cache of layer-side slice data used by composites and sources.
struct ExpansionPipeline::LayerStepCache {
  int step = 0;
  std::shared_ptr<CollisionOperator> op;
  // micro (I-P0) fbar_k slices at the y-nodes, per order index k-1 (empty for
  // order 1) and their y-derivative slices
  std::vector<std::vector<Eigen::ArrayXd>> micro, dmicro;
  // J_bar_1 slices at y-nodes (built with order-2 data; empty before that)
  std::vector<Eigen::ArrayXd> jbar1;
};

ExpansionPipeline::ExpansionPipeline(const ExpansionConfig& cfg, const EulerInit& init)
    : cfg_(cfg), init_(init) {
  cfg_.validate();
  grid_ = std::make_shared<VelocityGrid>(cfg.velocity_radius, cfg.velocity_n, cfg.scheme);
  ygrid_ = LayerGrid::graded(cfg.y_max, cfg.y_cells, cfg.y_grading);
  etagrid_ = LayerGrid::graded(cfg.eta_max, cfg.eta_cells, cfg.eta_grading);
}

const CollisionOperator& ExpansionPipeline::wall_op(int step) const {
  auto it = wall_ops_.find(step);
  if (it == wall_ops_.end()) {
    auto op = std::make_shared<CollisionOperator>(cfg_.backend, euler_.wall[step].state(), *grid_,
                                                  cfg_.threads);
    if (wall_ops_.size() > 48) wall_ops_.erase(wall_ops_.begin());
    it = wall_ops_.emplace(step, std::move(op)).first;
  }
  return *it->second;
}

void ExpansionPipeline::build() {
  EulerOptions opt;
  opt.blowup_ceiling = cfg_.tol.blowup_ceiling;
  euler_ = solve_euler(init_, cfg_.delta, cfg_.horizon, cfg_.spatial, opt);
  if (euler_.blew_up)
    throw std::runtime_error("euler background lost smoothness at t = " +
                             std::to_string(euler_.reached_time));
  const int steps = euler_.steps();
  wall_mu_.resize(steps);
  wall_kappa_.resize(steps);
  for (int s = 0; s < steps; ++s) {
    const TransportCoeffs tc = transport_coeffs(wall_op(s));
    wall_mu_[s] = tc.mu;
    wall_kappa_[s] = tc.kappa;
  }
  bundles_.clear();
  bundles_.reserve(4);
  layer_caches_.clear();
  build_order_1();
  if (cfg_.orders >= 2) build_order_2();
  if (cfg_.orders >= 3) build_order_3();
}

// ---------------------------------------------------------------------------
// shared layer machinery
// ---------------------------------------------------------------------------

LayerCoefficients ExpansionPipeline::base_layer_coeffs(const std::vector<NeumannData>& neumann,
                                                       bool match_init) const {
  const double dt = euler_.dt;
  const int steps = euler_.steps();
  std::vector<double> rho0(steps), divu(steps), mu(steps), kap(steps);
  for (int s = 0; s < steps; ++s) {
    rho0[s] = euler_.wall[s].rho0;
    divu[s] = euler_.wall[s].divu0;
    mu[s] = wall_mu_[s];
    kap[s] = wall_kappa_[s];
  }
  LayerCoefficients lc;
  lc.rho0 = [rho0, dt](double t) { return series_at(rho0, t, dt); };
  lc.mu = [mu, dt](double t) { return series_at(mu, t, dt); };
  lc.kappa = [kap, dt](double t) { return series_at(kap, t, dt); };
  lc.drift_slope = [divu, dt](double t) { return series_at(divu, t, dt); };
  lc.reaction = [divu, dt](double t) {
    std::array<std::array<double, 3>, 3> R{};
    R[2][2] = (2.0 / 3.0) * series_at(divu, t, dt);
    return R;
  };
  std::vector<double> b1(steps), b2(steps), a(steps);
  for (int s = 0; s < steps; ++s) {
    b1[s] = neumann[s].b1;
    b2[s] = neumann[s].b2;
    a[s] = neumann[s].a;
  }
  lc.neumann = [b1, b2, a, dt](double t) {
    return std::array<double, 3>{series_at(b1, t, dt), series_at(b2, t, dt), series_at(a, t, dt)};
  };
  lc.construct_compatible_init = match_init;
  return lc;
}

void ExpansionPipeline::finish_layer_density(OrderBundle& b) const {
  const int steps = euler_.steps();
  const int ny = ygrid_.nodes();
  b.rho_bar.resize(steps, ny);
  for (int s = 0; s < steps; ++s) {
    const WallTrace& w = euler_.wall[s];
    for (int j = 0; j < ny; ++j)
      b.rho_bar.at(s, j) = (3.0 * b.p_bar.at(s, j) - w.rho0 * b.layer.th.at(s, j)) / (3.0 * w.T0);
  }
}

// ---------------------------------------------------------------------------
// order 1
// ---------------------------------------------------------------------------

void ExpansionPipeline::build_order_1() {
  OrderBundle b;
  b.k = 1;

  HyperbolicCoefficients hc;  // zero sources, zero wall datum, zero init
  b.interior = solve_linear_hyperbolic(euler_, hc, cfg_.horizon);
  const int steps = euler_.steps();
  b.d_k.assign(steps, 0.0);

  b.neumann.resize(steps);
  for (int s = 0; s < steps; ++s) {
    const CollisionOperator& op = wall_op(s);
    MatchingInputs in;
    in.wall_state = euler_.wall[s].state();
    in.mu = wall_mu_[s];
    in.kappa = wall_kappa_[s];
    in.micro_fk_wall = micro_f2_slice(euler_, b.interior, op, s, 0.0);
    in.ubar_km1_3_wall = 0.0;
    b.neumann[s] = neumann_from_matching(in, *grid_);
  }

  const LayerCoefficients lc = base_layer_coeffs(b.neumann, cfg_.layer_init_match_neumann);
  b.layer = solve_layer_parabolic(lc, ygrid_, euler_.dt, steps - 1, cfg_.weight_l);

  const int ny = ygrid_.nodes();
  b.u3_bar.resize(steps, ny);  // ubar_{1,3} == 0 (Boussinesq)
  b.p_bar.resize(steps, ny);   // pbar_1 == 0
  finish_layer_density(b);

  b.knudsen_trivial = true;  // fhat_1 == 0
  bundles_.push_back(std::move(b));
  {
    OrderBundle& bb = bundles_.back();
    const int s = steps / 2;
    HalfSpaceProblem hp;
    hp.wall_state = euler_.wall[s].state();
    hp.eta = etagrid_;
    hp.f_b = ghat_slice(1, s);
    hp.kappa_w = cfg_.kappa_w;
    hp.a_frak = cfg_.a_frak;
    bb.ghat_report = check_solvability(hp, *grid_, cfg_.tol.tol_solvability);
  }
}

// ---------------------------------------------------------------------------
// layer slice builders
// ---------------------------------------------------------------------------

Eigen::ArrayXd ExpansionPipeline::layer_macro_slice(int k, int step, double y) const {
  const OrderBundle& b = order(k);
  const MacroProjector& proj = wall_op(step).projector();
  if (y >= ygrid_.y_max()) return Eigen::ArrayXd::Zero(grid_->size());
  auto interp = [&](const Trajectory<double>& f) {
    return MonotoneCubic(ygrid_.y, column(f, step))(y);
  };
  const double r = interp(b.rho_bar);
  const Vec3 u{interp(b.layer.u1), interp(b.layer.u2), interp(b.u3_bar)};
  const double th = interp(b.layer.th);
  return proj.hydrodynamic_slice(r, u, th);
}

std::shared_ptr<ExpansionPipeline::LayerStepCache> ExpansionPipeline::build_layer_step_cache(
    int step) const {
  auto cache = std::make_shared<LayerStepCache>();
  cache->step = step;
  cache->op = std::make_shared<CollisionOperator>(cfg_.backend, euler_.wall[step].state(), *grid_);
  const CollisionOperator& op = *cache->op;
  const int norders = static_cast<int>(bundles_.size());
  cache->micro.resize(norders);
  cache->dmicro.resize(norders);
  const int ny = ygrid_.nodes();
  auto fill_order = [&](int k) {
    auto& m = cache->micro[k - 1];
    m.resize(ny);
    for (int j = 0; j < ny; ++j) m[j] = layer_micro_slice_raw(op, *cache, k, step, j);
    auto& dm = cache->dmicro[k - 1];
    dm.resize(ny);
    for (int j = 0; j < ny; ++j) {
      const int bnd = std::clamp(j - 1, 0, ny - 3);
      const std::vector<double> w =
          fd_weights(ygrid_.y[j], {ygrid_.y[bnd], ygrid_.y[bnd + 1], ygrid_.y[bnd + 2]}, 1);
      dm[j] = w[0] * m[bnd] + w[1] * m[bnd + 1] + w[2] * m[bnd + 2];
    }
  };
  if (norders >= 2) fill_order(2);
  if (norders >= 2) {
    cache->jbar1.resize(ny);
    for (int j = 0; j < ny; ++j) cache->jbar1[j] = jbar1_slice_raw(op, step, j, *cache);
  }
  if (norders >= 3) fill_order(3);
  return cache;
}

const ExpansionPipeline::LayerStepCache& ExpansionPipeline::layer_cache(int step) const {
  auto it = layer_caches_.find(step);
  if (it != layer_caches_.end()) return *it->second;
  auto cache = build_layer_step_cache(step);
  if (layer_caches_.size() > 24) layer_caches_.erase(layer_caches_.begin());
  auto& slot = layer_caches_[step];
  slot = std::move(cache);
  return *layer_caches_[step];
}

// microscopic closure of fbar_k at a layer node (k >= 2)
Eigen::ArrayXd ExpansionPipeline::layer_micro_slice_raw(const CollisionOperator& op,
                                                        const LayerStepCache& cache, int k,
                                                        int step, int ynode) const {
  const MacroProjector& proj = op.projector();
  const OrderBundle& prev = order(k - 1);
  const double y = ygrid_.y[ynode];

  // d_y of the macroscopic previous-layer slice via parameter derivatives
  auto dparam = [&](const Trajectory<double>& f) {
    const int n = ygrid_.nodes();
    const int bnd = std::clamp(ynode - 1, 0, n - 3);
    const std::vector<double> w =
        fd_weights(y, {ygrid_.y[bnd], ygrid_.y[bnd + 1], ygrid_.y[bnd + 2]}, 1);
    return w[0] * f.at(step, bnd) + w[1] * f.at(step, bnd + 1) + w[2] * f.at(step, bnd + 2);
  };
  const Eigen::ArrayXd dyP = proj.hydrodynamic_slice(
      dparam(prev.rho_bar), {dparam(prev.layer.u1), dparam(prev.layer.u2), dparam(prev.u3_bar)},
      dparam(prev.layer.th));

  Eigen::ArrayXd v3dy(grid_->size());
  for (int i = 0; i < grid_->size(); ++i) v3dy[i] = grid_->node(i)[2] * dyP[i];

  Eigen::ArrayXd out = op.invert(proj.micro(-v3dy));

  // macroscopic pair terms: y d3mu_0, f_1 at the wall, fbar_1
  const WallTrace& w = euler_.wall[step];
  FluidPoint d3s;
  d3s.rho = w.d3rho0;
  d3s.u = w.d3u0;
  d3s.T = w.d3T0;
  const Eigen::ArrayXd dmu0 = dmu_over_sqrt_mu(w.state(), d3s, *grid_);
  const Eigen::ArrayXd f1w = interior_macro_slice(proj, order(1).interior, step, 0.0);
  const Eigen::ArrayXd fbar1 = layer_node_macro(proj, 1, step, ynode);
  Eigen::ArrayXd gmac = y * dmu0 + f1w + fbar1;
  const Eigen::ArrayXd fbar_prev = layer_node_macro(proj, k - 1, step, ynode);
  out += proj.pair_macro(gmac, fbar_prev);

  if (k >= 3 && !cache.jbar1.empty()) out += cache.jbar1[ynode];
  return out;
}

Eigen::ArrayXd ExpansionPipeline::layer_node_macro(const MacroProjector& proj, int k, int step,
                                                   int ynode) const {
  const OrderBundle& b = order(k);
  return proj.hydrodynamic_slice(
      b.rho_bar.at(step, ynode),
      {b.layer.u1.at(step, ynode), b.layer.u2.at(step, ynode), b.u3_bar.at(step, ynode)},
      b.layer.th.at(step, ynode));
}

// J_bar_1 at a node: the microscopic feedback of the first-order layer into
// the second-order closures.
Eigen::ArrayXd ExpansionPipeline::jbar1_slice_raw(const CollisionOperator& op, int step,
                                                  int ynode, const LayerStepCache& cache) const {
  const MacroProjector& proj = op.projector();
  const OrderBundle& b1 = order(1);
  const double y = ygrid_.y[ynode];
  const WallTrace& w = euler_.wall[step];
  const FluidPoint s0 = w.state();

  // d_t Fbar_1 / sqrt(mu0) = d_t (fbar_1 slice) + fbar_1 d_t log sqrt(mu0)
  const FluidPoint sdot = wall_state_dot_(step);
  std::array<double, 5> pt{field_dt(b1.rho_bar, step, ynode, euler_.dt),
                           field_dt(b1.layer.u1, step, ynode, euler_.dt),
                           field_dt(b1.layer.u2, step, ynode, euler_.dt),
                           field_dt(b1.u3_bar, step, ynode, euler_.dt),
                           field_dt(b1.layer.th, step, ynode, euler_.dt)};
  Eigen::ArrayXd dtf = proj.hydrodynamic_slice(pt[0], {pt[1], pt[2], pt[3]}, pt[4]);
  // state variation of the slice parameters (wall state drifts in time)
  {
    const double eps = 1e-6;
    FluidPoint sp = s0, sm = s0;
    sp.rho += eps * sdot.rho;
    sm.rho -= eps * sdot.rho;
    sp.T += eps * sdot.T;
    sm.T -= eps * sdot.T;
    for (int c = 0; c < 3; ++c) {
      sp.u[c] += eps * sdot.u[c];
      sm.u[c] -= eps * sdot.u[c];
    }
    const MacroProjector prp(sp, *grid_), prm(sm, *grid_);
    const double r = b1.rho_bar.at(step, ynode);
    const Vec3 uu{b1.layer.u1.at(step, ynode), b1.layer.u2.at(step, ynode),
                  b1.u3_bar.at(step, ynode)};
    const double th = b1.layer.th.at(step, ynode);
    dtf += (prp.hydrodynamic_slice(r, uu, th) - prm.hydrodynamic_slice(r, uu, th)) / (2.0 * eps);
  }
  const Eigen::ArrayXd fbar1 = layer_node_macro(proj, 1, step, ynode);
  dtf += 0.5 * fbar1 * dlog_mu(s0, sdot);

  // v3 d_y (I-P0) fbar_2
  const Eigen::ArrayXd& dmicro2 = cache.dmicro[1][ynode];
  Eigen::ArrayXd v3dm(grid_->size());
  for (int i = 0; i < grid_->size(); ++i) v3dm[i] = grid_->node(i)[2] * dmicro2[i];

  Eigen::ArrayXd out = op.invert(proj.micro(-dtf - v3dm));

  // pair terms: (y^2/2) d33 mu0 + y d3 F1^0 + f2^0, each against fbar_1
  Eigen::ArrayXd hmac = Eigen::ArrayXd::Zero(grid_->size());
  if (cfg_.taylor_order >= 2) hmac += 0.5 * y * y * d33mu_slice(step);
  hmac += y * d3F1_wall_slice(proj, step);
  hmac += interior_f_slice(2, step, 0.0);
  out += proj.pair_macro(hmac, fbar1);
  return out;
}

Eigen::ArrayXd ExpansionPipeline::dlog_mu(const FluidPoint& s, const FluidPoint& d) const {
  Eigen::ArrayXd out(grid_->size());
  for (int i = 0; i < grid_->size(); ++i) {
    const Vec3& v = grid_->node(i);
    const double w0 = v[0] - s.u[0], w1 = v[1] - s.u[1], w2 = v[2] - s.u[2];
    const double wsq = w0 * w0 + w1 * w1 + w2 * w2;
    out[i] = d.rho / s.rho - 1.5 * d.T / s.T + (w0 * d.u[0] + w1 * d.u[1] + w2 * d.u[2]) / s.T +
             wsq * d.T / (2.0 * s.T * s.T);
  }
  return out;
}

FluidPoint ExpansionPipeline::wall_state_dot_(int step) const {
  const int last = euler_.steps() - 1;
  auto diff = [&](auto pick) {
    if (last < 1) return 0.0;
    if (step == 0) return (pick(euler_.wall[1]) - pick(euler_.wall[0])) / euler_.dt;
    if (step == last) return (pick(euler_.wall[last]) - pick(euler_.wall[last - 1])) / euler_.dt;
    return (pick(euler_.wall[step + 1]) - pick(euler_.wall[step - 1])) / (2.0 * euler_.dt);
  };
  FluidPoint d;
  d.rho = diff([](const WallTrace& w) { return w.rho0; });
  d.T = diff([](const WallTrace& w) { return w.T0; });
  d.u = {diff([](const WallTrace& w) { return w.u0[0]; }),
         diff([](const WallTrace& w) { return w.u0[1]; }), 0.0};
  return d;
}

// d33 mu_0 / sqrt(mu_0) = sqrt(mu_0) [ (d3 log mu)^2 + d33 log mu ]
Eigen::ArrayXd ExpansionPipeline::d33mu_slice(int step) const {
  const WallTrace& w = euler_.wall[step];
  const FluidPoint s = w.state();
  FluidPoint d3;
  d3.rho = w.d3rho0;
  d3.u = w.d3u0;
  d3.T = w.d3T0;
  const Eigen::ArrayXd dlog = dlog_mu(s, d3);
  const Eigen::ArrayXd smu = maxwellian(s, *grid_).values.sqrt();
  Eigen::ArrayXd d2log(grid_->size());
  const double rho = s.rho, T = s.T;
  for (int i = 0; i < grid_->size(); ++i) {
    const Vec3& v = grid_->node(i);
    const double w0 = v[0] - s.u[0], w1 = v[1] - s.u[1], w2 = v[2] - s.u[2];
    const double wsq = w0 * w0 + w1 * w1 + w2 * w2;
    const double wdu = w0 * d3.u[0] + w1 * d3.u[1] + w2 * d3.u[2];
    const double du2 = norm2_3(d3.u);
    const double wddu = w0 * w.d33u0[0] + w1 * w.d33u0[1] + w2 * w.d33u0[2];
    d2log[i] = (w.d33rho0 / rho - d3.rho * d3.rho / (rho * rho)) -
               1.5 * (w.d33T0 / T - d3.T * d3.T / (T * T)) +
               (-du2 / T + wddu / T - wdu * d3.T / (T * T)) +
               (-2.0 * wdu * d3.T / (2.0 * T * T) + wsq * w.d33T0 / (2.0 * T * T) -
                wsq * d3.T * d3.T / (T * T * T));
  }
  return smu * (dlog.square() + d2log);
}

// d3 F_1 / sqrt(mu) at the wall = d3[f_1 slice] + (1/2) f_1 d3 log mu
Eigen::ArrayXd ExpansionPipeline::d3F1_wall_slice(const MacroProjector& proj, int step) const {
  const HyperbolicSolution& o1 = order(1).interior;
  const WallTrace& w = euler_.wall[step];
  const FluidPoint s0 = w.state();
  FluidPoint d3s;
  d3s.rho = w.d3rho0;
  d3s.u = w.d3u0;
  d3s.T = w.d3T0;
  const std::array<double, 5> p0{
      sample_field(o1.nodes, o1.rho, step, 0.0), sample_field(o1.nodes, o1.u1, step, 0.0),
      sample_field(o1.nodes, o1.u2, step, 0.0), sample_field(o1.nodes, o1.u3, step, 0.0),
      sample_field(o1.nodes, o1.theta, step, 0.0)};
  const std::array<double, 5> p3{
      sample_field_d3(o1.nodes, o1.rho, step, 0.0), sample_field_d3(o1.nodes, o1.u1, step, 0.0),
      sample_field_d3(o1.nodes, o1.u2, step, 0.0), sample_field_d3(o1.nodes, o1.u3, step, 0.0),
      sample_field_d3(o1.nodes, o1.theta, step, 0.0)};
  Eigen::ArrayXd out = proj.hydrodynamic_slice(p3[0], {p3[1], p3[2], p3[3]}, p3[4]);
  {
    const double eps = 1e-6;
    FluidPoint sp = s0, sm = s0;
    sp.rho += eps * d3s.rho;
    sm.rho -= eps * d3s.rho;
    sp.T += eps * d3s.T;
    sm.T -= eps * d3s.T;
    for (int c = 0; c < 3; ++c) {
      sp.u[c] += eps * d3s.u[c];
      sm.u[c] -= eps * d3s.u[c];
    }
    const MacroProjector prp(sp, *grid_), prm(sm, *grid_);
    out += (prp.hydrodynamic_slice(p0[0], {p0[1], p0[2], p0[3]}, p0[4]) -
            prm.hydrodynamic_slice(p0[0], {p0[1], p0[2], p0[3]}, p0[4])) /
           (2.0 * eps);
  }
  const Eigen::ArrayXd f1w = proj.hydrodynamic_slice(p0[0], {p0[1], p0[2], p0[3]}, p0[4]);
  out += 0.5 * f1w * dlog_mu(s0, d3s);
  return out;
}

// ---------------------------------------------------------------------------
// order 2
// ---------------------------------------------------------------------------

void ExpansionPipeline::build_order_2() {
  layer_caches_.clear();
  OrderBundle b;
  b.k = 2;
  const int steps = euler_.steps();
  const int ny = ygrid_.nodes();
  const OrderBundle& o1 = order(1);

  // ubar_{2,3} from the first-order layer continuity bracket. In slab
  // geometry only d_t rhobar_1 survives; it is evaluated through the layer
  // equation itself (rhobar_1 = -rho0 thetabar_1 / (3 T0) with pbar_1 = 0 and
  // thetabar_1 advanced by its drift-diffusion balance), which keeps the t=0
  // value exactly zero for compatible starts.
  {
    Trajectory<double> integrand;
    integrand.resize(steps, ny);
    const std::vector<double>& yy = ygrid_.y;
    for (int s = 0; s < steps; ++s) {
      const WallTrace& w = euler_.wall[s];
      const FluidPoint sdot = wall_state_dot_(s);
      const double coef = w.rho0 / (3.0 * w.T0);
      const double coef_dot =
          sdot.rho / (3.0 * w.T0) - w.rho0 * sdot.T / (3.0 * w.T0 * w.T0);
      const double diff = 0.6 * wall_kappa_[s] / w.rho0;
      for (int j = 0; j < ny; ++j) {
        const int bnd = std::clamp(j - 1, 1, ny - 3);
        double dth = 0.0, ddth = 0.0;
        if (j == 0) {
          dth = o1.neumann[s].a;  // imposed Neumann derivative at the wall
          const std::vector<double> w2 =
              fd_weights(yy[0], {yy[0], yy[1], yy[2], yy[3]}, 2);
          for (int a = 0; a < 4; ++a) ddth += w2[a] * o1.layer.th.at(s, a);
        } else if (j == ny - 1) {
          dth = 0.0;
          ddth = 0.0;
        } else {
          const std::vector<double> w1 =
              fd_weights(yy[j], {yy[bnd], yy[bnd + 1], yy[bnd + 2]}, 1);
          const std::vector<double> w2 =
              fd_weights(yy[j], {yy[bnd], yy[bnd + 1], yy[bnd + 2]}, 2);
          for (int a = 0; a < 3; ++a) {
            dth += w1[a] * o1.layer.th.at(s, bnd + a);
            ddth += w2[a] * o1.layer.th.at(s, bnd + a);
          }
        }
        const double th = o1.layer.th.at(s, j);
        const double dth_dt =
            -(w.divu0 * yy[j]) * dth - (2.0 / 3.0) * w.divu0 * th + diff * ddth;
        const double drho_dt = -(coef_dot * th + coef * dth_dt);
        integrand.at(s, j) = drho_dt / w.rho0;
      }
    }
    NormalVelocityResult nv = derive_normal_velocity(ygrid_, integrand, cfg_.tol.tol_far);
    b.u3_bar = std::move(nv.u3);
    b.normal_velocity_tail = nv.tail_estimate;
  }

  // pbar_2: the k=1 instance of the normal momentum balance (all terms vanish
  // with ubar_{1,3} = 0, Jbar_0 = 0; assembled generically all the same)
  {
    Trajectory<double> rhs;
    rhs.resize(steps, ny);
    b.p_bar = derive_pressure(ygrid_, rhs);
  }

  // wall datum d_2 = -ubar_{2,3}(0); the order-2 Knudsen correction trace
  // vanishes. The interior order starts from the lift-compatible state, so a
  // nonzero t=0 datum is admissible.
  b.d_k.resize(steps);
  for (int s = 0; s < steps; ++s) b.d_k[s] = -b.u3_bar.at(s, 0);

  // interior order 2: Burnett-moment sources of (I-P) f_2 and the wall datum
  {
    const InteriorSources src =
        build_interior_sources(euler_, o1.interior, cfg_.backend, *grid_, cfg_.threads);
    HyperbolicCoefficients hc;
    hc.f = [src](double t, double x, int i) { return src.sample_f(t, x, i); };
    hc.g = [src](double t, double x) { return src.sample_g(t, x); };
    const std::vector<double> dk = b.d_k;
    const double dt = euler_.dt;
    hc.wall_datum = [dk, dt](double t) { return series_at(dk, t, dt); };
    hc.wall_datum_dot = [dk, dt](double t) { return series_dot(dk, t, dt); };
    hc.lift_compatible_init = true;
    b.interior = solve_linear_hyperbolic(euler_, hc, cfg_.horizon);
  }

  bundles_.push_back(std::move(b));
  OrderBundle& b2 = bundles_.back();

  // Jbar_1 moment fields on a sampled step stride (linear in t between)
  const int stride = std::max(1, steps / 120);
  std::vector<int> sampled;
  for (int s = 0; s < steps; s += stride) sampled.push_back(s);
  if (sampled.back() != steps - 1) sampled.push_back(steps - 1);
  Trajectory<double> jA1s, jA2s, jA3s, jB3s;
  jA1s.resize(static_cast<int>(sampled.size()), ny);
  jA2s.resize(static_cast<int>(sampled.size()), ny);
  jA3s.resize(static_cast<int>(sampled.size()), ny);
  jB3s.resize(static_cast<int>(sampled.size()), ny);
  parallel_for(sampled.size(), resolve_thread_count(cfg_.threads), [&](std::size_t si) {
    const int s = sampled[si];
    const auto cache_ptr = build_layer_step_cache(s);
    const LayerStepCache& cache = *cache_ptr;
    const BurnettTensors bt = burnett(euler_.wall[s].state(), *grid_);
    for (int j = 0; j < ny; ++j) {
      const Eigen::ArrayXd& J = cache.jbar1[j];
      jA1s.at(static_cast<int>(si), j) = grid_->inner(bt.A[2][0], J);
      jA2s.at(static_cast<int>(si), j) = grid_->inner(bt.A[2][1], J);
      jA3s.at(static_cast<int>(si), j) = grid_->inner(bt.A[2][2], J);
      jB3s.at(static_cast<int>(si), j) = grid_->inner(bt.B[2], J);
    }
  });
  auto j_field_at = [&](const Trajectory<double>& f, int s, int j) {
    // linear interpolation between sampled steps
    const int ns = static_cast<int>(sampled.size());
    int lo = 0;
    while (lo + 1 < ns && sampled[lo + 1] <= s) ++lo;
    if (lo + 1 >= ns) return f.at(ns - 1, j);
    const double a = static_cast<double>(s - sampled[lo]) / (sampled[lo + 1] - sampled[lo]);
    return (1.0 - a) * f.at(lo, j) + a * f.at(lo + 1, j);
  };

  // Neumann data for the order-2 layer: micro f_3 at the wall and the layer
  // feedback through Jbar_1
  b2.neumann.resize(steps);
  for (int s = 0; s < steps; ++s) {
    const CollisionOperator& op = wall_op(s);
    MatchingInputs in;
    in.wall_state = euler_.wall[s].state();
    in.mu = wall_mu_[s];
    in.kappa = wall_kappa_[s];
    in.micro_fk_wall = micro_f3_slice(euler_, o1.interior, b2.interior, op, s, 0.0);
    in.jA_wall[0] = j_field_at(jA1s, s, 0);
    in.jA_wall[1] = j_field_at(jA2s, s, 0);
    in.jB_wall = j_field_at(jB3s, s, 0);
    in.u1_plus_ubar1_wall = {
        sample_field(o1.interior.nodes, o1.interior.u1, s, 0.0) + o1.layer.u1.at(s, 0),
        sample_field(o1.interior.nodes, o1.interior.u2, s, 0.0) + o1.layer.u2.at(s, 0), 0.0};
    in.ubar_km1_3_wall = b2.u3_bar.at(s, 0);
    in.theta1_plus_thbar1_wall =
        sample_field(o1.interior.nodes, o1.interior.theta, s, 0.0) + o1.layer.th.at(s, 0);
    b2.neumann[s] = neumann_from_matching(in, *grid_);
  }

  // layer sources (slab reduction): transported second-order normal velocity
  // plus the derivative of the Jbar_1 Burnett moments
  Trajectory<double> F1f, F2f, Gf;
  {
    Trajectory<double> br1, br2, brth, jA1f, jA2f, jB3f;
    br1.resize(steps, ny);
    br2.resize(steps, ny);
    brth.resize(steps, ny);
    jA1f.resize(steps, ny);
    jA2f.resize(steps, ny);
    jB3f.resize(steps, ny);
    for (int s = 0; s < steps; ++s) {
      const WallTrace& w = euler_.wall[s];
      const double u11 = sample_field(o1.interior.nodes, o1.interior.u1, s, 0.0);
      const double u12 = sample_field(o1.interior.nodes, o1.interior.u2, s, 0.0);
      const double th1 = sample_field(o1.interior.nodes, o1.interior.theta, s, 0.0);
      for (int j = 0; j < ny; ++j) {
        const double y = ygrid_.y[j];
        const double u23 = b2.u3_bar.at(s, j);
        br1.at(s, j) = (w.d3u0[0] * y + u11 + o1.layer.u1.at(s, j)) * u23;
        br2.at(s, j) = (w.d3u0[1] * y + u12 + o1.layer.u2.at(s, j)) * u23;
        brth.at(s, j) = (3.0 * w.d3T0 * y + th1 + o1.layer.th.at(s, j)) * u23;
        jA1f.at(s, j) = j_field_at(jA1s, s, j);
        jA2f.at(s, j) = j_field_at(jA2s, s, j);
        jB3f.at(s, j) = j_field_at(jB3s, s, j);
      }
    }
    const Trajectory<double> dbr1 = y_derivative(ygrid_, br1);
    const Trajectory<double> dbr2 = y_derivative(ygrid_, br2);
    const Trajectory<double> dbrth = y_derivative(ygrid_, brth);
    const Trajectory<double> djA1 = y_derivative(ygrid_, jA1f);
    const Trajectory<double> djA2 = y_derivative(ygrid_, jA2f);
    const Trajectory<double> djB3 = y_derivative(ygrid_, jB3f);
    F1f.resize(steps, ny);
    F2f.resize(steps, ny);
    Gf.resize(steps, ny);
    for (int s = 0; s < steps; ++s) {
      const WallTrace& w = euler_.wall[s];
      for (int j = 0; j < ny; ++j) {
        F1f.at(s, j) = -w.rho0 * dbr1.at(s, j) - w.T0 * djA1.at(s, j);
        F2f.at(s, j) = -w.rho0 * dbr2.at(s, j) - w.T0 * djA2.at(s, j);
        Gf.at(s, j) = -w.rho0 * dbrth.at(s, j) -
                      1.2 * std::pow(w.T0, 1.5) * djB3.at(s, j) +
                      0.6 * (2.0 * field_dt(b2.p_bar, s, j, euler_.dt) +
                             (10.0 / 3.0) * w.divu0 * b2.p_bar.at(s, j));
      }
    }
  }

  LayerCoefficients lc = base_layer_coeffs(b2.neumann, cfg_.layer_init_match_neumann);
  {
    const double dt = euler_.dt;
    const auto yy = ygrid_.y;
    auto fieldsample = [yy, dt](const Trajectory<double>& f, double t, double y) {
      const int last = f.steps - 1;
      const double x = std::clamp(t / dt, 0.0, static_cast<double>(last));
      const int s0 = std::min(static_cast<int>(x), std::max(last - 1, 0));
      const double a = last == 0 ? 0.0 : x - s0;
      const int n = static_cast<int>(yy.size());
      int j = static_cast<int>(std::upper_bound(yy.begin(), yy.end(), y) - yy.begin()) - 1;
      j = std::clamp(j, 0, n - 2);
      const double ty = (y - yy[j]) / (yy[j + 1] - yy[j]);
      auto atstep = [&](int s) {
        return (1.0 - ty) * f.at(s, j) + ty * f.at(s, j + 1);
      };
      if (last == 0) return atstep(0);
      return (1.0 - a) * atstep(s0) + a * atstep(s0 + 1);
    };
    auto F1c = std::make_shared<Trajectory<double>>(F1f);
    auto F2c = std::make_shared<Trajectory<double>>(F2f);
    auto Gc = std::make_shared<Trajectory<double>>(Gf);
    lc.source = [F1c, F2c, Gc, fieldsample](double t, double y, int c) {
      const Trajectory<double>& f = c == 0 ? *F1c : (c == 1 ? *F2c : *Gc);
      return fieldsample(f, t, y);
    };
  }
  b2.layer = solve_layer_parabolic(lc, ygrid_, euler_.dt, steps - 1, cfg_.weight_l);
  finish_layer_density(b2);

  b2.knudsen_trivial = false;
  {
    const int s = steps / 2;
    HalfSpaceProblem hp;
    hp.wall_state = euler_.wall[s].state();
    hp.eta = etagrid_;
    hp.f_b = ghat_slice(2, s);
    hp.kappa_w = cfg_.kappa_w;
    hp.a_frak = cfg_.a_frak;
    b2.ghat_report = check_solvability(hp, *grid_, cfg_.tol.tol_solvability);
  }
  layer_caches_.clear();  // rebuilt with final order-2 fields on demand
}

void ExpansionPipeline::build_order_3() {
  throw std::runtime_error(
      "expansion order 3 requires the third-order layer feedback; not available in this build");
}

// ---------------------------------------------------------------------------
// slices
// ---------------------------------------------------------------------------

Eigen::ArrayXd ExpansionPipeline::interior_micro_slice(int k, int step, double x3) const {
  if (k == 1) return Eigen::ArrayXd::Zero(grid_->size());
  const FluidPoint st = euler_.interp(step, x3);
  const CollisionOperator op(cfg_.backend, st, *grid_, cfg_.threads);
  if (k == 2) return micro_f2_slice(euler_, order(1).interior, op, step, x3);
  return micro_f3_slice(euler_, order(1).interior, order(2).interior, op, step, x3);
}

Eigen::ArrayXd ExpansionPipeline::interior_f_slice(int k, int step, double x3) const {
  const FluidPoint st = euler_.interp(step, x3);
  const MacroProjector proj(st, *grid_);
  Eigen::ArrayXd out = interior_macro_slice(proj, order(k).interior, step, x3);
  if (k >= 2) out += interior_micro_slice(k, step, x3);
  return out;
}

Eigen::ArrayXd ExpansionPipeline::layer_micro_slice(int k, int step, double y) const {
  if (k == 1 || y >= ygrid_.y_max()) return Eigen::ArrayXd::Zero(grid_->size());
  const LayerStepCache& cache = layer_cache(step);
  const auto& m = cache.micro[k - 1];
  const auto& yy = ygrid_.y;
  const int n = static_cast<int>(yy.size());
  int j = static_cast<int>(std::upper_bound(yy.begin(), yy.end(), y) - yy.begin()) - 1;
  j = std::clamp(j, 0, n - 2);
  const double t = (y - yy[j]) / (yy[j + 1] - yy[j]);
  return (1.0 - t) * m[j] + t * m[j + 1];
}

Eigen::ArrayXd ExpansionPipeline::layer_f_slice(int k, int step, double y) const {
  Eigen::ArrayXd out = layer_macro_slice(k, step, y);
  if (k >= 2) out += layer_micro_slice(k, step, y);
  return out;
}

Eigen::ArrayXd ExpansionPipeline::ghat_slice(int k, int step) const {
  // f_k + fbar_k + fhat_{k,1} at the wall; the correction term vanishes for
  // the orders built here
  Eigen::ArrayXd sum = interior_f_slice(k, step, 0.0) + layer_f_slice(k, step, 0.0);
  return boundary_mismatch(sum, *grid_);
}

const KnudsenSolution* ExpansionPipeline::knudsen_solution(int k, int step) const {
  const OrderBundle& b = order(k);
  if (b.knudsen_trivial) return nullptr;
  auto it = b.knudsen_cache.find(step);
  if (it != b.knudsen_cache.end()) return it->second.get();
  HalfSpaceProblem hp;
  hp.wall_state = euler_.wall[step].state();
  hp.eta = etagrid_;
  hp.f_b = ghat_slice(k, step);
  hp.kappa_w = cfg_.kappa_w;
  hp.a_frak = cfg_.a_frak;
  // warm start from the nearest solved step: the data varies smoothly in t
  const Trajectory<double>* warm = nullptr;
  int best = 1 << 30;
  for (const auto& [st, cached] : b.knudsen_cache)
    if (std::abs(st - step) < best) {
      best = std::abs(st - step);
      warm = &cached->f;
    }
  auto sol = std::make_shared<KnudsenSolution>(
      solve_halfspace(hp, wall_op(step), cfg_.knudsen, warm));
  auto* raw = sol.get();
  b.knudsen_cache.emplace(step, std::move(sol));
  if (b.knudsen_cache.size() > 40) b.knudsen_cache.erase(b.knudsen_cache.begin());
  return raw;
}

Eigen::ArrayXd ExpansionPipeline::knudsen_f_slice(int k, int step, double eta) const {
  const KnudsenSolution* sol = knudsen_solution(k, step);
  if (sol == nullptr || eta >= etagrid_.y_max()) return Eigen::ArrayXd::Zero(grid_->size());
  const auto& ee = etagrid_.y;
  const int n = static_cast<int>(ee.size());
  int j = static_cast<int>(std::upper_bound(ee.begin(), ee.end(), eta) - ee.begin()) - 1;
  j = std::clamp(j, 0, n - 2);
  const double t = (eta - ee[j]) / (ee[j + 1] - ee[j]);
  Eigen::ArrayXd out(grid_->size());
  for (int i = 0; i < grid_->size(); ++i)
    out[i] = (1.0 - t) * sol->f.at(j, i) + t * sol->f.at(j + 1, i);
  return out;
}

Eigen::ArrayXd ExpansionPipeline::wall_triple_slice(int k, int step) const {
  Eigen::ArrayXd sum = interior_f_slice(k, step, 0.0) + layer_f_slice(k, step, 0.0);
  if (!order(k).knudsen_trivial) {
    const KnudsenSolution* sol = knudsen_solution(k, step);
    if (sol) sum += sol->slice(0);
  }
  return sum;
}

double ExpansionPipeline::order_specular_mismatch(int k, int step) const {
  const Eigen::ArrayXd tr = wall_triple_slice(k, step);
  double m = 0.0;
  for (int i = 0; i < grid_->size(); ++i)
    m = std::max(m, std::abs(tr[i] - tr[grid_->reflect_v3(i)]));
  return m;
}

Eigen::ArrayXd ExpansionPipeline::jbar1_slice(int step, double y) const {
  const LayerStepCache& cache = layer_cache(step);
  if (cache.jbar1.empty()) throw std::runtime_error("jbar1_slice requires a built order 2");
  const auto& yy = ygrid_.y;
  const int n = static_cast<int>(yy.size());
  int j = static_cast<int>(std::upper_bound(yy.begin(), yy.end(), y) - yy.begin()) - 1;
  j = std::clamp(j, 0, n - 2);
  const double t = (y - yy[j]) / (yy[j + 1] - yy[j]);
  return (1.0 - t) * cache.jbar1[j] + t * cache.jbar1[j + 1];
}

ExpansionPipeline::TaylorCoeff ExpansionPipeline::taylor_wall_coeff(
    const std::vector<double>& nodes, const std::vector<double>& values, int l) {
  const int need = l + 3;  // order-2 accuracy
  if (static_cast<int>(nodes.size()) < 2 * need)
    throw std::invalid_argument("taylor_wall_coeff: need more samples near the wall");
  TaylorCoeff out;
  {
    const std::vector<double> xs(nodes.begin(), nodes.begin() + need);
    const std::vector<double> w = fd_weights(0.0, xs, l);
    double acc = 0.0;
    for (int a = 0; a < need; ++a) acc += w[a] * values[a];
    out.value = acc;
  }
  {
    // Richardson check on a stride-2 stencil
    std::vector<double> xs, vs;
    for (int a = 0; a < 2 * need; a += 2) {
      xs.push_back(nodes[a]);
      vs.push_back(values[a]);
    }
    const std::vector<double> w = fd_weights(0.0, xs, l);
    double acc = 0.0;
    for (std::size_t a = 0; a < xs.size(); ++a) acc += w[a] * vs[a];
    const double scale = std::max({std::abs(out.value), std::abs(acc), 1e-12});
    out.richardson_rel_diff = std::abs(out.value - acc) / scale;
    out.noisy = out.richardson_rel_diff > 0.2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// composite and defect
// ---------------------------------------------------------------------------

Eigen::ArrayXd ExpansionPipeline::composite_slice(double eps, int step, double x3) const {
  const FluidPoint st = euler_.interp(step, x3);
  Eigen::ArrayXd out = maxwellian(st, *grid_).values;
  const Eigen::ArrayXd smu_x = out.sqrt();
  const Eigen::ArrayXd smu_0 = wall_op(step).projector().sqrt_mu();
  double ek = 1.0;
  for (int k = 1; k <= cfg_.orders; ++k) {
    ek *= eps;
    out += ek * smu_x * interior_f_slice(k, step, x3);
    const double y = x3 / eps;
    if (y < ygrid_.y_max()) out += ek * smu_0 * layer_f_slice(k, step, y);
    const double eta = x3 / (eps * eps);
    if (!order(k).knudsen_trivial && eta < etagrid_.y_max())
      out += ek * smu_0 * knudsen_f_slice(k, step, eta);
  }
  return out;
}

// chain-rule x3-derivative of the composite; layer terms carry 1/eps, the
// Knudsen term uses the transport identity v3 d_eta f = -L0 f + S instead of
// mesh differentiation.
Eigen::ArrayXd ExpansionPipeline::interior_constituent_d3(int k, int step, double x3) const {
  const double h = 1e-4 * (1.0 + std::abs(x3));
  const double xm = std::max(0.0, x3 - h);
  const FluidPoint sp = euler_.interp(step, x3 + h), sm = euler_.interp(step, xm);
  const Eigen::ArrayXd fp = maxwellian(sp, *grid_).values.sqrt() * interior_f_slice(k, step, x3 + h);
  const Eigen::ArrayXd fm = maxwellian(sm, *grid_).values.sqrt() * interior_f_slice(k, step, xm);
  return (fp - fm) / (x3 + h - xm);
}

Eigen::ArrayXd ExpansionPipeline::composite_d3_slice(double eps, int step, double x3) const {
  const LocalEuler le = local_euler(euler_, step, x3);
  const Eigen::ArrayXd mu_x = maxwellian(le.s, *grid_).values;
  Eigen::ArrayXd out = mu_x * dlog_mu(le.s, le.d3);
  const Eigen::ArrayXd smu_0 = wall_op(step).projector().sqrt_mu();
  const MacroProjector& proj0 = wall_op(step).projector();
  double ek = 1.0;
  for (int k = 1; k <= cfg_.orders; ++k) {
    ek *= eps;
    out += ek * interior_constituent_d3(k, step, x3);

    const double y = x3 / eps;
    if (y < ygrid_.y_max()) {
      // d_y of the macroscopic layer slice through the node-FD parameter
      // fields (the same fields that closed the layer hierarchy)
      const OrderBundle& b = order(k);
      const LayerStepCache& cache = layer_cache(step);
      auto dparam = [&](const Trajectory<double>& f) {
        const auto& yy = ygrid_.y;
        const int n = static_cast<int>(yy.size());
        std::vector<double> dvals(n);
        for (int j = 0; j < n; ++j) {
          const int bnd = std::clamp(j - 1, 0, n - 3);
          const std::vector<double> w =
              fd_weights(yy[j], {yy[bnd], yy[bnd + 1], yy[bnd + 2]}, 1);
          dvals[j] = w[0] * f.at(step, bnd) + w[1] * f.at(step, bnd + 1) +
                     w[2] * f.at(step, bnd + 2);
        }
        return MonotoneCubic(yy, dvals)(y);
      };
      Eigen::ArrayXd dyf = proj0.hydrodynamic_slice(
          dparam(b.rho_bar), {dparam(b.layer.u1), dparam(b.layer.u2), dparam(b.u3_bar)},
          dparam(b.layer.th));
      if (k >= 2) {
        const auto& dm = cache.dmicro[k - 1];
        const auto& yy = ygrid_.y;
        const int n = static_cast<int>(yy.size());
        int j = static_cast<int>(std::upper_bound(yy.begin(), yy.end(), y) - yy.begin()) - 1;
        j = std::clamp(j, 0, n - 2);
        const double t = (y - yy[j]) / (yy[j + 1] - yy[j]);
        dyf += (1.0 - t) * dm[j] + t * dm[j + 1];
      }
      out += (ek / eps) * smu_0 * dyf;
    }

    const double eta = x3 / (eps * eps);
    if (!order(k).knudsen_trivial && eta < etagrid_.y_max()) {
      const Eigen::ArrayXd fhat = knudsen_f_slice(k, step, eta);
      const Eigen::ArrayXd Lf = wall_op(step).apply(fhat);
      Eigen::ArrayXd deta(grid_->size());
      for (int i = 0; i < grid_->size(); ++i) deta[i] = -Lf[i] / grid_->node(i)[2];
      out += (ek / (eps * eps)) * smu_0 * deta;
    }
  }
  return out;
}

ResidualReport ExpansionPipeline::evaluate_defect(double eps) const {
  ResidualReport rep;
  rep.eps = eps;
  const int steps = euler_.steps();
  const int nx = euler_.grid.cells();
  const int collar = std::max(cfg_.collar_cells, 1);

  std::vector<int> tsamples;
  for (double fr : {0.3, 0.55, 0.8}) {
    int s = static_cast<int>(fr * (steps - 1));
    s = std::clamp(s, 2, steps - 3);
    tsamples.push_back(s);
  }
  std::vector<int> xcells;
  for (int i = collar; i < nx - std::max(2, collar); ++i) xcells.push_back(i);

  const double nu_bar =
      cfg_.backend.kind == BackendKind::BgkModel ? cfg_.backend.nu.value : 0.0;
  double l2 = 0.0, sup = 0.0, posmin = 1e300, wallmis = 0.0;

  for (int s : tsamples) {
    double l2_t = 0.0;
    for (int ci : xcells) {
      const double x = euler_.grid.centers[ci];
      const Eigen::ArrayXd phi0 = composite_slice(eps, s, x);
      const Eigen::ArrayXd phim1 = composite_slice(eps, s - 1, x);
      const Eigen::ArrayXd phip1 = composite_slice(eps, s + 1, x);
      const Eigen::ArrayXd phim2 = composite_slice(eps, s - 2, x);
      const Eigen::ArrayXd phip2 = composite_slice(eps, s + 2, x);
      const Eigen::ArrayXd dphidt =
          (phim2 - 8.0 * phim1 + 8.0 * phip1 - phip2) / (12.0 * euler_.dt);
      const Eigen::ArrayXd d3 = composite_d3_slice(eps, s, x);
      KineticSlice F(*grid_, phi0);
      Eigen::ArrayXd Q;
      if (cfg_.backend.kind == BackendKind::BgkModel)
        Q = q_model_bgk(F, nu_bar, *grid_).values;
      else
        Q = q_bilinear(F, F, cfg_.backend, *grid_, cfg_.threads).values;
      Eigen::ArrayXd D(grid_->size());
      for (int i = 0; i < grid_->size(); ++i)
        D[i] = dphidt[i] + grid_->node(i)[2] * d3[i] - Q[i] / (eps * eps);
      const double wcell = euler_.grid.widths[ci];
      for (int i = 0; i < grid_->size(); ++i) {
        l2_t += wcell * grid_->weight(i) * D[i] * D[i];
        sup = std::max(sup, std::abs(D[i]));
        posmin = std::min(posmin, phi0[i]);
      }
    }
    l2 = std::max(l2, std::sqrt(l2_t));
    const Eigen::ArrayXd wall = composite_slice(eps, s, 0.0);
    for (int i = 0; i < grid_->size(); ++i)
      wallmis = std::max(wallmis, std::abs(wall[i] - wall[grid_->reflect_v3(i)]));
  }
  rep.l2_defect = l2;
  rep.sup_defect = sup;
  rep.positivity_min = posmin;
  rep.composite_wall_mismatch = wallmis;
  rep.per_order_mismatch.resize(cfg_.orders, 0.0);
  for (int k = 1; k <= cfg_.orders; ++k)
    for (int s : tsamples)
      rep.per_order_mismatch[k - 1] =
          std::max(rep.per_order_mismatch[k - 1], order_specular_mismatch(k, s));
  if (cfg_.orders >= 2) rep.ghat2_moments = order(2).ghat_report.moments;
  return rep;
}

DefectSweep ExpansionPipeline::defect_sweep() const {
  DefectSweep sweep;
  std::vector<double> xs, ys;
  for (double eps : cfg_.epsilons) {
    sweep.reports.push_back(evaluate_defect(eps));
    xs.push_back(eps);
    ys.push_back(sweep.reports.back().l2_defect);
  }
  if (xs.size() >= 3) sweep.slope = fit_loglog_slope(xs, ys);
  return sweep;
}

// ---------------------------------------------------------------------------
// acoustic limit study
// ---------------------------------------------------------------------------

AcousticGapReport acoustic_gap_study(const ExpansionConfig& base, const EulerInit& init,
                                     const std::vector<double>& deltas, bool kinetic) {
  AcousticGapReport rep;
  rep.deltas = deltas;
  for (double delta : deltas) {
    EulerOptions opt;
    opt.blowup_ceiling = base.tol.blowup_ceiling;
    const EulerSolution es = solve_euler(init, delta, base.horizon, base.spatial, opt);
    AcousticInit ai{init.phi0, init.Phi0, init.theta0};
    const Grid1D g = es.grid;
    const AcousticSolution ac = solve_acoustic(ai, base.horizon, g, es.dt);
    double gap = 0.0;
    const int stride = std::max(1, es.steps() / 40);
    for (int s = 0; s < es.steps(); s += stride) {
      for (int c = 0; c < g.cells(); ++c) {
        const double x = g.centers[c];
        auto acv = [&](const Trajectory<double>& f) {
          return sample_field(ac.nodes, f, std::min(s, static_cast<int>(ac.times.size()) - 1), x);
        };
        gap = std::max(gap, std::abs(es.rho.at(s, c) - 1.0 - delta * acv(ac.phi)));
        gap = std::max(gap, std::abs(es.u1.at(s, c) - delta * acv(ac.Phi1)));
        gap = std::max(gap, std::abs(es.u2.at(s, c) - delta * acv(ac.Phi2)));
        gap = std::max(gap, std::abs(es.u3.at(s, c) - delta * acv(ac.Phi3)));
        gap = std::max(gap, std::abs(es.T.at(s, c) - 1.0 - delta * acv(ac.theta)));
      }
    }
    rep.fluid_gap.push_back(gap);

    if (kinetic) {
      ExpansionConfig cfg = base;
      cfg.delta = delta;
      ExpansionPipeline pipe(cfg, init);
      pipe.build();
      const double eps = delta * delta;
      const VelocityGrid& grid = pipe.grid();
      const KineticSlice muM = maxwellian(FluidPoint{}, grid);
      double l2 = 0.0, supn = 0.0;
      const int steps = pipe.euler().steps();
      std::vector<int> ts{std::clamp(static_cast<int>(0.5 * steps), 2, steps - 3),
                          std::clamp(steps - 3, 2, steps - 3)};
      for (int s : ts) {
        double l2_t = 0.0;
        const Grid1D& gg = pipe.euler().grid;
        for (int c = 1; c < gg.cells() - 2; ++c) {
          const double x = gg.centers[c];
          const Eigen::ArrayXd comp = pipe.composite_slice(eps, s, x);
          auto acv = [&](const Trajectory<double>& f) {
            return sample_field(ac.nodes, f, std::min(s, static_cast<int>(ac.times.size()) - 1),
                                x);
          };
          const double phi = acv(ac.phi), th = acv(ac.theta);
          const Vec3 Phi{acv(ac.Phi1), acv(ac.Phi2), acv(ac.Phi3)};
          for (int i = 0; i < grid.size(); ++i) {
            const Vec3& v = grid.node(i);
            const double Gv =
                (phi + dot3(v, Phi) + 0.5 * (norm2_3(v) - 3.0) * th) * muM.values[i];
            const double Geps = (comp[i] - muM.values[i]) / delta;
            const double diff = Geps - Gv;
            l2_t += gg.widths[c] * grid.weight(i) * diff * diff;
            supn = std::max(supn, std::abs(diff));
          }
        }
        l2 = std::max(l2, std::sqrt(l2_t));
      }
      rep.kinetic_gap.push_back(std::max(l2, supn));
    }
  }
  rep.fluid_slope = fit_loglog_slope(rep.deltas, rep.fluid_gap);
  if (kinetic) rep.kinetic_slope = fit_loglog_slope(rep.deltas, rep.kinetic_gap);
  return rep;
}

}  // namespace hilbex
