#include "hilbex/velocity_grid.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace hilbex {

namespace {

std::atomic<std::uint64_t> g_next_grid_id{1};

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
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
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

GridScheme grid_scheme_from_string(const std::string& s) {
  if (s == "uniform-tensor") return GridScheme::UniformTensor;
  if (s == "gauss-tensor") return GridScheme::GaussTensor;
  throw std::invalid_argument("unknown velocity grid scheme: " + s);
}

std::string to_string(GridScheme s) {
  return s == GridScheme::UniformTensor ? "uniform-tensor" : "gauss-tensor";
}

VelocityGrid::VelocityGrid(double radius, int n_per_axis, GridScheme scheme)
    : radius_(radius), n_axis_(n_per_axis), scheme_(scheme), id_(g_next_grid_id.fetch_add(1)) {
  if (radius <= 0.0) throw std::invalid_argument("velocity grid radius must be positive");
  if (n_per_axis < 4) throw std::invalid_argument("velocity grid needs n_per_axis >= 4");
  if (n_per_axis % 2 != 0)
    throw std::invalid_argument(
        "velocity grid n_per_axis must be even: an odd count places v3 = 0 on the grid, and the "
        "half-space transport sweep divides by v3");

  // 1D axis nodes/weights, built on the positive half and mirrored so the
  // reflection map is bitwise exact.
  std::vector<double> ax(n_per_axis), aw(n_per_axis);
  const int half = n_per_axis / 2;
  if (scheme == GridScheme::UniformTensor) {
    const double h = 2.0 * radius / n_per_axis;
    for (int k = 0; k < half; ++k) {
      const double xk = (k + 0.5) * h;  // midpoint rule
      ax[half + k] = xk;
      ax[half - 1 - k] = -xk;
      aw[half + k] = h;
      aw[half - 1 - k] = h;
    }
  } else {
    std::vector<double> gx, gw;
    gauss_legendre(n_per_axis, gx, gw);
    for (int k = 0; k < half; ++k) {
      const double xk = radius * gx[half + k];
      ax[half + k] = xk;
      ax[half - 1 - k] = -xk;
      aw[half + k] = radius * gw[half + k];
      aw[half - 1 - k] = radius * gw[half + k];
    }
  }

  axis_ = ax;
  const int n3 = n_per_axis * n_per_axis * n_per_axis;
  nodes_.resize(n3);
  weights_.resize(n3);
  reflect_.resize(n3);
  int idx = 0;
  for (int i = 0; i < n_per_axis; ++i)
    for (int j = 0; j < n_per_axis; ++j)
      for (int k = 0; k < n_per_axis; ++k, ++idx) {
        nodes_[idx] = {ax[i], ax[j], ax[k]};
        weights_[idx] = aw[i] * aw[j] * aw[k];
        reflect_[idx] = (i * n_per_axis + j) * n_per_axis + (n_per_axis - 1 - k);
      }
}

double VelocityGrid::gaussian_mass_defect() const {
  const double c = std::pow(2.0 * M_PI, -1.5);
  double mass = 0.0;
  for (int i = 0; i < size(); ++i)
    mass += weights_[i] * c * safe_exp(-0.5 * norm2_3(nodes_[i]));
  return std::abs(1.0 - mass);
}

nlohmann::json VelocityGrid::to_json() const {
  return {{"radius", radius_}, {"n_per_axis", n_axis_}, {"scheme", to_string(scheme_)}};
}

VelocityGrid VelocityGrid::from_json(const nlohmann::json& j) {
  return VelocityGrid(j.at("radius").get<double>(), j.at("n_per_axis").get<int>(),
                      grid_scheme_from_string(j.at("scheme").get<std::string>()));
}

}  // namespace hilbex
