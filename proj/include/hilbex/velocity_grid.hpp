#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hilbex/numerics.hpp"
#include "json.hpp"

namespace hilbex {

enum class GridScheme { UniformTensor, GaussTensor };

GridScheme grid_scheme_from_string(const std::string& s);
std::string to_string(GridScheme s);

// Truncated tensor-product velocity mesh on [-radius, radius]^3 with positive
// quadrature weights. Node sets are mirrored bitwise about every axis, so the
// specular map v3 -> -v3 is an exact permutation of the nodes. Even per-axis
// counts keep v3 = 0 off the grid.
class VelocityGrid {
 public:
  VelocityGrid(double radius, int n_per_axis, GridScheme scheme);

  int size() const { return static_cast<int>(nodes_.size()); }
  int n_per_axis() const { return n_axis_; }
  double radius() const { return radius_; }
  GridScheme scheme() const { return scheme_; }
  std::uint64_t id() const { return id_; }

  const Vec3& node(int i) const { return nodes_[i]; }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  double weight(int i) const { return weights_[i]; }
  const Eigen::ArrayXd& weights() const { return weights_; }

  // Index of the node (v1, v2, -v3); an exact involution.
  int reflect_v3(int i) const { return reflect_[i]; }

  // Shared 1D axis nodes (ascending); node(i) = (axis[ix], axis[iy], axis[iz])
  // with i = (ix*n + iy)*n + iz.
  const std::vector<double>& axis() const { return axis_; }

  double inner(const Eigen::ArrayXd& f, const Eigen::ArrayXd& g) const {
    return (weights_ * f * g).sum();
  }
  double norm(const Eigen::ArrayXd& f) const { return std::sqrt(inner(f, f)); }

  // |1 - quadrature mass of the standard Maxwellian|; the reported truncation
  // plus aliasing error of the mesh.
  double gaussian_mass_defect() const;

  nlohmann::json to_json() const;
  static VelocityGrid from_json(const nlohmann::json& j);

 private:
  double radius_;
  int n_axis_;
  GridScheme scheme_;
  std::uint64_t id_;
  std::vector<Vec3> nodes_;
  Eigen::ArrayXd weights_;
  std::vector<int> reflect_;
  std::vector<double> axis_;
};

}  // namespace hilbex
