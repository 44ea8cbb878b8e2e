#pragma once

// Shared finite-difference machinery of the node-based linear solvers
// (acoustic and linearized-interior systems). Both use identical stencils so
// the constant-coefficient reduction of the interior solver matches the
// acoustic solver to round-off.
//
// Fields live on nodes x_0 = 0 < x_1 < ... < x_{N-1}; every RHS evaluation
// pads them with two mirror ghosts at the wall (even or odd per component,
// the characteristic-consistent reflection) and two zero-gradient ghosts at
// the outer end, then applies central stencils and a fourth-difference
// dissipation at every physical node.

#include <vector>

#include "hilbex/numerics.hpp"

namespace hilbex::fd1d {

inline constexpr int kGhost = 2;

struct Mesh {
  std::vector<double> x;   // physical nodes
  std::vector<double> xp;  // padded coordinates
  // central first-derivative weights on padded triples, per physical node
  std::vector<std::array<double, 3>> d1;

  explicit Mesh(const std::vector<double>& nodes) : x(nodes) {
    const int n = static_cast<int>(x.size());
    xp.resize(n + 2 * kGhost);
    for (int i = 0; i < n; ++i) xp[i + kGhost] = x[i];
    xp[1] = -x[1];  // mirror of node 1 (node 0 sits on the wall)
    xp[0] = -x[2];
    xp[n + kGhost] = 2.0 * x[n - 1] - x[n - 2];
    xp[n + kGhost + 1] = 2.0 * x[n - 1] - x[n - 3];
    d1.resize(n);
    for (int j = 0; j < n; ++j) {
      const int p = j + kGhost;
      const std::vector<double> w = fd_weights(xp[p], {xp[p - 1], xp[p], xp[p + 1]}, 1);
      d1[j] = {w[0], w[1], w[2]};
    }
  }

  int n() const { return static_cast<int>(x.size()); }
};

// parity of the wall mirror: +1 even, -1 odd
template <class T>
struct Padded {
  std::vector<T> v;  // padded values
  explicit Padded(int n) : v(n + 2 * kGhost, T{}) {}

  void fill(const std::vector<T>& field, double parity, bool closed_outer = false,
            double outer_parity = 1.0) {
    const int n = static_cast<int>(field.size());
    for (int i = 0; i < n; ++i) v[i + kGhost] = field[i];
    // wall ghosts mirror nodes 1 and 2 about x = 0
    v[1] = parity * field[1];
    v[0] = parity * field[2];
    if (closed_outer) {
      // reflecting outer wall: mirror about the last node
      v[n + kGhost] = outer_parity * field[n - 2];
      v[n + kGhost + 1] = outer_parity * field[n - 3];
    } else {
      // zero-gradient outer ghosts
      v[n + kGhost] = field[n - 1];
      v[n + kGhost + 1] = field[n - 1];
    }
  }

  T d1(const Mesh& m, int j) const {
    const int p = j + kGhost;
    return m.d1[j][0] * v[p - 1] + m.d1[j][1] * v[p] + m.d1[j][2] * v[p + 1];
  }

  // fourth difference in index space, constant-annihilating
  T d4(int j) const {
    const int p = j + kGhost;
    return v[p - 2] - 4.0 * v[p - 1] + 6.0 * v[p] - 4.0 * v[p + 1] + v[p + 2];
  }
};

template <class T>
void add_dissipation(const Mesh& m, const Padded<T>& f, double sigma, double speed,
                     std::vector<T>& rhs) {
  const int n = m.n();
  for (int j = 0; j < n; ++j) {
    const double h = 0.5 * (m.xp[j + kGhost + 1] - m.xp[j + kGhost - 1]);
    rhs[j] -= sigma * speed / h * f.d4(j);
  }
}

}  // namespace hilbex::fd1d
