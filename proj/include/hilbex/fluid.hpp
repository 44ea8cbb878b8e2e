#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "hilbex/kinetic.hpp"

namespace hilbex {

// Graded 1D mesh on [0, xmax], refined toward the wall x = 0.
struct Grid1D {
  std::vector<double> edges;    // size cells+1, edges[0] = 0
  std::vector<double> centers;  // size cells
  std::vector<double> widths;

  int cells() const { return static_cast<int>(centers.size()); }
  double xmax() const { return edges.back(); }
  double min_width() const;
  static Grid1D graded(double xmax, int cells, double ratio);
};

enum class SpatialMode { Slab1D, TangentialFourier };

struct SpatialGridSpec {
  SpatialMode mode = SpatialMode::Slab1D;
  double x3_max = 20.0;
  int cells = 320;
  double grading = 1.01;  // width ratio away from the wall
  double cfl = 0.4;
  std::vector<std::array<double, 2>> modes;  // tangential wavevectors (fourier mode)
};

template <class T>
struct Trajectory {
  int steps = 0;
  int nodes = 0;
  std::vector<T> a;
  void resize(int s, int n) {
    steps = s;
    nodes = n;
    a.assign(static_cast<std::size_t>(s) * n, T{});
  }
  T& at(int s, int j) { return a[static_cast<std::size_t>(s) * nodes + j]; }
  const T& at(int s, int j) const { return a[static_cast<std::size_t>(s) * nodes + j]; }
};

struct WallTrace {
  double rho0 = 1.0, T0 = 1.0;
  Vec3 u0{0, 0, 0};
  double d3rho0 = 0.0, d3T0 = 0.0, d3p0 = 0.0;
  Vec3 d3u0{0, 0, 0};
  double divu0 = 0.0;  // = d3 u3 at the wall in slab mode
  double d33rho0 = 0.0, d33T0 = 0.0;
  Vec3 d33u0{0, 0, 0};

  FluidPoint state() const { return FluidPoint{rho0, u0, T0}; }
};

// Initial perturbation (phi0, Phi0, theta0)(x3) entering the Euler data
// (1 + delta phi0, delta Phi0, 1 + delta theta0).
struct EulerInit {
  std::function<double(double)> phi0;
  std::array<std::function<double(double)>, 3> Phi0;
  std::function<double(double)> theta0;
};

struct EulerSolution {
  Grid1D grid;
  double dt = 0.0;
  std::vector<double> times;
  Trajectory<double> rho, u1, u2, u3, T;  // cell-centered primitives
  std::vector<WallTrace> wall;            // per step
  bool blew_up = false;
  double reached_time = 0.0;

  int steps() const { return static_cast<int>(times.size()); }
  FluidPoint at(int step, int cell) const {
    return FluidPoint{rho.at(step, cell),
                      {u1.at(step, cell), u2.at(step, cell), u3.at(step, cell)},
                      T.at(step, cell)};
  }
  // Fluid state and x3-gradients at an arbitrary point by local interpolation.
  FluidPoint interp(int step, double x3) const;
  FluidPoint interp_d3(int step, double x3) const;  // component-wise d/dx3
};

struct EulerOptions {
  double blowup_ceiling = 1e3;
  double dt_override = 0.0;  // > 0 forces the step
};

EulerSolution solve_euler(const EulerInit& init, double delta, double horizon,
                          const SpatialGridSpec& spec, const EulerOptions& opt = {});

// ---- node-based linear solvers (shared graded node grid) ----

// Node grid used by the acoustic and linear hyperbolic solvers:
// {0, cell centers..., xmax}.
std::vector<double> linear_solver_nodes(const Grid1D& g);

struct AcousticSolution {
  std::vector<double> nodes;
  double dt = 0.0;
  std::vector<double> times;
  Trajectory<double> phi, Phi1, Phi2, Phi3, theta;
  std::vector<double> energy;  // quadratic invariant per step
};

struct AcousticInit {
  std::function<double(double)> phi0;
  std::array<std::function<double(double)>, 3> Phi0;
  std::function<double(double)> theta0;
};

// closed_outer adds a reflecting wall at x3_max (for conservation checks on
// standing data); the default outer closure is zero-gradient (open).
AcousticSolution solve_acoustic(const AcousticInit& init, double horizon, const Grid1D& grid,
                                double dt, bool closed_outer = false);

// One periodic tangential mode exp(i k.x_par): complex amplitudes in x3.
using Cplx = std::complex<double>;

struct AcousticModeSolution {
  std::vector<double> nodes;
  double dt = 0.0;
  std::vector<double> times;
  Trajectory<Cplx> phi, Phi1, Phi2, Phi3, theta;
  std::vector<double> energy;
};

struct AcousticModeInit {
  std::function<Cplx(double)> phi0;
  std::array<std::function<Cplx(double)>, 3> Phi0;
  std::function<Cplx(double)> theta0;
};

AcousticModeSolution solve_acoustic_mode(const AcousticModeInit& init,
                                         const std::array<double, 2>& kpar, double horizon,
                                         const Grid1D& grid, double dt,
                                         bool closed_outer = false);

// Sources, boundary datum and initial data of the linearized interior system.
struct HyperbolicCoefficients {
  // f[i](t, x3) i=0..2 momentum sources, g(t, x3) energy source
  std::function<double(double, double, int)> f = nullptr;  // (t, x, i)
  std::function<double(double, double)> g = nullptr;
  std::function<double(double)> wall_datum = nullptr;       // d(t)
  std::function<double(double)> wall_datum_dot = nullptr;   // d'(t)
  std::function<double(double, int)> init = nullptr;        // (x, comp 0..4) = (rho,u1,u2,u3,theta)
  // start from the minimal datum-compatible state: the initial normal
  // velocity is augmented by d(0) times the boundary lift shape
  bool lift_compatible_init = false;
};

struct HyperbolicSolution {
  std::vector<double> nodes;
  double dt = 0.0;
  std::vector<double> times;
  Trajectory<double> rho, u1, u2, u3, theta;
  double max_energy_growth = 1.0;  // max E(t)/E(0 or source scale)
  bool energy_warning = false;
};

// Coefficients (rho, u, T)(t, x3) are taken from the Euler solution; the
// returned trajectory shares its dt and step count.
HyperbolicSolution solve_linear_hyperbolic(const EulerSolution& euler,
                                           const HyperbolicCoefficients& coeffs, double horizon,
                                           double energy_growth_ceiling = 1e6);

// Tangential-mode variant: all data carry a factor exp(i k.x_par); the Euler
// background must be slab (x_par independent) so modes decouple.
struct HyperbolicModeCoefficients {
  std::function<Cplx(double, double, int)> f = nullptr;
  std::function<Cplx(double, double)> g = nullptr;
  std::function<Cplx(double)> wall_datum = nullptr;
  std::function<Cplx(double)> wall_datum_dot = nullptr;
  std::function<Cplx(double, int)> init = nullptr;
  bool lift_compatible_init = false;
};

struct HyperbolicModeSolution {
  std::vector<double> nodes;
  double dt = 0.0;
  std::vector<double> times;
  Trajectory<Cplx> rho, u1, u2, u3, theta;
  double max_energy_growth = 1.0;
  bool energy_warning = false;
};

HyperbolicModeSolution solve_linear_hyperbolic_mode(const EulerSolution& euler,
                                                    const HyperbolicModeCoefficients& coeffs,
                                                    const std::array<double, 2>& kpar,
                                                    double horizon,
                                                    double energy_growth_ceiling = 1e6);

}  // namespace hilbex
