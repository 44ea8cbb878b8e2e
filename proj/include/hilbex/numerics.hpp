#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hilbex {

using Vec3 = std::array<double, 3>;

inline double dot3(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm2_3(const Vec3& a) { return dot3(a, a); }

// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
// Returns weights w so that sum_i w[i] f(x[i]) ~ d^m/dx^m f at x0.
std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m);

// Cumulative integral from the right end: out[j] = int_{x[j]}^{x.back()} f dx.
// Cubic (4-point Newton-Cotes style) segments, O(h^4) global on smooth grids.
std::vector<double> cumulative_integral_from_right(const std::vector<double>& x,
                                                   const std::vector<double>& f);

// int_{x[0]}^{x.back()} f dx with the same cubic segment rule.
double integrate(const std::vector<double>& x, const std::vector<double>& f);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares slope of log(y) against log(x). Requires >= 3 positive points.
SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
// Plain linear least squares.
SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

// Monotone (Fritsch-Carlson) cubic interpolant on a fixed node set.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);
  // Clamps to the end values outside [x.front(), x.back()].
  double operator()(double xq) const;
  double derivative(double xq) const;

 private:
  std::vector<double> x_, y_, d_;  // node slopes
};

// Thomas solve for a tridiagonal system; diagonals (a=sub, b=diag, c=super).
void solve_tridiagonal(std::vector<double> a, std::vector<double> b,
                       std::vector<double> c, std::vector<double>& rhs);

// SHA-1 hex digest (for config hashes and file checksums in run manifests).
std::string sha1_hex(const void* data, std::size_t n);
std::string sha1_hex(const std::string& s);

// Deterministic parallel loop: partitions [0,n) into fixed chunks and runs them
// on up to `threads` workers. Output written by index stays deterministic.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// Worker cap from --threads / HILBEX_THREADS, default 1.
int resolve_thread_count(int requested);

// exp(x) guarded against underflow-to-denormal noise in hot loops.
inline double safe_exp(double x) { return (x < -700.0) ? 0.0 : __builtin_exp(x); }

}  // namespace hilbex
