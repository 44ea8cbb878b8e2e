#include "hilbex/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace hilbex {

std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m) {
  // B. Fornberg, "Generation of finite difference formulas on arbitrarily
  // spaced grids", Math. Comp. 51 (1988).
  const int n = static_cast<int>(x.size()) - 1;
  if (n < m) throw std::invalid_argument("fd_weights: need more nodes than derivative order");
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j <= i - 1; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

namespace {

// Integral of the cubic Lagrange interpolant through nodes xs[0..3] over [a,b].
double cubic_segment_integral(const std::array<double, 4>& xs, const std::array<double, 4>& fs,
                              double a, double b) {
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    // integrate l_i(x) over [a,b] by 3-point Gauss-Legendre (exact for cubics)
    static const double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double li = 0.0;
    for (int q = 0; q < 3; ++q) {
      const double xq = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
      double l = 1.0;
      for (int j = 0; j < 4; ++j)
        if (j != i) l *= (xq - xs[j]) / (xs[i] - xs[j]);
      li += gw[q] * l;
    }
    total += fs[i] * li * 0.5 * (b - a);
  }
  return total;
}

double segment_integral(const std::vector<double>& x, const std::vector<double>& f, int j) {
  const int n = static_cast<int>(x.size());
  if (n == 2) return 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
  if (n == 3) {
    // quadratic through all three
    std::array<double, 4> xs{x[0], x[1], x[2], x[2] + (x[2] - x[1])};
    std::array<double, 4> fs{f[0], f[1], f[2], f[2]};
    // fall back to Simpson-like quadratic: integrate parabola through the 3 nodes
    // on [x[j], x[j+1]] via cubic helper with a duplicated far node is ill-posed,
    // so use direct quadratic Lagrange integration instead.
    double total = 0.0;
    static const double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double a = x[j], b = x[j + 1];
    for (int i = 0; i < 3; ++i) {
      double li = 0.0;
      for (int q = 0; q < 3; ++q) {
        const double xq = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
        double l = 1.0;
        for (int k = 0; k < 3; ++k)
          if (k != i) l *= (xq - x[k]) / (x[i] - x[k]);
        li += gw[q] * l;
      }
      total += f[i] * li * 0.5 * (b - a);
    }
    (void)xs;
    (void)fs;
    return total;
  }
  int i0 = std::clamp(j - 1, 0, n - 4);
  std::array<double, 4> xs{x[i0], x[i0 + 1], x[i0 + 2], x[i0 + 3]};
  std::array<double, 4> fs{f[i0], f[i0 + 1], f[i0 + 2], f[i0 + 3]};
  return cubic_segment_integral(xs, fs, x[j], x[j + 1]);
}

}  // namespace

std::vector<double> cumulative_integral_from_right(const std::vector<double>& x,
                                                   const std::vector<double>& f) {
  const int n = static_cast<int>(x.size());
  if (n != static_cast<int>(f.size()) || n < 2)
    throw std::invalid_argument("cumulative_integral_from_right: bad sizes");
  std::vector<double> out(n, 0.0);
  for (int j = n - 2; j >= 0; --j) out[j] = out[j + 1] + segment_integral(x, f, j);
  return out;
}

double integrate(const std::vector<double>& x, const std::vector<double>& f) {
  return cumulative_integral_from_right(x, f).front();
}

SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_linear: bad sizes");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  SlopeFit fit;
  const double den = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0;
  const double ybar = sy / n;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) throw std::invalid_argument("fit_loglog_slope: need at least 3 points");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0)
      throw std::invalid_argument("fit_loglog_slope: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_linear(lx, ly);
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const int n = static_cast<int>(x_.size());
  if (n < 2) throw std::invalid_argument("MonotoneCubic: need >= 2 nodes");
  d_.assign(n, 0.0);
  std::vector<double> h(n - 1), m(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    h[i] = x_[i + 1] - x_[i];
    m[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_[0] = m[0];
  d_[n - 1] = m[n - 2];
  for (int i = 1; i < n - 1; ++i) {
    if (m[i - 1] * m[i] <= 0.0)
      d_[i] = 0.0;
    else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / m[i - 1] + w2 / m[i]);
    }
  }
  // Fritsch-Carlson clamp
  for (int i = 0; i < n - 1; ++i) {
    if (m[i] == 0.0) {
      d_[i] = d_[i + 1] = 0.0;
    } else {
      const double a = d_[i] / m[i], b = d_[i + 1] / m[i];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double t = 3.0 / std::sqrt(s);
        d_[i] = t * a * m[i];
        d_[i + 1] = t * b * m[i];
      }
    }
  }
}

double MonotoneCubic::operator()(double xq) const {
  const int n = static_cast<int>(x_.size());
  if (xq <= x_.front()) return y_.front();
  if (xq >= x_.back()) return y_.back();
  int lo = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
  lo = std::clamp(lo, 0, n - 2);
  const double h = x_[lo + 1] - x_[lo];
  const double t = (xq - x_[lo]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[lo + 1] + h11 * h * d_[lo + 1];
}

double MonotoneCubic::derivative(double xq) const {
  const int n = static_cast<int>(x_.size());
  if (xq <= x_.front()) return 0.0;
  if (xq >= x_.back()) return 0.0;
  int lo = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
  lo = std::clamp(lo, 0, n - 2);
  const double h = x_[lo + 1] - x_[lo];
  const double t = (xq - x_[lo]) / h;
  const double dh00 = 6 * t * t - 6 * t;
  const double dh10 = 3 * t * t - 4 * t + 1;
  const double dh01 = -6 * t * t + 6 * t;
  const double dh11 = 3 * t * t - 2 * t;
  return (dh00 * y_[lo] + dh01 * y_[lo + 1]) / h + dh10 * d_[lo] + dh11 * d_[lo + 1];
}

void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double>& rhs) {
  const int n = static_cast<int>(b.size());
  for (int i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= b[n - 1];
  for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - c[i] * rhs[i + 1]) / b[i];
}

namespace {
inline uint32_t rol(uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }
}  // namespace

std::string sha1_hex(const void* data, std::size_t n) {
  const uint8_t* msg = static_cast<const uint8_t*>(data);
  uint32_t h0 = 0x67452301, h1 = 0xEFCDAB89, h2 = 0x98BADCFE, h3 = 0x10325476, h4 = 0xC3D2E1F0;
  const uint64_t ml = static_cast<uint64_t>(n) * 8;
  std::vector<uint8_t> buf(msg, msg + n);
  buf.push_back(0x80);
  while (buf.size() % 64 != 56) buf.push_back(0);
  for (int i = 7; i >= 0; --i) buf.push_back(static_cast<uint8_t>(ml >> (8 * i)));
  for (std::size_t off = 0; off < buf.size(); off += 64) {
    uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (buf[off + 4 * i] << 24) | (buf[off + 4 * i + 1] << 16) | (buf[off + 4 * i + 2] << 8) |
             buf[off + 4 * i + 3];
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    uint32_t a = h0, b = h1, c = h2, d = h3, e = h4;
    for (int i = 0; i < 80; ++i) {
      uint32_t f, k;
      if (i < 20) {
        f = (b & c) | ((~b) & d);
        k = 0x5A827999;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDC;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6;
      }
      const uint32_t tmp = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h0 += a;
    h1 += b;
    h2 += c;
    h3 += d;
    h4 += e;
  }
  char out[41];
  std::snprintf(out, sizeof(out), "%08x%08x%08x%08x%08x", h0, h1, h2, h3, h4);
  return std::string(out);
}

std::string sha1_hex(const std::string& s) { return sha1_hex(s.data(), s.size()); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += nw) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HILBEX_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace hilbex
