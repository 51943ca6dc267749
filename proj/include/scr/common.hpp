#pragma once

// Shared numeric utilities: error types, a deterministic RNG with explicit
// stream splitting, stable log-space helpers, and small statistics routines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

// ---------------------------------------------------------------------------
// Errors. Validation problems (bad input) and numerical failures (bad state)
// map to different CLI exit codes, so they are distinct types.

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class CsvParseError : public ValidationError {
 public:
  CsvParseError(const std::string& msg, std::size_t line)
      : ValidationError(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class NonPositiveDefiniteError : public NumericalError {
 public:
  NonPositiveDefiniteError(const std::string& msg, double min_eigenvalue)
      : NumericalError(msg + " (smallest eigenvalue " +
                       std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class InitializationError : public NumericalError {
 public:
  explicit InitializationError(const std::string& msg) : NumericalError(msg) {}
};

// ---------------------------------------------------------------------------
// RNG. mt19937_64 state with hand-rolled variate generation so that draws are
// bit-identical across standard libraries. Streams are split from a master
// seed through splitmix64, which keeps chains independent of thread schedule.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }
  Rng(std::uint64_t master, std::uint64_t stream)
      : Rng(splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  void reseed(std::uint64_t seed) {
    // splitmix-expanded mt19937_64 seeding
    std::uint64_t x = seed;
    for (int i = 0; i < 312; ++i) state_[i] = x = splitmix64(x);
    idx_ = 312;
    have_spare_ = false;
  }

  std::uint64_t next_u64() {
    if (idx_ >= 312) twist();
    std::uint64_t x = state_[idx_++];
    x ^= (x >> 29) & 0x5555555555555555ULL;
    x ^= (x << 17) & 0x71d67fffeda60000ULL;
    x ^= (x << 37) & 0xfff7eee000000000ULL;
    x ^= x >> 43;
    return x;
  }

  // uniform on (0,1); never returns exactly 0 or 1
  double uniform() {
    double u = (next_u64() >> 11) * 0x1.0p-53;
    return u <= 0.0 ? 0x1.0p-53 : u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_int(std::uint64_t n) {
    // bounded rejection sampler, unbiased
    std::uint64_t threshold = (~n + 1) % n;  // = 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log(uniform()); }

  // standard smallest-extreme-value variate: cdf 1 - exp(-exp(z))
  double sev() { return std::log(-std::log(uniform())); }

 private:
  void twist() {
    constexpr std::uint64_t kUpper = 0xffffffff80000000ULL;
    constexpr std::uint64_t kLower = 0x7fffffffULL;
    for (int i = 0; i < 312; ++i) {
      std::uint64_t x = (state_[i] & kUpper) | (state_[(i + 1) % 312] & kLower);
      std::uint64_t y = x >> 1;
      if (x & 1) y ^= 0xb5026f5aa96619e9ULL;
      state_[i] = state_[(i + 156) % 312] ^ y;
    }
    idx_ = 0;
  }

  std::uint64_t state_[312];
  int idx_ = 312;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Log-space helpers.

inline double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// log(1 - exp(x)) for x < 0
inline double log1mexp(double x) {
  if (x >= 0.0) return -kInf;
  return x > -std::numbers::ln2 ? std::log(-std::expm1(x))
                                : std::log1p(-std::exp(x));
}

// ---------------------------------------------------------------------------
// Standard-normal tail machinery. The far right tail switches to the
// asymptotic Mills-ratio series; erfc alone loses the log around z ~ 37.

inline double norm_log_pdf(double z) { return -0.5 * (z * z + kLog2Pi); }

namespace detail {
inline double norm_lsf_right(double z) {
  // z >= 20: phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
  double iz2 = 1.0 / (z * z);
  double corr = 1.0 - iz2 * (1.0 - 3.0 * iz2 * (1.0 - 5.0 * iz2 * (1.0 - 7.0 * iz2)));
  return norm_log_pdf(z) - std::log(z) + std::log(corr);
}
}  // namespace detail

// log P(Z > z)
inline double norm_log_sf(double z) {
  if (z >= 20.0) return detail::norm_lsf_right(z);
  if (z <= -20.0) return std::log1p(-std::exp(detail::norm_lsf_right(-z)));
  return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
}

// log P(Z <= z)
inline double norm_log_cdf(double z) { return norm_log_sf(-z); }

// phi(z) / P(Z > z), stable for large |z|
inline double norm_hazard(double z) {
  return std::exp(norm_log_pdf(z) - norm_log_sf(z));
}

// Inverse standard-normal cdf (Acklam's rational approximation plus one
// Halley refinement; relative error below 1e-14 on (0,1)).
inline double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    return kNaN;
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step against the exact cdf
  double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

// ---------------------------------------------------------------------------
// Quantiles and moments.

// Type-7 (linear interpolation) quantile of an unsorted sample.
inline double quantile_type7(std::vector<double> xs, double p) {
  if (xs.empty()) return kNaN;
  std::sort(xs.begin(), xs.end());
  if (p <= 0.0) return xs.front();
  if (p >= 1.0) return xs.back();
  double h = (static_cast<double>(xs.size()) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(h);
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return kNaN;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double variance_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double sd_of(std::span<const double> xs) { return std::sqrt(variance_of(xs)); }

// ---------------------------------------------------------------------------
// FNV-1a, used for config hashes and input checksums in run manifests.

inline std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::span<const char> bytes) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace scr
