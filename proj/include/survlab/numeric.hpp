#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace survlab {

// Error hierarchy. Config/data problems are reported with these rather than
// asserts so the CLI can map them to exit codes.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct invalid_config : error {
  using error::error;
};
struct data_error : error {
  using error::error;
};
struct numeric_error : error {
  using error::error;
};
struct verification_error : error {
  using error::error;
};

namespace detail {
inline void require(bool cond, const char* what) {
  if (!cond) throw invalid_config(what);
}
}  // namespace detail

// softplus(z) = log(1 + e^z), linear asymptote past |z| = 30. The asymptotic
// branches keep the absolute error below 1e-26 while avoiding overflow, which
// matters because the interpolation regime drives logits to +-inf.
inline double softplus(double z) {
  if (z > 30.0) return z + std::exp(-z);
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// Inverse of softplus: z with log(1 + e^z) = eta, eta > 0.
inline double softplus_inv(double eta) {
  if (!(eta > 0.0)) throw numeric_error("softplus_inv: eta must be positive");
  if (eta > 30.0) return eta + std::log1p(-std::exp(-eta));
  return std::log(std::expm1(eta));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(e^a + e^b) without overflow; tolerates -inf inputs.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> z) {
  if (z.empty()) return -std::numeric_limits<double>::infinity();
  double hi = z[0];
  for (double v : z)
    if (v > hi) hi = v;
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

inline bool nearly_equal(double a, double b, double rel = 1e-12) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= rel * scale;
}

// a <= b up to relative arithmetic slack.
inline bool leq_with_slack(double a, double b, double rel = 1e-12) {
  return a <= b + rel * std::max(1.0, std::abs(b));
}

}  // namespace survlab
