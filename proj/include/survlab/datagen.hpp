#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "survlab/numeric.hpp"
#include "survlab/rng.hpp"

namespace survlab {

// Synthetic-data configuration: Weibull baseline with shape gamma, AR(1)
// covariates, sparse sign-indicator log-hazard, uniform censoring on
// (0, cens_hi) plus an administrative cutoff at tau.
struct GenConfig {
  int n = 3500;
  int p = 200;
  int s = 50;
  double rho = 0.6;
  double beta_range = 0.5;
  double scale = 0.31;
  double gamma = 0.7;
  double cens_hi = 0.8;
  double tau = 0.6;
  std::uint64_t seed = 1;

  void validate() const {
    detail::require(n >= 1, "GenConfig: n must be >= 1");
    detail::require(p >= 1, "GenConfig: p must be >= 1");
    detail::require(s >= 0 && s <= p, "GenConfig: need 0 <= s <= p");
    detail::require(rho >= 0.0 && rho < 1.0, "GenConfig: rho must lie in [0, 1)");
    detail::require(gamma > 0.0, "GenConfig: gamma must be positive");
    detail::require(tau > 0.0, "GenConfig: tau must be positive");
    detail::require(cens_hi > 0.0, "GenConfig: cens_hi must be positive");
    detail::require(beta_range >= 0.0, "GenConfig: beta_range must be >= 0");
  }
};

struct SurvivalRecord {
  Eigen::VectorXd x;
  double time = 0.0;
  int event = 0;
};

// Struct-of-arrays dataset; row i of x pairs with time[i], event[i].
struct Dataset {
  Eigen::MatrixXd x;       // n x p
  Eigen::VectorXd time;    // observed Y
  Eigen::VectorXi event;   // delta in {0,1}

  int n() const { return static_cast<int>(time.size()); }
  int p() const { return static_cast<int>(x.cols()); }

  SurvivalRecord record(int i) const {
    return SurvivalRecord{x.row(i).transpose(), time[i], event[i]};
  }

  Dataset subset(const std::vector<int>& idx) const {
    Dataset out;
    out.x.resize(static_cast<int>(idx.size()), x.cols());
    out.time.resize(static_cast<int>(idx.size()));
    out.event.resize(static_cast<int>(idx.size()));
    for (int r = 0; r < static_cast<int>(idx.size()); ++r) {
      out.x.row(r) = x.row(idx[r]);
      out.time[r] = time[idx[r]];
      out.event[r] = event[idx[r]];
    }
    return out;
  }
};

struct GroundTruth {
  Eigen::VectorXd beta;       // length p, zero off support
  std::vector<int> support;   // sorted indices of the s relevant covariates
  Eigen::VectorXd eta;        // per-subject true log-hazard
  double eta_rms = 0.0;       // sqrt(mean eta_i^2)
  double eta_l2 = 0.0;        // raw Euclidean norm (= eta_rms * sqrt(n))
};

struct GenStats {
  double censoring_fraction = 0.0;  // share with delta = 0
  double eta_rms = 0.0;
  double eta_l2 = 0.0;
};

// Rows i.i.d. N(0, Sigma) with Sigma_kl = rho^|k-l|, realized through the
// AR(1) recursion x_k = rho x_{k-1} + sqrt(1-rho^2) eps_k (exact for this
// covariance).
inline Eigen::MatrixXd sample_covariates(int n, int p, double rho, Rng& rng) {
  detail::require(rho >= 0.0 && rho < 1.0, "sample_covariates: rho must lie in [0, 1)");
  detail::require(n >= 1 && p >= 1, "sample_covariates: n, p must be >= 1");
  Eigen::MatrixXd x(n, p);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    double prev = rng.normal();
    x(i, 0) = prev;
    for (int k = 1; k < p; ++k) {
      prev = rho * prev + innov * rng.normal();
      x(i, k) = prev;
    }
  }
  return x;
}

// Support drawn as the first s entries of a uniform permutation, coefficients
// Unif(-half_width, half_width) on the support and zero elsewhere.
inline void make_coefficients(int p, int s, double half_width, Rng& rng,
                              Eigen::VectorXd& beta, std::vector<int>& support) {
  detail::require(s <= p, "make_coefficients: s must not exceed p");
  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  for (int k = p - 1; k > 0; --k) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(k) + 1));
    std::swap(perm[k], perm[j]);
  }
  support.assign(perm.begin(), perm.begin() + s);
  std::sort(support.begin(), support.end());
  beta = Eigen::VectorXd::Zero(p);
  for (int k : support) beta[k] = rng.uniform(-half_width, half_width);
}

// eta(x) = scale * sum_{k in support} beta_k 1(x_k > 0)
inline double true_log_hazard(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::VectorXd& beta,
                              const std::vector<int>& support, double scale) {
  double acc = 0.0;
  for (int k : support)
    if (x[k] > 0.0) acc += beta[k];
  return scale * acc;
}

// Weibull event time: T = (-log u / exp(eta))^(1/gamma), u ~ Unif(0,1).
inline double sample_event_time(double eta, double gamma, double u) {
  if (!(u > 0.0 && u < 1.0)) throw numeric_error("sample_event_time: u must lie in (0, 1)");
  detail::require(gamma > 0.0, "sample_event_time: gamma must be positive");
  return std::pow(-std::log(u) / std::exp(eta), 1.0 / gamma);
}

// Y = min(T, C, tau), delta = 1(T <= C and T <= tau).
inline std::pair<double, int> apply_censoring(double t, double c, double tau) {
  const double y = std::min(t, std::min(c, tau));
  const int ev = (t <= c && t <= tau) ? 1 : 0;
  return {y, ev};
}

struct Generated {
  Dataset data;
  GroundTruth truth;
  GenStats stats;
};

inline Generated generate_dataset(const GenConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  Rng rng_x = root.substream(1);
  Rng rng_beta = root.substream(2);
  Rng rng_event = root.substream(3);
  Rng rng_cens = root.substream(4);

  Generated out;
  out.data.x = sample_covariates(cfg.n, cfg.p, cfg.rho, rng_x);
  make_coefficients(cfg.p, cfg.s, cfg.beta_range, rng_beta, out.truth.beta,
                    out.truth.support);

  out.truth.eta.resize(cfg.n);
  out.data.time.resize(cfg.n);
  out.data.event.resize(cfg.n);
  int censored = 0;
  for (int i = 0; i < cfg.n; ++i) {
    const double eta =
        true_log_hazard(out.data.x.row(i).transpose(), out.truth.beta, out.truth.support, cfg.scale);
    out.truth.eta[i] = eta;
    const double t = sample_event_time(eta, cfg.gamma, rng_event.uniform_open());
    const double c = rng_cens.uniform(0.0, cfg.cens_hi);
    const auto [y, ev] = apply_censoring(t, c, cfg.tau);
    out.data.time[i] = y;
    out.data.event[i] = ev;
    censored += 1 - ev;
  }
  out.truth.eta_l2 = out.truth.eta.norm();
  out.truth.eta_rms = out.truth.eta_l2 / std::sqrt(static_cast<double>(cfg.n));
  out.stats = GenStats{static_cast<double>(censored) / cfg.n, out.truth.eta_rms,
                       out.truth.eta_l2};
  return out;
}

// Deterministic 70/30-style split: a seeded shuffle, first ceil(frac*n) rows
// train, rest test.
inline std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double train_frac,
                                                                   std::uint64_t seed) {
  detail::require(train_frac > 0.0 && train_frac < 1.0, "split_indices: frac in (0,1)");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int k = n - 1; k > 0; --k) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(k) + 1));
    std::swap(idx[k], idx[j]);
  }
  const int n_train = static_cast<int>(std::ceil(train_frac * n));
  std::vector<int> train(idx.begin(), idx.begin() + n_train);
  std::vector<int> test(idx.begin() + n_train, idx.end());
  return {train, test};
}

}  // namespace survlab
