#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "survlab/losses.hpp"
#include "survlab/mlp.hpp"
#include "survlab/numeric.hpp"

namespace survlab {

// Bound arithmetic in this header is kept deliberately separate from the loss
// implementations (plain log1p/exp compositions), so the verifier and the
// verified share no code paths.

inline constexpr double default_t_grid[] = {0.0, 1.0, 2.0, 5.0, 10.0, 20.0};
inline constexpr double default_eps_grid[] = {1e-1, 1e-2, 1e-3, 1e-6};

struct MarginReport {
  std::string kind;
  double gamma = 0.0;
  int subject = -1;
  int competitor = -1;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double required = std::numeric_limits<double>::quiet_NaN();
};

struct BoundCheck {
  double lhs = 0.0;   // measured operator norm
  double rhs = 0.0;   // lower bound from the margin
  double slack = 0.0; // lhs - rhs
  bool pass = false;  // slack >= -1e-9
};

struct PathPoint {
  double t = 0.0;
  double loss = 0.0;
  double bound = 0.0;
};

// Loss along the ray t * z for a separable score vector: each event term is
// log(1 + sum of at most k_i rival exponentials), every rival at least gamma
// below, so loss(t) <= sum_i log(1 + k_i exp(-t gamma)) and decays to zero.
inline std::vector<PathPoint> deepsurv_scaling_path(const Eigen::VectorXd& z,
                                                    const RiskSetIndex& idx,
                                                    std::span<const double> t_grid) {
  detail::require(!t_grid.empty(), "deepsurv_scaling_path: empty t grid");
  const MarginLocation ml = deepsurv_margin(z, idx);
  if (ml.found && ml.gamma <= 0.0)
    throw verification_error(
        "deepsurv_scaling_path: scores not risk-set separable; event subject " +
        std::to_string(ml.subject) + " does not dominate rival " +
        std::to_string(ml.competitor));
  const double gamma = ml.gamma;  // +inf when no event has a rival

  std::vector<PathPoint> path;
  for (double t : t_grid) {
    PathPoint pt;
    pt.t = t;
    pt.loss = deepsurv_loss(t * z, idx).total;
    pt.bound = 0.0;
    for (int i : idx.events) {
      const double k = static_cast<double>(idx.prefix_len[i] - 1);
      pt.bound += k > 0.0 ? std::log1p(k * std::exp(-t * gamma)) : 0.0;
    }
    if (!leq_with_slack(pt.loss, pt.bound))
      throw verification_error("deepsurv_scaling_path: loss exceeds its dominance bound at t=" +
                               std::to_string(t));
    path.push_back(pt);
  }
  if (ml.found) {
    for (std::size_t k = 1; k < path.size(); ++k) {
      if (path[k].t > path[k - 1].t && !(path[k].loss < path[k - 1].loss))
        throw verification_error("deepsurv_scaling_path: loss failed to decrease strictly");
    }
  }
  return path;
}

// A summed loss below log 2 pins every event term below log 2, and inverting
// the two-point term log(1 + exp(-margin)) forces margin >= log(1/eps) - log 2.
inline MarginReport epsilon_margin_deepsurv(const Eigen::VectorXd& z, const RiskSetIndex& idx,
                                            double epsilon) {
  if (!(epsilon > 0.0) || epsilon > std::log(2.0))
    throw verification_error("epsilon_margin_deepsurv: excess must lie in (0, log 2]");
  const double total = deepsurv_loss(z, idx).total;
  if (!leq_with_slack(total, epsilon))
    throw verification_error("epsilon_margin_deepsurv: loss excess exceeds the stated epsilon");
  const MarginLocation ml = deepsurv_margin(z, idx);
  MarginReport rep;
  rep.kind = "deepsurv";
  rep.epsilon = epsilon;
  rep.required = std::log(1.0 / epsilon) - std::log(2.0);
  rep.gamma = ml.found ? ml.gamma : std::numeric_limits<double>::infinity();
  rep.subject = ml.subject;
  rep.competitor = ml.competitor;
  if (!leq_with_slack(rep.required, rep.gamma))
    throw verification_error("epsilon_margin_deepsurv: margin " + std::to_string(rep.gamma) +
                             " fell below the excess-implied floor " +
                             std::to_string(rep.required));
  return rep;
}

// Minimal margin with its attaining pair. DeepSurv margins separate a subject
// from rivals in its risk set; interval margins separate the terminal cell
// from other cells of the same subject; the cumulative-logit model measures
// on cumulative scores.
inline MarginReport measure_margin(const Eigen::MatrixXd& logits, const LossTarget& target) {
  MarginLocation ml;
  if (target.kind == LossKind::deepsurv) {
    if (target.risk.events.empty())
      throw verification_error("measure_margin: no events, margin undefined");
    ml = deepsurv_margin(logits.col(0), target.risk);
  } else {
    bool any_event = false;
    for (int i = 0; i < target.disc.n(); ++i) any_event |= target.disc.event[i] == 1;
    if (!any_event) throw verification_error("measure_margin: no events, margin undefined");
    ml = target.kind == LossKind::nmtlr ? nmtlr_margin(logits, target.disc)
                                        : interval_margin(logits, target.disc);
  }
  MarginReport rep;
  rep.kind = target.kind == LossKind::nmtlr ? "nmtlr-cumulative" : loss_kind_name(target.kind);
  rep.gamma = ml.found ? ml.gamma : std::numeric_limits<double>::infinity();
  rep.subject = ml.subject;
  rep.competitor = ml.competitor;
  return rep;
}

// Operator-norm floor implied by a positive margin.
//   scalar model:  gamma <= W (f_i - f_j)            over risk-set pairs,
//                  so |W|_2 >= gamma / max pair distance;
//   interval:      gamma <= (row_a - row_b) [W b] on the augmented embedding
//                  (f, 1), row differences cost at most sqrt(2) |[W b]|_2,
//                  so |[W b]|_2 >= gamma / (sqrt(2) max |(f,1)|).
// Interval kinds measure the margin on the readout output z = W f + b itself.
inline BoundCheck margin_budget_check(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                                      const Eigen::MatrixXd& embeddings,
                                      const LossTarget& target) {
  detail::require(embeddings.rows() == target.n(), "margin_budget_check: embedding rows");
  detail::require(w.cols() == embeddings.cols(), "margin_budget_check: W/embedding dims");
  const Eigen::MatrixXd logits = (embeddings * w.transpose()).rowwise() + b.transpose();

  MarginLocation ml;
  if (target.kind == LossKind::deepsurv)
    ml = deepsurv_margin(logits.col(0), target.risk);
  else
    ml = interval_margin(logits, target.disc);
  if (!ml.found || ml.gamma <= 0.0)
    throw verification_error("margin_budget_check: no positive margin to budget against");

  BoundCheck chk;
  if (target.kind == LossKind::deepsurv) {
    double max_dist = 0.0;
    for (int i : target.risk.events) {
      const int c = target.risk.prefix_len[i];
      for (int r = 0; r < c; ++r) {
        const int j = target.risk.order[r];
        if (j == i) continue;
        max_dist = std::max(max_dist, (embeddings.row(i) - embeddings.row(j)).norm());
      }
    }
    if (max_dist == 0.0)
      throw verification_error("margin_budget_check: comparable embeddings coincide");
    chk.lhs = spectral_norm(w);
    chk.rhs = ml.gamma / max_dist;
  } else {
    double max_aug = 0.0;
    for (int i = 0; i < embeddings.rows(); ++i)
      max_aug = std::max(max_aug, std::sqrt(embeddings.row(i).squaredNorm() + 1.0));
    Eigen::MatrixXd aug(w.rows(), w.cols() + 1);
    aug << w, b;
    chk.lhs = spectral_norm(aug);
    chk.rhs = ml.gamma / (std::sqrt(2.0) * max_aug);
  }
  chk.slack = chk.lhs - chk.rhs;
  chk.pass = chk.slack >= -1e-9;
  return chk;
}

struct ConstructReport {
  Eigen::MatrixXd logits;
  double loss = 0.0;
  double bound = 0.0;   // proof-stated upper bound on loss (or on excess)
  double excess = 0.0;  // loss - infimum where an infimum applies
};

// Near-minimizer of the piecewise-constant hazard loss: hazard eps_prime on
// every at-risk non-event cell, exactly 1/rho at event cells. Excess over the
// infimum is at most (#at-risk cells) * eps_prime * (1 + max rho).
inline ConstructReport pchazard_construct(const DiscretizedDataset& disc, double eps_prime) {
  detail::require(eps_prime > 0.0, "pchazard_construct: eps_prime must be positive");
  const int n = disc.n();
  const int m = disc.m();
  const double z_small = softplus_inv(eps_prime);
  ConstructReport rep;
  rep.logits = Eigen::MatrixXd::Constant(n, m, z_small);
  long cells = 0;
  double max_rho = 0.0;
  for (int i = 0; i < n; ++i) {
    cells += disc.bin[i] + 1;
    max_rho = std::max(max_rho, disc.rho[i]);
    if (disc.event[i] == 1) rep.logits(i, disc.bin[i]) = softplus_inv(1.0 / disc.rho[i]);
  }
  rep.loss = pchazard_loss(rep.logits, disc).total;
  rep.excess = rep.loss - pchazard_infimum(disc);
  rep.bound = static_cast<double>(cells) * eps_prime * (1.0 + max_rho);
  if (!leq_with_slack(rep.excess, rep.bound))
    throw verification_error("pchazard_construct: excess exceeds its stated bound");
  return rep;
}

// Saturating logits +-t on the at-risk cells; each cell term log(1+e^{-t})
// is below e^{-t}, so the total sits below (#cells) e^{-t}.
inline ConstructReport nnet_construct(const DiscretizedDataset& disc, double t) {
  detail::require(t > 0.0, "nnet_construct: t must be positive");
  const int n = disc.n();
  const int m = disc.m();
  ConstructReport rep;
  rep.logits = Eigen::MatrixXd::Constant(n, m, -t);
  long cells = 0;
  for (int i = 0; i < n; ++i) {
    cells += disc.bin[i] + 1;
    if (disc.event[i] == 1) rep.logits(i, disc.bin[i]) = t;
  }
  rep.loss = nnet_loss(rep.logits, disc).total;
  rep.bound = static_cast<double>(cells) * std::exp(-t);
  rep.excess = rep.loss;
  if (!leq_with_slack(rep.loss, rep.bound))
    throw verification_error("nnet_construct: loss exceeds (#cells) e^{-t}");
  return rep;
}

struct NmtlrConstructReport {
  Eigen::MatrixXd logits;      // base logits realizing the targets
  Eigen::MatrixXd cumulative;  // the +-t target pattern
  double loss = 0.0;
  double bound = 0.0;  // sum of per-subject bounds
};

// Cumulative targets: an event subject puts +t on its terminal cell and -t
// elsewhere; a censored subject puts -t through its censoring cell and +t on
// the tail. Base logits realize the targets exactly through the suffix
// difference z_m = C_m, z_k = C_k - C_{k+1} (all values are small integer
// multiples of t, so the reconstruction is exact in floating point).
// t = 0 is allowed: targets collapse to zero logits and both tail bounds hold
// with equality (log m for events).
inline NmtlrConstructReport nmtlr_construct(const DiscretizedDataset& disc, double t) {
  detail::require(t >= 0.0, "nmtlr_construct: t must be nonnegative");
  const int n = disc.n();
  const int m = disc.m();
  NmtlrConstructReport rep;
  rep.cumulative.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const int j = disc.bin[i];
    if (disc.event[i] == 1) {
      for (int k = 0; k < m; ++k) rep.cumulative(i, k) = k == j ? t : -t;
    } else {
      if (j >= m - 1)
        throw data_error("nmtlr_construct: censored subject in the final interval");
      for (int k = 0; k < m; ++k) rep.cumulative(i, k) = k <= j ? -t : t;
    }
  }
  rep.logits.resize(n, m);
  rep.logits.col(m - 1) = rep.cumulative.col(m - 1);
  for (int k = m - 2; k >= 0; --k)
    rep.logits.col(k) = rep.cumulative.col(k) - rep.cumulative.col(k + 1);

  const LossReport lr = nmtlr_loss(rep.logits, disc);
  rep.loss = lr.total;
  for (int i = 0; i < n; ++i) {
    double b;
    if (disc.event[i] == 1) {
      b = std::log1p(static_cast<double>(m - 1) * std::exp(-2.0 * t));
    } else {
      const double head = static_cast<double>(disc.bin[i] + 1);  // cells through the censoring interval
      const double tail = static_cast<double>(m - disc.bin[i] - 1);
      b = std::log1p(head / tail * std::exp(-2.0 * t));
    }
    if (!leq_with_slack(lr.per_sample[i], b))
      throw verification_error("nmtlr_construct: subject term exceeds its softmax tail bound");
    rep.bound += b;
  }
  return rep;
}

// Adam with a cosine-decayed step over a free logit matrix; independent
// attainability probe for the infimum formulas (no network in the way).
// The decay matters: logits that should run to -inf feed Adam geometrically
// shrinking gradients, whose stale square average stalls a constant-step run,
// while a large constant step never lets the finite optima settle. A high
// peak followed by decay to zero covers both regimes.
inline std::pair<Eigen::MatrixXd, double> optimize_free_logits(const LossTarget& target,
                                                               Eigen::MatrixXd z, double lr,
                                                               int steps) {
  detail::require(steps >= 1, "optimize_free_logits: steps must be >= 1");
  Eigen::MatrixXd mom = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  Eigen::MatrixXd vel = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double loss = eval_loss(target, z).total;
  for (int s = 1; s <= steps; ++s) {
    const LossReport rep = eval_loss(target, z);
    loss = rep.total;
    mom = b1 * mom + (1.0 - b1) * rep.grad;
    vel = b2 * vel + (1.0 - b2) * rep.grad.cwiseProduct(rep.grad);
    const double c1 = 1.0 - std::pow(b1, s);
    const double c2 = 1.0 - std::pow(b2, s);
    const double step = lr * 0.5 * (1.0 + std::cos(std::numbers::pi * (s - 1) / steps));
    z -= step * (mom / c1).cwiseQuotient(((vel / c2).cwiseSqrt().array() + eps).matrix());
  }
  return {std::move(z), std::min(loss, eval_loss(target, z).total)};
}

}  // namespace survlab
