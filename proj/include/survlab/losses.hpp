#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "survlab/discretize.hpp"
#include "survlab/numeric.hpp"
#include "survlab/risk.hpp"

namespace survlab {

enum class LossKind { deepsurv, pchazard, nnet, nmtlr };

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::deepsurv: return "deepsurv";
    case LossKind::pchazard: return "pchazard";
    case LossKind::nnet: return "nnet";
    case LossKind::nmtlr: return "nmtlr";
  }
  throw invalid_config("loss_kind_name: unknown kind");
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "deepsurv") return LossKind::deepsurv;
  if (s == "pchazard") return LossKind::pchazard;
  if (s == "nnet") return LossKind::nnet;
  if (s == "nmtlr") return LossKind::nmtlr;
  throw invalid_config("unknown loss kind '" + s + "' (expect deepsurv|pchazard|nnet|nmtlr)");
}

// total is the raw sum of per_sample; callers normalize as they see fit.
// margin is the model-specific minimal logit margin, +inf when no event has a
// competitor to separate from.
struct LossReport {
  double total = 0.0;
  Eigen::VectorXd per_sample;  // length n, zero for subjects outside the event sum (DeepSurv censored)
  Eigen::MatrixXd grad;        // n x q, d total / d logits
  double margin = std::numeric_limits<double>::infinity();
  int n_events = 0;

  double per_event() const { return n_events > 0 ? total / n_events : 0.0; }
  double per_sample_mean() const {
    return per_sample.size() > 0 ? total / static_cast<double>(per_sample.size()) : 0.0;
  }
};

// Location of the minimal margin. For DeepSurv `competitor` is the rival
// subject; for interval models it is the rival cell index.
struct MarginLocation {
  double gamma = std::numeric_limits<double>::infinity();
  int subject = -1;
  int competitor = -1;
  bool found = false;
};

namespace detail {
inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& z, const char* who) {
  if (!z.allFinite()) throw numeric_error(std::string(who) + ": non-finite logits");
}
}  // namespace detail

// min over events i and rivals j in R_i \ {i} of z_i - z_j, via running
// prefix max over the descending-time order.
inline MarginLocation deepsurv_margin(const Eigen::VectorXd& z, const RiskSetIndex& idx) {
  const int n = idx.n();
  MarginLocation loc;
  if (n == 0) return loc;
  std::vector<double> max1(n), max2(n);
  std::vector<int> arg1(n), arg2(n);
  double m1 = -std::numeric_limits<double>::infinity(), m2 = m1;
  int a1 = -1, a2 = -1;
  for (int r = 0; r < n; ++r) {
    const int j = idx.order[r];
    if (z[j] > m1) { m2 = m1; a2 = a1; m1 = z[j]; a1 = j; }
    else if (z[j] > m2) { m2 = z[j]; a2 = j; }
    max1[r] = m1; arg1[r] = a1; max2[r] = m2; arg2[r] = a2;
  }
  for (int i : idx.events) {
    const int c = idx.prefix_len[i];
    if (c < 2) continue;  // singleton risk set, nothing to separate from
    const int r = c - 1;
    const double rival = arg1[r] == i ? max2[r] : max1[r];
    const int rival_arg = arg1[r] == i ? arg2[r] : arg1[r];
    const double g = z[i] - rival;
    if (!loc.found || g < loc.gamma) {
      loc.gamma = g; loc.subject = i; loc.competitor = rival_arg; loc.found = true;
    }
  }
  return loc;
}

// min over events of z_{i,bin(i)} - max over other cells of the same row.
inline MarginLocation interval_margin(const Eigen::MatrixXd& z, const DiscretizedDataset& disc) {
  MarginLocation loc;
  const int m = disc.m();
  if (m < 2) return loc;
  for (int i = 0; i < disc.n(); ++i) {
    if (disc.event[i] != 1) continue;
    const int j = disc.bin[i];
    double rival = -std::numeric_limits<double>::infinity();
    int rival_k = -1;
    for (int k = 0; k < m; ++k) {
      if (k == j) continue;
      if (z(i, k) > rival) { rival = z(i, k); rival_k = k; }
    }
    const double g = z(i, j) - rival;
    if (!loc.found || g < loc.gamma) {
      loc.gamma = g; loc.subject = i; loc.competitor = rival_k; loc.found = true;
    }
  }
  return loc;
}

// N-MTLR margin lives on the cumulative scores C_j = sum_{k>=j} z_k.
inline Eigen::MatrixXd nmtlr_cumulative(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd c = z;
  for (int k = static_cast<int>(z.cols()) - 2; k >= 0; --k) c.col(k) += c.col(k + 1);
  return c;
}

inline MarginLocation nmtlr_margin(const Eigen::MatrixXd& z, const DiscretizedDataset& disc) {
  return interval_margin(nmtlr_cumulative(z), disc);
}

// Negative log partial likelihood, Breslow ties. Risk sets are prefixes of
// the descending-time order, so one prefix log-sum-exp pass gives every event
// term and a suffix pass gives the gradient, all O(n log n).
//
// With the max-shifted z' and prefix P_r = logsumexp(z'[order[0..r]]),
//   total   = sum over events i of P_{c_i - 1} - z'_i          (c_i = |R_i|)
//   grad_k  = -delta_k + exp(z'_k + logS_{pos_k})
// where logS_r = logsumexp over event prefix ends r' >= r of -P_{r'}. Every
// exponent obeys z'_k - P_{r'} <= 0 when k sits inside prefix r', so the
// exp stays bounded by the event count.
inline LossReport deepsurv_loss(const Eigen::VectorXd& logits, const RiskSetIndex& idx) {
  detail::require_finite(logits, "deepsurv_loss");
  const int n = idx.n();
  detail::require(static_cast<int>(logits.size()) == n, "deepsurv_loss: logit/index size mismatch");
  LossReport rep;
  rep.per_sample = Eigen::VectorXd::Zero(n);
  rep.grad = Eigen::MatrixXd::Zero(n, 1);
  rep.n_events = static_cast<int>(idx.events.size());
  if (n == 0) return rep;

  const double shift = logits.maxCoeff();
  Eigen::VectorXd zs = logits.array() - shift;

  std::vector<double> prefix(n);
  double run = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < n; ++r) {
    run = log_add_exp(run, zs[idx.order[r]]);
    prefix[r] = run;
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_b(n, neg_inf);  // per prefix end: log of summed exp(-P) over events there
  for (int i : idx.events) {
    const int r = idx.prefix_len[i] - 1;
    const double term = prefix[r] - zs[i];
    rep.per_sample[i] = term;
    rep.total += term;
    log_b[r] = log_add_exp(log_b[r], -prefix[r]);
  }
  std::vector<double> log_s(n + 1);
  log_s[n] = neg_inf;
  for (int r = n - 1; r >= 0; --r) log_s[r] = log_add_exp(log_s[r + 1], log_b[r]);

  for (int k = 0; k < n; ++k) {
    const double ls = log_s[idx.pos[k]];
    const double soft = ls == neg_inf ? 0.0 : std::exp(zs[k] + ls);
    rep.grad(k, 0) = soft;
  }
  for (int i : idx.events) rep.grad(i, 0) -= 1.0;

  const MarginLocation ml = deepsurv_margin(logits, idx);
  rep.margin = ml.found ? ml.gamma : std::numeric_limits<double>::infinity();
  return rep;
}

// Direct O(n^2) evaluation with explicit membership tests; test oracle for
// the prefix implementation above.
inline LossReport deepsurv_loss_naive(const Eigen::VectorXd& logits, const Eigen::VectorXd& time,
                                      const Eigen::VectorXi& event) {
  detail::require_finite(logits, "deepsurv_loss_naive");
  const int n = static_cast<int>(logits.size());
  LossReport rep;
  rep.per_sample = Eigen::VectorXd::Zero(n);
  rep.grad = Eigen::MatrixXd::Zero(n, 1);
  for (int i = 0; i < n; ++i) {
    if (event[i] != 1) continue;
    rep.n_events++;
    std::vector<double> members;
    std::vector<int> ids;
    for (int j = 0; j < n; ++j)
      if (time[j] >= time[i]) { members.push_back(logits[j]); ids.push_back(j); }
    const double lse = log_sum_exp(members);
    rep.per_sample[i] = lse - logits[i];
    rep.total += rep.per_sample[i];
    for (std::size_t q = 0; q < ids.size(); ++q)
      rep.grad(ids[q], 0) += std::exp(members[q] - lse);
    rep.grad(i, 0) -= 1.0;
  }
  return rep;
}

// Piecewise-constant hazard likelihood with eta = softplus(z):
//   sum_i [ -delta_i log eta_{bin} + rho_i eta_{bin} + sum_{k<bin} eta_k ]
// Unlike the other three this is a continuous-time likelihood; its infimum
// sum_{events}(1 + log rho_i) can be negative.
inline LossReport pchazard_loss(const Eigen::MatrixXd& logits, const DiscretizedDataset& disc) {
  detail::require_finite(logits, "pchazard_loss");
  const int n = disc.n();
  const int m = disc.m();
  detail::require(logits.rows() == n && logits.cols() == m,
                  "pchazard_loss: logits must be n x m");
  LossReport rep;
  rep.per_sample = Eigen::VectorXd::Zero(n);
  rep.grad = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    if (disc.rho[i] <= 0.0)
      throw data_error("pchazard_loss: subject with nonpositive exposure fraction");
    const int j = disc.bin[i];
    const double rho = disc.rho[i];
    double term = 0.0;
    for (int k = 0; k < j; ++k) {
      term += softplus(logits(i, k));
      rep.grad(i, k) = sigmoid(logits(i, k));
    }
    const double eta = softplus(logits(i, j));
    const double sig = sigmoid(logits(i, j));
    if (disc.event[i] == 1) {
      rep.n_events++;
      if (eta <= 0.0) throw numeric_error("pchazard_loss: event hazard underflowed to zero");
      term += -std::log(eta) + rho * eta;
      rep.grad(i, j) = (-1.0 / eta + rho) * sig;
    } else {
      term += rho * eta;
      rep.grad(i, j) = rho * sig;
    }
    rep.per_sample[i] = term;
    rep.total += term;
  }
  const MarginLocation ml = interval_margin(logits, disc);
  rep.margin = ml.found ? ml.gamma : std::numeric_limits<double>::infinity();
  return rep;
}

// Infimum of the piecewise-constant hazard loss over free hazards:
// each event cell at eta = 1/rho, everything else at 0.
inline double pchazard_infimum(const DiscretizedDataset& disc) {
  double total = 0.0;
  for (int i = 0; i < disc.n(); ++i) {
    if (disc.event[i] != 1) continue;
    if (disc.rho[i] <= 0.0)
      throw data_error("pchazard_infimum: event subject with zero exposure");
    total += 1.0 + std::log(disc.rho[i]);
  }
  return total;
}

// Discrete-time Bernoulli likelihood over at-risk cells: cell (i,j) with
// j <= bin(i) carries label y = delta_i at the terminal cell, 0 before.
// Evaluated as softplus(-s z), s = +-1, gradient sigmoid(z) - y.
inline LossReport nnet_loss(const Eigen::MatrixXd& logits, const DiscretizedDataset& disc) {
  detail::require_finite(logits, "nnet_loss");
  const int n = disc.n();
  const int m = disc.m();
  detail::require(logits.rows() == n && logits.cols() == m, "nnet_loss: logits must be n x m");
  LossReport rep;
  rep.per_sample = Eigen::VectorXd::Zero(n);
  rep.grad = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    double term = 0.0;
    for (int j = 0; j <= disc.bin[i]; ++j) {
      const double y = disc.target(i, j);
      const double s = y == 1.0 ? 1.0 : -1.0;
      term += softplus(-s * logits(i, j));
      rep.grad(i, j) = sigmoid(logits(i, j)) - y;
    }
    rep.per_sample[i] = term;
    rep.total += term;
  }
  rep.n_events = static_cast<int>(std::count(disc.event.data(), disc.event.data() + n, 1));
  const MarginLocation ml = interval_margin(logits, disc);
  rep.margin = ml.found ? ml.gamma : std::numeric_limits<double>::infinity();
  return rep;
}

// Multi-task logistic likelihood on cumulative scores C_j = sum_{k>=j} z_k,
// p = softmax(C): events pay -log p_{bin}, censored pay -log sum_{l>bin} p_l.
// Gradients flow through the suffix-sum map as prefix sums over dL/dC.
inline LossReport nmtlr_loss(const Eigen::MatrixXd& logits, const DiscretizedDataset& disc) {
  detail::require_finite(logits, "nmtlr_loss");
  const int n = disc.n();
  const int m = disc.m();
  detail::require(logits.rows() == n && logits.cols() == m, "nmtlr_loss: logits must be n x m");
  LossReport rep;
  rep.per_sample = Eigen::VectorXd::Zero(n);
  rep.grad = Eigen::MatrixXd::Zero(n, m);
  const Eigen::MatrixXd c = nmtlr_cumulative(logits);
  Eigen::VectorXd dc(m);
  for (int i = 0; i < n; ++i) {
    const int j = disc.bin[i];
    const double shift = c.row(i).maxCoeff();
    double z_all = 0.0;
    for (int k = 0; k < m; ++k) z_all += std::exp(c(i, k) - shift);
    const double log_z = shift + std::log(z_all);
    if (disc.event[i] == 1) {
      rep.n_events++;
      rep.per_sample[i] = log_z - c(i, j);
      for (int k = 0; k < m; ++k) dc[k] = std::exp(c(i, k) - log_z);
      dc[j] -= 1.0;
    } else {
      if (j >= m - 1)
        throw data_error(
            "nmtlr_loss: censored subject in the final interval has an empty tail; "
            "build the grid with its top above the censoring cutoff");
      double tail = 0.0;
      for (int k = j + 1; k < m; ++k) tail += std::exp(c(i, k) - shift);
      const double log_tail = shift + std::log(tail);
      rep.per_sample[i] = log_z - log_tail;
      for (int k = 0; k < m; ++k) {
        dc[k] = std::exp(c(i, k) - log_z);
        if (k > j) dc[k] -= std::exp(c(i, k) - log_tail);
      }
    }
    rep.total += rep.per_sample[i];
    double acc = 0.0;  // dL/dz_k = sum_{j<=k} dL/dC_j
    for (int k = 0; k < m; ++k) {
      acc += dc[k];
      rep.grad(i, k) = acc;
    }
  }
  const MarginLocation ml = interval_margin(c, disc);
  rep.margin = ml.found ? ml.gamma : std::numeric_limits<double>::infinity();
  return rep;
}

// ---------------------------------------------------------------------------
// Unified dispatch: one bundle a trainer can evaluate any loss against.

struct LossTarget {
  LossKind kind = LossKind::deepsurv;
  Eigen::VectorXd time;
  Eigen::VectorXi event;
  RiskSetIndex risk;        // deepsurv only
  DiscretizedDataset disc;  // interval models only

  int n() const { return static_cast<int>(time.size()); }
  int q() const { return kind == LossKind::deepsurv ? 1 : disc.m(); }

  static LossTarget make(LossKind kind, const Eigen::VectorXd& time, const Eigen::VectorXi& event,
                         const DiscretizeOptions& opt = {}) {
    LossTarget t;
    t.kind = kind;
    t.time = time;
    t.event = event;
    if (kind == LossKind::deepsurv) {
      t.risk = risk_sets(time, event);
    } else {
      t.disc = discretize(time, event, opt);
    }
    return t;
  }

  // Batch view: keep the grid, rebuild per-subject assignments. DeepSurv risk
  // sets become batch-local.
  LossTarget subset(const std::vector<int>& rows) const {
    LossTarget t;
    t.kind = kind;
    t.time.resize(static_cast<int>(rows.size()));
    t.event.resize(static_cast<int>(rows.size()));
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
      t.time[r] = time[rows[r]];
      t.event[r] = event[rows[r]];
    }
    if (kind == LossKind::deepsurv) {
      t.risk = risk_sets(t.time, t.event);
    } else {
      t.disc = assign_bins(t.time, t.event, disc.edges);
    }
    return t;
  }
};

inline LossReport eval_loss(const LossTarget& target, const Eigen::MatrixXd& logits) {
  switch (target.kind) {
    case LossKind::deepsurv: {
      detail::require(logits.cols() == 1, "eval_loss: deepsurv expects n x 1 logits");
      return deepsurv_loss(logits.col(0), target.risk);
    }
    case LossKind::pchazard: return pchazard_loss(logits, target.disc);
    case LossKind::nnet: return nnet_loss(logits, target.disc);
    case LossKind::nmtlr: return nmtlr_loss(logits, target.disc);
  }
  throw invalid_config("eval_loss: unknown kind");
}

// Partial likelihood of the data-generating log-hazard itself.
inline LossReport deepsurv_true_npll(const Eigen::VectorXd& eta, const Eigen::VectorXd& time,
                                     const Eigen::VectorXi& event) {
  return deepsurv_loss(eta, risk_sets(time, event));
}

// Worst relative error between the analytic gradient and central finite
// differences, rel err = |a - fd| / max(1, |a|, |fd|).
inline double grad_check(const LossTarget& target, const Eigen::MatrixXd& logits, double h) {
  detail::require(h > 0.0, "grad_check: step must be positive");
  const LossReport base = eval_loss(target, logits);
  double worst = 0.0;
  Eigen::MatrixXd z = logits;
  for (int i = 0; i < z.rows(); ++i) {
    for (int k = 0; k < z.cols(); ++k) {
      const double keep = z(i, k);
      z(i, k) = keep + h;
      const double up = eval_loss(target, z).total;
      z(i, k) = keep - h;
      const double dn = eval_loss(target, z).total;
      z(i, k) = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double a = base.grad(i, k);
      const double err = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace survlab
