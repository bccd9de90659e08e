#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "survlab/losses.hpp"
#include "survlab/numeric.hpp"
#include "survlab/rng.hpp"

namespace survlab {

// Two hidden rectifier layers of equal width, linear readout. The penultimate
// activation is the shared embedding feeding all output logits.
struct MlpParams {
  std::vector<Eigen::MatrixXd> w;  // w[l] maps layer input to output, (out x in)
  std::vector<Eigen::VectorXd> b;
  int in_dim = 0;
  int width = 0;
  int out_dim = 0;

  long param_count() const {
    long d = 0;
    for (std::size_t l = 0; l < w.size(); ++l) d += w[l].size() + b[l].size();
    return d;
  }

  bool all_finite() const {
    for (const auto& m : w)
      if (!m.allFinite()) return false;
    for (const auto& v : b)
      if (!v.allFinite()) return false;
    return true;
  }
};

inline long mlp_param_count(int p, int width, int q) {
  return static_cast<long>(p) * width + width + static_cast<long>(width) * width + width +
         static_cast<long>(width) * q + q;
}

// Uniform fan-based init, biases zero, deterministic per seed.
inline MlpParams mlp_init(int p, int width, int q, std::uint64_t seed) {
  detail::require(p >= 1, "mlp_init: input dim must be >= 1");
  detail::require(width >= 1, "mlp_init: width must be >= 1");
  detail::require(q >= 1, "mlp_init: output dim must be >= 1");
  MlpParams params;
  params.in_dim = p;
  params.width = width;
  params.out_dim = q;
  Rng rng(seed);
  const int outs[3] = {width, width, q};
  const int ins[3] = {p, width, width};
  for (int l = 0; l < 3; ++l) {
    const double a = std::sqrt(6.0 / (ins[l] + outs[l]));
    Eigen::MatrixXd wl(outs[l], ins[l]);
    for (int r = 0; r < outs[l]; ++r)
      for (int c = 0; c < ins[l]; ++c) wl(r, c) = rng.uniform(-a, a);
    params.w.push_back(std::move(wl));
    params.b.push_back(Eigen::VectorXd::Zero(outs[l]));
  }
  return params;
}

struct ForwardPass {
  Eigen::MatrixXd h1;      // n x width, post-rectifier
  Eigen::MatrixXd h2;      // n x width, the shared embedding f(x)
  Eigen::MatrixXd logits;  // n x q
};

inline ForwardPass forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  detail::require(static_cast<int>(x.cols()) == params.in_dim, "forward: input dim mismatch");
  ForwardPass f;
  f.h1 = ((x * params.w[0].transpose()).rowwise() + params.b[0].transpose()).cwiseMax(0.0);
  f.h2 = ((f.h1 * params.w[1].transpose()).rowwise() + params.b[1].transpose()).cwiseMax(0.0);
  f.logits = (f.h2 * params.w[2].transpose()).rowwise() + params.b[2].transpose();
  return f;
}

struct MlpGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static MlpGrads zeros_like(const MlpParams& p) {
    MlpGrads g;
    for (std::size_t l = 0; l < p.w.size(); ++l) {
      g.w.push_back(Eigen::MatrixXd::Zero(p.w[l].rows(), p.w[l].cols()));
      g.b.push_back(Eigen::VectorXd::Zero(p.b[l].size()));
    }
    return g;
  }

  void scale(double s) {
    for (auto& m : w) m *= s;
    for (auto& v : b) v *= s;
  }

  bool all_finite() const {
    for (const auto& m : w)
      if (!m.allFinite()) return false;
    for (const auto& v : b)
      if (!v.allFinite()) return false;
    return true;
  }
};

// Loss and exact gradient of the raw summed loss for one batch.
inline std::pair<LossReport, MlpGrads> loss_grad(const MlpParams& params,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& x,
                                                 const LossTarget& target) {
  const ForwardPass f = forward(params, x);
  LossReport rep = eval_loss(target, f.logits);
  MlpGrads g;
  const Eigen::MatrixXd& dlogits = rep.grad;  // n x q
  g.w.resize(3);
  g.b.resize(3);
  g.w[2] = dlogits.transpose() * f.h2;
  g.b[2] = dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dh2 = dlogits * params.w[2];
  dh2.array() *= (f.h2.array() > 0.0).cast<double>();  // rectifier gate; h2>0 iff preactivation>0
  g.w[1] = dh2.transpose() * f.h1;
  g.b[1] = dh2.colwise().sum().transpose();
  Eigen::MatrixXd dh1 = dh2 * params.w[1];
  dh1.array() *= (f.h1.array() > 0.0).cast<double>();
  g.w[0] = dh1.transpose() * x;
  g.b[0] = dh1.colwise().sum().transpose();
  return {std::move(rep), std::move(g)};
}

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long t = 0;

  static AdamState init(const MlpParams& p) {
    AdamState s;
    for (std::size_t l = 0; l < p.w.size(); ++l) {
      s.mw.push_back(Eigen::MatrixXd::Zero(p.w[l].rows(), p.w[l].cols()));
      s.vw.push_back(Eigen::MatrixXd::Zero(p.w[l].rows(), p.w[l].cols()));
      s.mb.push_back(Eigen::VectorXd::Zero(p.b[l].size()));
      s.vb.push_back(Eigen::VectorXd::Zero(p.b[l].size()));
    }
    return s;
  }
};

inline void adam_step(MlpParams& params, const MlpGrads& g, AdamState& s, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  s.t += 1;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(s.t));
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    s.mw[l] = beta1 * s.mw[l] + (1.0 - beta1) * g.w[l];
    s.vw[l] = beta2 * s.vw[l] + (1.0 - beta2) * g.w[l].cwiseProduct(g.w[l]);
    params.w[l] -= lr * (s.mw[l] / c1).cwiseQuotient(((s.vw[l] / c2).cwiseSqrt().array() + eps).matrix());
    s.mb[l] = beta1 * s.mb[l] + (1.0 - beta1) * g.b[l];
    s.vb[l] = beta2 * s.vb[l] + (1.0 - beta2) * g.b[l].cwiseProduct(g.b[l]);
    params.b[l] -= lr * (s.mb[l] / c1).cwiseQuotient(((s.vb[l] / c2).cwiseSqrt().array() + eps).matrix());
  }
}

// Largest singular value by power iteration on W^T W, deterministic all-ones
// start. Zero matrix reports 0.
inline double spectral_norm(const Eigen::MatrixXd& w, double tol = 1e-9, int max_iter = 200) {
  if (w.size() == 0 || w.norm() == 0.0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(w.cols());
  v /= v.norm();
  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd u = w * v;
    const double s = u.norm();
    if (s == 0.0) return 0.0;
    v = w.transpose() * u;
    const double vn = v.norm();
    if (vn == 0.0) return s;
    v /= vn;
    if (std::abs(s - sigma) <= tol * std::max(1.0, s)) return s;
    sigma = s;
  }
  return sigma;
}

struct TrainConfig {
  double lr = 1e-3;
  int batch = 256;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 2000;
  int plateau_window = 20;
  double plateau_rel = 1e-4;
  std::uint64_t seed = 1;
  bool full_batch = false;  // override batch with the full training set

  void validate() const {
    detail::require(lr >= 0.0, "TrainConfig: lr must be >= 0");
    detail::require(batch >= 1, "TrainConfig: batch must be >= 1");
    detail::require(max_epochs >= 1, "TrainConfig: max_epochs must be >= 1");
    detail::require(plateau_window >= 1, "TrainConfig: plateau window must be >= 1");
    detail::require(plateau_rel > 0.0 && plateau_rel < 1.0,
                    "TrainConfig: plateau threshold must lie in (0,1)");
  }
};

struct TrainOutcome {
  MlpParams params;
  std::vector<double> trace;  // per-epoch mean train loss (per sample)
  int converged_epoch = 0;    // epochs actually run
  bool diverged = false;
  double train_total = std::numeric_limits<double>::quiet_NaN();
  double train_mean = std::numeric_limits<double>::quiet_NaN();
  double test_total = std::numeric_limits<double>::quiet_NaN();
  double test_mean = std::numeric_limits<double>::quiet_NaN();
  double w_spectral = std::numeric_limits<double>::quiet_NaN();  // last layer
  double max_embed_norm = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  double z_rms = std::numeric_limits<double>::quiet_NaN();  // deepsurv outputs only
  double z_l2 = std::numeric_limits<double>::quiet_NaN();
};

// Mini-batch Adam with plateau stopping: quit once the mean train loss over
// the last `plateau_window` epochs stops improving on the window before it by
// more than plateau_rel (relative). Divergence is recorded, never thrown.
// Parameters roll back to the best epoch seen if the last epoch is worse.
inline TrainOutcome train(const MlpParams& init, const Eigen::MatrixXd& x_train,
                          const LossTarget& t_train, const Eigen::MatrixXd& x_test,
                          const LossTarget& t_test, const TrainConfig& cfg) {
  cfg.validate();
  detail::require(x_train.rows() == t_train.n(), "train: x/target row mismatch");
  detail::require(x_train.rows() >= 1, "train: empty training set");
  const int n = static_cast<int>(x_train.rows());
  const int batch = cfg.full_batch ? n : std::min(cfg.batch, n);
  const bool whole_set_batch = batch >= n;

  TrainOutcome out;
  out.params = init;
  AdamState adam = AdamState::init(out.params);
  Rng rng(cfg.seed);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  MlpParams best_params = out.params;
  double best_epoch_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.max_epochs && !out.diverged; ++epoch) {
    if (!whole_set_batch) {
      Rng shuffle_rng = rng.substream(static_cast<std::uint64_t>(epoch) + 1);
      for (int k = n - 1; k > 0; --k) {
        const int j = static_cast<int>(shuffle_rng.below(static_cast<std::uint64_t>(k) + 1));
        std::swap(order[k], order[j]);
      }
    }
    double epoch_sum = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int len = std::min(batch, n - start);
      double batch_total = 0.0;
      try {
        if (whole_set_batch) {
          auto [rep, grads] = loss_grad(out.params, x_train, t_train);
          batch_total = rep.total;
          grads.scale(1.0 / len);
          adam_step(out.params, grads, adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
        } else {
          std::vector<int> rows(order.begin() + start, order.begin() + start + len);
          Eigen::MatrixXd xb(len, x_train.cols());
          for (int r = 0; r < len; ++r) xb.row(r) = x_train.row(rows[r]);
          const LossTarget tb = t_train.subset(rows);
          auto [rep, grads] = loss_grad(out.params, xb, tb);
          batch_total = rep.total;
          grads.scale(1.0 / len);
          adam_step(out.params, grads, adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
        }
      } catch (const numeric_error&) {
        out.diverged = true;
        break;
      }
      if (!std::isfinite(batch_total) || !out.params.all_finite()) {
        out.diverged = true;
        break;
      }
      epoch_sum += batch_total;
    }
    if (out.diverged) {
      out.converged_epoch = epoch + 1;
      break;
    }
    const double epoch_mean = epoch_sum / n;
    out.trace.push_back(epoch_mean);
    out.converged_epoch = epoch + 1;
    if (epoch_mean < best_epoch_loss) {
      best_epoch_loss = epoch_mean;
      best_params = out.params;
    }
    const int e = cfg.plateau_window;
    if (static_cast<int>(out.trace.size()) >= 2 * e) {
      double cur = 0.0, prev = 0.0;
      const auto& tr = out.trace;
      for (int k = 0; k < e; ++k) {
        cur += tr[tr.size() - 1 - k];
        prev += tr[tr.size() - 1 - e - k];
      }
      cur /= e;
      prev /= e;
      const double scale = std::max(std::abs(prev), 1e-8);
      if ((prev - cur) / scale < cfg.plateau_rel) break;
    }
  }

  if (out.diverged) return out;

  auto full_mean = [&](const MlpParams& p) {
    return eval_loss(t_train, forward(p, x_train).logits).per_sample_mean();
  };
  double final_mean;
  try {
    final_mean = full_mean(out.params);
  } catch (const numeric_error&) {
    out.diverged = true;
    return out;
  }
  if (best_epoch_loss < final_mean && best_epoch_loss < std::numeric_limits<double>::infinity()) {
    const double best_mean = full_mean(best_params);
    if (best_mean < final_mean) {
      out.params = best_params;
      final_mean = best_mean;
    }
  }

  const ForwardPass f = forward(out.params, x_train);
  const LossReport rep = eval_loss(t_train, f.logits);
  out.train_total = rep.total;
  out.train_mean = rep.per_sample_mean();
  out.margin = rep.margin;
  out.w_spectral = spectral_norm(out.params.w[2]);
  out.max_embed_norm = f.h2.rowwise().norm().maxCoeff();
  if (t_train.kind == LossKind::deepsurv) {
    out.z_l2 = f.logits.col(0).norm();
    out.z_rms = out.z_l2 / std::sqrt(static_cast<double>(n));
  }
  if (x_test.rows() > 0) {
    try {
      const LossReport test_rep = eval_loss(t_test, forward(out.params, x_test).logits);
      out.test_total = test_rep.total;
      out.test_mean = test_rep.per_sample_mean();
    } catch (const numeric_error&) {
      out.test_total = std::numeric_limits<double>::infinity();
      out.test_mean = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

struct ZNormReport {
  double z_rms = 0.0;
  double eta_rms = 0.0;
  double deviation = 0.0;  // z_rms - eta_rms
  double z_l2 = 0.0;
  double eta_l2 = 0.0;
};

// Output-norm diagnostic for the scalar-logit model: compares the trained
// score norm against the data-generating log-hazard norm on the same sample.
// Root-mean-square is the headline scale so values are sample-size free.
inline ZNormReport z_norm_diagnostic(const MlpParams& params,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x,
                                     const Eigen::VectorXd& eta) {
  if (params.out_dim != 1)
    throw invalid_config("z_norm_diagnostic: defined for scalar-output models only");
  detail::require(x.rows() == eta.size(), "z_norm_diagnostic: x/eta row mismatch");
  ZNormReport rep;
  const Eigen::VectorXd z = forward(params, x).logits.col(0);
  const double n = static_cast<double>(x.rows());
  rep.z_l2 = z.norm();
  rep.eta_l2 = eta.norm();
  rep.z_rms = rep.z_l2 / std::sqrt(n);
  rep.eta_rms = rep.eta_l2 / std::sqrt(n);
  rep.deviation = rep.z_rms - rep.eta_rms;
  return rep;
}

}  // namespace survlab
