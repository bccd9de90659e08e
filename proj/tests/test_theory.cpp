#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "survlab/rng.hpp"
#include "survlab/theory.hpp"

using namespace survlab;

namespace {

DiscretizedDataset make_disc(const std::vector<double>& times, const std::vector<int>& events,
                             const std::vector<double>& edges) {
  Eigen::VectorXd t(static_cast<int>(times.size()));
  Eigen::VectorXi e(static_cast<int>(events.size()));
  for (std::size_t i = 0; i < times.size(); ++i) {
    t[static_cast<int>(i)] = times[i];
    e[static_cast<int>(i)] = events[i];
  }
  Eigen::VectorXd ed(static_cast<int>(edges.size()));
  for (std::size_t i = 0; i < edges.size(); ++i) ed[static_cast<int>(i)] = edges[i];
  return assign_bins(t, e, ed);
}

}  // namespace

TEST_CASE("scaling path on the two-subject instance") {
  Eigen::VectorXd time(2), z(2);
  Eigen::VectorXi event(2);
  time << 1.0, 2.0;
  event << 1, 0;
  z << 1.0, 0.0;
  const RiskSetIndex idx = risk_sets(time, event);
  const double grid[] = {0.0, 10.0};
  const auto path = deepsurv_scaling_path(z, idx, grid);
  REQUIRE(path.size() == 2);
  // t=0: equal scores, loss = log |risk set| = log 2, and the bound is tight
  CHECK(path[0].loss == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(path[0].bound == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  // t=10 with unit margin and one rival
  CHECK(path[1].loss == Catch::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
  CHECK(path[1].loss == Catch::Approx(4.54e-5).margin(1e-7));
  CHECK(path[1].bound >= path[1].loss);
  CHECK(path[1].loss < path[0].loss);
}

TEST_CASE("scaling path on a larger separable instance") {
  const int n = 14;
  Eigen::VectorXd time(n), z(n);
  Eigen::VectorXi event(n);
  for (int i = 0; i < n; ++i) {
    time[i] = 0.1 * (i + 1);
    event[i] = i % 3 != 2 ? 1 : 0;
    z[i] = -10.0 * time[i];  // unit margin between adjacent risk-set ranks
  }
  const RiskSetIndex idx = risk_sets(time, event);
  const auto path = deepsurv_scaling_path(z, idx, default_t_grid);

  double flat = 0.0;  // t = 0 recovers the equal-score loss
  for (int i : idx.events) flat += std::log(static_cast<double>(idx.prefix_len[i]));
  CHECK(path[0].loss == Catch::Approx(flat).epsilon(1e-12));
  for (std::size_t k = 1; k < path.size(); ++k) {
    CHECK(path[k].loss < path[k - 1].loss);
    CHECK(leq_with_slack(path[k].loss, path[k].bound));
  }
  CHECK(path.back().loss < 1e-6);
}

TEST_CASE("scaling path rejects non-separable scores") {
  Eigen::VectorXd time(2), z(2);
  Eigen::VectorXi event(2);
  time << 1.0, 2.0;
  event << 1, 0;
  z << 0.0, 1.0;  // the rival outscores the event subject
  const RiskSetIndex idx = risk_sets(time, event);
  CHECK_THROWS_AS(deepsurv_scaling_path(z, idx, default_t_grid), verification_error);
  CHECK_THROWS_WITH(deepsurv_scaling_path(z, idx, default_t_grid),
                    Catch::Matchers::ContainsSubstring("0") &&
                        Catch::Matchers::ContainsSubstring("1"));
}

TEST_CASE("excess loss forces a margin floor") {
  for (double gap : {1.0, 2.0, 5.0}) {
    Eigen::VectorXd time(2), z(2);
    Eigen::VectorXi event(2);
    time << 1.0, 2.0;
    event << 1, 0;
    z << gap, 0.0;
    const RiskSetIndex idx = risk_sets(time, event);
    const double eps = deepsurv_loss(z, idx).total;  // log(1 + e^-gap)
    REQUIRE(eps <= std::log(2.0));
    const MarginReport rep = epsilon_margin_deepsurv(z, idx, eps);
    CHECK(rep.gamma == Catch::Approx(gap).epsilon(1e-12));
    CHECK(rep.required == Catch::Approx(std::log(1.0 / eps) - std::log(2.0)).epsilon(1e-12));
    CHECK(rep.gamma >= rep.required);
  }
}

TEST_CASE("margin floor numbers at the grid epsilons") {
  // the floor log(1/eps) - log 2 crosses zero at eps = 1/2 and is already
  // slightly negative (vacuous) at the largest admissible excess, eps = log 2
  Eigen::VectorXd time(2), z(2);
  Eigen::VectorXi event(2);
  time << 1.0, 2.0;
  event << 1, 0;

  z << 1.0, 0.0;
  const MarginReport loose = epsilon_margin_deepsurv(z, risk_sets(time, event), std::log(2.0));
  CHECK(loose.required ==
        Catch::Approx(std::log(1.0 / std::log(2.0)) - std::log(2.0)).epsilon(1e-12));
  CHECK(loose.required < 0.0);

  const MarginReport zero_floor = epsilon_margin_deepsurv(z, risk_sets(time, event), 0.5);
  CHECK(zero_floor.required == Catch::Approx(0.0).margin(1e-15));

  z << 14.0, 0.0;
  const MarginReport tight = epsilon_margin_deepsurv(z, risk_sets(time, event), 1e-6);
  CHECK(tight.required == Catch::Approx(13.1224).margin(1e-4));

  CHECK_THROWS_AS(epsilon_margin_deepsurv(z, risk_sets(time, event), 0.8),
                  verification_error);  // above log 2
  z << 1.0, 0.0;  // loss 0.313 exceeds the claimed excess 0.1
  CHECK_THROWS_AS(epsilon_margin_deepsurv(z, risk_sets(time, event), 0.1), verification_error);
}

TEST_CASE("margin measurement per model") {
  {  // scalar model
    Eigen::VectorXd time(2);
    Eigen::VectorXi event(2);
    time << 1.0, 2.0;
    event << 1, 0;
    LossTarget t = LossTarget::make(LossKind::deepsurv, time, event);
    Eigen::MatrixXd z(2, 1);
    z << 1.0, 0.0;
    const MarginReport rep = measure_margin(z, t);
    CHECK(rep.kind == "deepsurv");
    CHECK(rep.gamma == Catch::Approx(1.0));
    CHECK(rep.subject == 0);
    CHECK(rep.competitor == 1);

    z << 0.5, 0.5;
    CHECK(measure_margin(z, t).gamma == Catch::Approx(0.0).margin(1e-15));

    Eigen::VectorXi none = Eigen::VectorXi::Zero(2);
    LossTarget tn = LossTarget::make(LossKind::deepsurv, time, none);
    CHECK_THROWS_AS(measure_margin(z, tn), verification_error);
  }
  {  // interval model: terminal cell against the best rival cell
    LossTarget t;
    t.kind = LossKind::nnet;
    t.disc = make_disc({0.4}, {1}, {0.0, 0.25, 0.5, 0.75});
    REQUIRE(t.disc.bin[0] == 1);
    t.time.resize(1);
    t.event.resize(1);
    t.time << 0.4;
    t.event << 1;
    Eigen::MatrixXd z(1, 3);
    z << -1.0, 3.0, 0.0;
    const MarginReport rep = measure_margin(z, t);
    CHECK(rep.kind == "nnet");
    CHECK(rep.gamma == Catch::Approx(3.0));
    CHECK(rep.competitor == 2);
  }
  {  // cumulative-logit model measures on suffix sums, not base logits
    LossTarget t;
    t.kind = LossKind::nmtlr;
    t.disc = make_disc({0.2}, {1}, {0.0, 0.5, 1.0});
    REQUIRE(t.disc.bin[0] == 0);
    t.time.resize(1);
    t.event.resize(1);
    t.time << 0.2;
    t.event << 1;
    Eigen::MatrixXd z(1, 2);
    z << 4.0, -1.0;  // cumulative scores (3, -1)
    const MarginReport rep = measure_margin(z, t);
    CHECK(rep.kind == "nmtlr-cumulative");
    CHECK(rep.gamma == Catch::Approx(4.0));
  }
}

TEST_CASE("norm floor formula: scalar model equality case") {
  Eigen::VectorXd time(2);
  Eigen::VectorXi event(2);
  time << 1.0, 2.0;
  event << 1, 0;
  const LossTarget target = LossTarget::make(LossKind::deepsurv, time, event);

  Eigen::MatrixXd f(2, 1);
  f << 2.0, 0.0;  // max comparable pair distance 2
  Eigen::MatrixXd w(1, 1);
  w << 0.5;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(1);
  const BoundCheck chk = margin_budget_check(w, b, f, target);
  CHECK(chk.rhs == Catch::Approx(0.5).epsilon(1e-12));  // margin 1 over distance 2
  CHECK(chk.lhs == Catch::Approx(0.5).epsilon(1e-9));
  CHECK(chk.pass);
}

TEST_CASE("norm floor formula: interval model with silent embedding") {
  LossTarget target;
  target.kind = LossKind::nnet;
  target.disc = make_disc({0.3}, {1}, {0.0, 0.5, 1.0});
  target.time.resize(1);
  target.event.resize(1);
  target.time << 0.3;
  target.event << 1;

  const double r2 = std::sqrt(2.0);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(1, 1);  // augmented norm exactly 1
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 1);
  Eigen::VectorXd b(2);
  b << r2, 0.0;  // margin sqrt(2) carried by the bias alone
  const BoundCheck chk = margin_budget_check(w, b, f, target);
  CHECK(chk.rhs == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(chk.lhs == Catch::Approx(r2).epsilon(1e-9));
  CHECK(chk.pass);

  Eigen::VectorXd flat = Eigen::VectorXd::Zero(2);  // zero margin: nothing to budget
  CHECK_THROWS_AS(margin_budget_check(w, flat, f, target), verification_error);
}

TEST_CASE("norm floor holds on a trained checkpoint") {
  Rng rng(123);
  const int n = 16, p = 3;
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < p; ++k) x(i, k) = rng.normal();
  Eigen::VectorXd time(n);
  Eigen::VectorXi event(n);
  for (int i = 0; i < n; ++i) {
    time[i] = rng.uniform(0.1, 1.0) + 1e-5 * i;
    event[i] = rng.uniform01() < 0.6 ? 1 : 0;
  }
  event[0] = 1;
  const LossTarget target = LossTarget::make(LossKind::deepsurv, time, event);

  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.full_batch = true;
  cfg.max_epochs = 300;
  cfg.seed = 6;
  const TrainOutcome out =
      train(mlp_init(p, 8, 1, 9), x, target, Eigen::MatrixXd(0, p), target, cfg);
  REQUIRE_FALSE(out.diverged);
  if (out.margin > 0.0) {
    const ForwardPass f = forward(out.params, x);
    const BoundCheck chk = margin_budget_check(out.params.w[2], out.params.b[2], f.h2, target);
    CHECK(chk.pass);
    CHECK(chk.lhs >= chk.rhs - 1e-9);
  }
}

TEST_CASE("hazard near-minimizer construction") {
  {  // single censored subject: the whole loss is rho * eps'
    const DiscretizedDataset d = make_disc({0.5}, {0}, {0.0, 1.0});
    const ConstructReport rep = pchazard_construct(d, 1e-4);
    CHECK(rep.excess == Catch::Approx(d.rho[0] * 1e-4).epsilon(1e-12));
    CHECK(rep.excess <= d.rho[0] * 1e-4 * (1.0 + 1e-12));
    CHECK(rep.bound >= rep.excess);
  }
  {  // single event at full exposure: loss approaches the infimum 1
    const DiscretizedDataset d = make_disc({1.0}, {1}, {0.0, 0.5, 1.0});
    REQUIRE(d.rho[0] == Catch::Approx(1.0));
    const ConstructReport rep = pchazard_construct(d, 1e-8);
    CHECK(rep.loss == Catch::Approx(1.0).margin(3e-8));
    CHECK(rep.excess <= 2.0 * 1e-8 * (1.0 + 1.0) + 1e-15);
  }
  {  // mixed instance: excess within the stated cell-count bound, vanishing with eps'
    Rng rng(3);
    std::vector<double> times;
    std::vector<int> events;
    for (int i = 0; i < 5; ++i) {
      times.push_back(rng.uniform(0.1, 1.45));
      events.push_back(i % 2);
    }
    const DiscretizedDataset d = make_disc(times, events, {0.0, 0.5, 1.0, 1.5});
    const ConstructReport coarse = pchazard_construct(d, 1e-3);
    CHECK(coarse.excess <= 15.0 * 1e-3 * 2.0);
    const ConstructReport fine = pchazard_construct(d, 1e-6);
    CHECK(fine.excess < coarse.excess / 100.0);
    CHECK(fine.excess >= 0.0);
  }
  const DiscretizedDataset d = make_disc({0.5}, {0}, {0.0, 1.0});
  CHECK_THROWS_AS(pchazard_construct(d, 0.0), invalid_config);
}

TEST_CASE("saturating-logit construction for the discrete bernoulli loss") {
  {  // one cell at t=5
    const DiscretizedDataset d = make_disc({0.5}, {1}, {0.0, 1.0});
    const ConstructReport rep = nnet_construct(d, 5.0);
    CHECK(rep.loss == Catch::Approx(std::log1p(std::exp(-5.0))).epsilon(1e-12));
    CHECK(rep.bound == Catch::Approx(std::exp(-5.0)).epsilon(1e-12));
    CHECK(rep.loss <= rep.bound);
  }
  {  // loss strictly decreasing in t, bound linear in the cell count
    Rng rng(4);
    std::vector<double> times;
    std::vector<int> events;
    long cells = 0;
    for (int i = 0; i < 6; ++i) {
      times.push_back(rng.uniform(0.1, 1.45));
      events.push_back(rng.uniform01() < 0.5 ? 1 : 0);
    }
    const DiscretizedDataset d = make_disc(times, events, {0.0, 0.5, 1.0, 1.5});
    for (int i = 0; i < d.n(); ++i) cells += d.bin[i] + 1;
    double prev = std::numeric_limits<double>::infinity();
    for (double t : {2.0, 5.0, 10.0, 20.0}) {
      const ConstructReport rep = nnet_construct(d, t);
      CHECK(rep.bound == Catch::Approx(static_cast<double>(cells) * std::exp(-t)).epsilon(1e-12));
      CHECK(rep.loss <= rep.bound);
      CHECK(rep.loss < prev);
      prev = rep.loss;
    }
  }
}

TEST_CASE("cumulative-target construction for the multi-task loss") {
  {  // single event, m=3, t=5: realized exactly, softmax tail is tiny
    const DiscretizedDataset d = make_disc({1.2}, {1}, {0.0, 1.0, 2.0, 3.0});
    const NmtlrConstructReport rep = nmtlr_construct(d, 5.0);
    CHECK(nmtlr_cumulative(rep.logits) == rep.cumulative);
    CHECK(rep.loss == Catch::Approx(std::log1p(2.0 * std::exp(-10.0))).epsilon(1e-12));
    CHECK(rep.bound == Catch::Approx(std::log1p(2.0 * std::exp(-10.0))).epsilon(1e-12));
  }
  {  // m=2, censored in the first interval: two buckets, term about e^-10
    const DiscretizedDataset d = make_disc({0.4}, {0}, {0.0, 0.5, 1.0});
    REQUIRE(d.bin[0] == 0);
    const NmtlrConstructReport rep = nmtlr_construct(d, 5.0);
    CHECK(rep.loss == Catch::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
    CHECK(rep.loss == Catch::Approx(std::exp(-10.0)).epsilon(1e-4));
  }
  {  // t=0 degenerates to uniform probabilities
    const DiscretizedDataset d = make_disc({1.2}, {1}, {0.0, 1.0, 2.0, 3.0});
    const NmtlrConstructReport rep = nmtlr_construct(d, 0.0);
    CHECK(rep.loss == Catch::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(rep.bound == Catch::Approx(std::log(3.0)).epsilon(1e-12));
  }
  {  // mixed instance at several t: internal per-subject asserts all hold
    Rng rng(6);
    std::vector<double> times;
    std::vector<int> events;
    for (int i = 0; i < 8; ++i) {
      times.push_back(rng.uniform(0.1, 0.9));  // censored rows stay off the last interval
      events.push_back(rng.uniform01() < 0.5 ? 1 : 0);
    }
    const DiscretizedDataset d = make_disc(times, events, {0.0, 0.5, 1.0, 1.5});
    double prev = std::numeric_limits<double>::infinity();
    for (double t : {2.0, 5.0, 10.0, 20.0}) {
      const NmtlrConstructReport rep = nmtlr_construct(d, t);
      CHECK(rep.loss < prev);
      prev = rep.loss;
    }
  }
  {  // censored subject in the last interval cannot take a target split
    const DiscretizedDataset d = make_disc({2.5}, {0}, {0.0, 1.0, 2.0, 3.0});
    CHECK_THROWS_AS(nmtlr_construct(d, 5.0), data_error);
  }
}

TEST_CASE("free-logit optimization approaches the infimum") {
  Rng rng(12);
  {  // hazard loss with its closed-form infimum
    std::vector<double> times;
    std::vector<int> events;
    for (int i = 0; i < 12; ++i) {
      times.push_back(rng.uniform(0.1, 1.45));
      events.push_back(rng.uniform01() < 0.6 ? 1 : 0);
    }
    events[0] = 1;
    LossTarget target;
    target.kind = LossKind::pchazard;
    target.disc = make_disc(times, events, {0.0, 0.5, 1.0, 1.5});
    target.time.resize(12);
    target.event.resize(12);
    for (int i = 0; i < 12; ++i) {
      target.time[i] = times[i];
      target.event[i] = events[i];
    }
    const double inf = pchazard_infimum(target.disc);
    const auto [z, loss] =
        optimize_free_logits(target, Eigen::MatrixXd::Zero(12, 3), 0.2, 6000);
    CHECK(loss >= inf - 1e-9);
    CHECK(loss <= inf + 1e-3);
  }
  {  // partial likelihood on distinct times: infimum zero
    Eigen::VectorXd time(10);
    Eigen::VectorXi event(10);
    for (int i = 0; i < 10; ++i) {
      time[i] = 0.1 * (i + 1);
      event[i] = i % 2 == 0 ? 1 : 0;
    }
    const LossTarget target = LossTarget::make(LossKind::deepsurv, time, event);
    const auto [z, loss] =
        optimize_free_logits(target, Eigen::MatrixXd::Zero(10, 1), 0.2, 6000);
    CHECK(loss >= 0.0);
    CHECK(loss <= 1e-3);
  }
}

TEST_CASE("default grids") {
  CHECK(default_t_grid[0] == 0.0);
  CHECK(default_t_grid[5] == 20.0);
  CHECK(default_eps_grid[3] == 1e-6);
}
