// survlab: one front door for dataset generation, single training runs,
// capacity sweeps, aggregation, plotting, and the numerical verification
// suite. Exit codes: 0 success, 1 validation/usage error, 2 verification
// suite failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "survlab/survlab.hpp"

namespace fs = std::filesystem;
using survlab::json;

namespace {

struct GlobalOpts {
  std::string preset;                 // "", "desk", "paper"
  std::optional<std::uint64_t> seed;  // overrides the config's seed knob
  std::optional<int> jobs;
  std::vector<std::string> sets;  // dotted-key=value overrides
};

void add_global_flags(CLI::App* cmd, GlobalOpts& g) {
  cmd->add_option("--preset", g.preset, "configuration preset: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", g.seed, "override the seed of the resolved config");
  cmd->add_option("--jobs", g.jobs, "worker count for sweep cells");
  cmd->add_option("--set", g.sets,
                  "dotted-key override applied to the config, e.g. --set data.n=500")
      ->take_all();
}

json parse_override_value(const std::string& raw) {
  const json parsed = json::parse(raw, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  return json(raw);  // bare strings stay strings
}

void apply_overrides(json& cfg, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw survlab::invalid_config("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    json* node = &cfg;
    std::size_t start = 0;
    for (;;) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw survlab::invalid_config("--set key has an empty segment: " + key);
      if (dot == std::string::npos) {
        (*node)[part] = parse_override_value(kv.substr(eq + 1));
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

json load_config_json(const std::string& path) {
  if (!fs::exists(path)) throw survlab::data_error("config file not found: " + path);
  return json::parse(survlab::read_text_file(path));
}

void echo_resolved(const json& cfg) { std::cout << "resolved config:\n" << cfg.dump(2) << "\n"; }

void persist_resolved(const json& cfg, const std::string& next_to) {
  survlab::write_text_file(next_to, cfg.dump(2) + "\n");
}

// --- gen ---------------------------------------------------------------

int cmd_gen(const std::string& config_path, const std::string& out_prefix, const GlobalOpts& g) {
  json cfg_json = survlab::gen_config_to_json(
      g.preset == "desk" ? survlab::desk_gen_config() : survlab::paper_gen_config());
  if (!config_path.empty()) {
    const json file = load_config_json(config_path);
    cfg_json.update(file);
  }
  apply_overrides(cfg_json, g.sets);
  if (g.seed) cfg_json["seed"] = *g.seed;
  survlab::reject_unknown_keys(
      cfg_json, {"n", "p", "s", "rho", "beta_range", "scale", "gamma", "cens_hi", "tau", "seed"},
      "gen config");
  const survlab::GenConfig cfg = survlab::gen_config_from_json(cfg_json);
  echo_resolved(cfg_json);

  const survlab::Generated gen = survlab::generate_dataset(cfg);
  fs::create_directories(fs::path(out_prefix).parent_path().empty()
                             ? "."
                             : fs::path(out_prefix).parent_path().string());
  survlab::write_dataset_csv(out_prefix + ".csv", gen.data);
  survlab::write_dataset_sidecar(out_prefix + ".json", cfg, gen);
  persist_resolved(cfg_json, out_prefix + ".config.json");
  std::cout << "wrote " << out_prefix << ".csv (" << gen.data.n() << " subjects, "
            << gen.data.p() << " covariates)\n"
            << "censoring fraction " << survlab::format_double(gen.stats.censoring_fraction)
            << ", eta rms " << survlab::format_double(gen.stats.eta_rms) << "\n";
  return 0;
}

// --- train -------------------------------------------------------------

json default_train_cmd_config(const std::string& preset) {
  const survlab::SweepConfig sweep =
      preset == "paper" ? survlab::paper_sweep_config() : survlab::desk_sweep_config();
  json j;
  j["model"] = "deepsurv";
  j["width"] = 64;
  j["data"] = survlab::gen_config_to_json(sweep.data);
  j["train_frac"] = sweep.train_frac;
  j["m_pchazard"] = sweep.m_pchazard;
  j["m_interval"] = sweep.m_interval;
  j["train"] = survlab::train_config_to_json(sweep.train);
  j["seed"] = 1;
  return j;
}

int cmd_train(const std::string& config_path, const std::string& out_prefix,
              const GlobalOpts& g) {
  json cfg = default_train_cmd_config(g.preset);
  if (!config_path.empty()) cfg.update(load_config_json(config_path));
  apply_overrides(cfg, g.sets);
  if (g.seed) cfg["seed"] = *g.seed;
  survlab::reject_unknown_keys(
      cfg, {"model", "width", "data", "train_frac", "m_pchazard", "m_interval", "train", "seed"},
      "train command config");
  echo_resolved(cfg);

  survlab::SweepConfig shim;  // reuse the sweep's context builder for one cell
  shim.models = {survlab::parse_loss_kind(cfg.at("model").get<std::string>())};
  shim.data = survlab::gen_config_from_json(cfg.at("data"));
  shim.train_frac = cfg.value("train_frac", shim.train_frac);
  shim.m_pchazard = cfg.value("m_pchazard", shim.m_pchazard);
  shim.m_interval = cfg.value("m_interval", shim.m_interval);
  const survlab::TrainConfig tc = survlab::train_config_from_json(cfg.at("train"));
  const int width = cfg.at("width").get<int>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  const survlab::Generated gen = survlab::generate_dataset(shim.data);
  const auto [train_idx, test_idx] = survlab::split_indices(
      shim.data.n, shim.train_frac, survlab::Rng(shim.data.seed).substream(5).seed());
  const survlab::SweepModelContext ctx =
      survlab::build_model_context(shim, shim.models[0], gen, train_idx, test_idx);

  survlab::Rng seeder(seed);
  const survlab::MlpParams init =
      survlab::mlp_init(static_cast<int>(ctx.x_train.cols()), width, ctx.train_target.q(),
                        seeder.substream(1).seed());
  survlab::TrainConfig run_tc = tc;
  run_tc.seed = seeder.substream(2).seed();
  const survlab::TrainOutcome outcome =
      survlab::train(init, ctx.x_train, ctx.train_target, ctx.x_test, ctx.test_target, run_tc);

  json metrics;
  metrics["model"] = cfg.at("model");
  metrics["width"] = width;
  metrics["d"] = outcome.params.param_count();
  metrics["diverged"] = outcome.diverged;
  metrics["epochs"] = outcome.converged_epoch;
  metrics["train_loss"] = outcome.train_mean;
  metrics["test_loss"] = outcome.test_mean;
  metrics["train_loss_total"] = outcome.train_total;
  metrics["test_loss_total"] = outcome.test_total;
  metrics["w_spectral"] = outcome.w_spectral;
  metrics["max_embed_norm"] = outcome.max_embed_norm;
  metrics["margin"] = outcome.margin;
  metrics["infimum_mean"] = ctx.infimum_mean;
  if (shim.models[0] == survlab::LossKind::deepsurv && !outcome.diverged) {
    const survlab::ZNormReport zn =
        survlab::z_norm_diagnostic(outcome.params, ctx.x_train, ctx.eta_train);
    metrics["z_rms"] = zn.z_rms;
    metrics["eta_rms"] = zn.eta_rms;
    metrics["znorm_dev"] = zn.deviation;
  }
  std::cout << metrics.dump(2) << "\n";
  if (!out_prefix.empty()) {
    fs::create_directories(fs::path(out_prefix).parent_path().empty()
                               ? "."
                               : fs::path(out_prefix).parent_path().string());
    survlab::save_checkpoint(out_prefix + ".ckpt.json", outcome.params);
    survlab::write_text_file(out_prefix + ".metrics.json", metrics.dump(2) + "\n");
    persist_resolved(cfg, out_prefix + ".config.json");
    std::cout << "wrote " << out_prefix << ".ckpt.json\n";
  }
  return 0;
}

// --- sweep -------------------------------------------------------------

int cmd_sweep(const std::string& config_path, const std::string& out_dir, const GlobalOpts& g) {
  json cfg_json = survlab::sweep_config_to_json(
      g.preset == "paper" ? survlab::paper_sweep_config() : survlab::desk_sweep_config());
  if (!config_path.empty()) cfg_json.update(load_config_json(config_path));
  apply_overrides(cfg_json, g.sets);
  if (g.seed) cfg_json["base_seed"] = *g.seed;
  if (g.jobs) cfg_json["jobs"] = *g.jobs;
  const survlab::SweepConfig cfg = survlab::sweep_config_from_json(cfg_json);
  echo_resolved(cfg_json);

  fs::create_directories(out_dir);
  persist_resolved(cfg_json, out_dir + "/resolved_config.json");
  const int produced = survlab::run_sweep_to_dir(cfg, out_dir);
  std::cout << "sweep complete: " << produced << " new rows in " << out_dir << "/rows.csv\n";
  return 0;
}

// --- aggregate ----------------------------------------------------------

int cmd_aggregate(const std::string& in_path, const std::string& out_path,
                  const std::string& model) {
  const std::vector<survlab::SweepRow> rows = survlab::read_sweep_rows(in_path);
  if (rows.empty()) throw survlab::data_error("no rows in " + in_path);
  std::set<std::string> models;
  for (const auto& r : rows) models.insert(r.model);
  std::string chosen = model;
  if (chosen.empty()) {
    if (models.size() != 1)
      throw survlab::invalid_config(
          "rows hold several models; pick one with --model (have: " +
          [&] {
            std::string s;
            for (const auto& m : models) s += (s.empty() ? "" : ", ") + m;
            return s;
          }());
    chosen = *models.begin();
  }
  if (!models.count(chosen))
    throw survlab::invalid_config("model '" + chosen + "' absent from " + in_path);
  const auto curve = survlab::aggregate(rows, chosen);
  survlab::write_curves_csv(out_path, curve);
  std::cout << "wrote " << out_path << " (" << curve.size() << " widths, model " << chosen
            << ")\n";
  return 0;
}

// --- plot ---------------------------------------------------------------

int cmd_plot(const std::string& in_path, const std::string& out_path, const std::string& title,
             std::optional<int> threshold, std::optional<double> infimum,
             std::optional<double> tol) {
  const auto curve = survlab::read_curves_csv(in_path);
  std::optional<int> marker = threshold;
  if (!marker && infimum)
    marker = survlab::detect_threshold(curve, *infimum, tol.value_or(0.05));
  survlab::RenderOptions opt;
  if (!title.empty()) opt.title = title;
  survlab::write_text_file(out_path, survlab::render_curves_svg(curve, marker, opt));
  std::cout << "wrote " << out_path;
  if (marker) std::cout << " (threshold marker at width " << *marker << ")";
  std::cout << "\n";
  return 0;
}

// --- verify -------------------------------------------------------------

struct CheckRecord {
  std::string name;
  json params;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  std::string note;
};

// Random loss instance; nmtlr instances keep censored subjects off the final
// interval so every tail is nonempty.
survlab::LossTarget make_random_target(survlab::LossKind kind, int n, int m, survlab::Rng& rng) {
  Eigen::VectorXd time(n);
  Eigen::VectorXi event(n);
  bool any_event = false;
  for (int i = 0; i < n; ++i) {
    time[i] = rng.uniform(0.05, 1.0);
    event[i] = rng.uniform01() < 0.6 ? 1 : 0;
    any_event |= event[i] == 1;
  }
  if (!any_event) event[0] = 1;
  if (kind == survlab::LossKind::deepsurv)
    return survlab::LossTarget::make(kind, time, event);
  survlab::DiscretizeOptions opt;
  opt.m = m;
  if (kind == survlab::LossKind::nmtlr)
    opt.min_top = time.maxCoeff() * static_cast<double>(m) / (m - 1) * 1.01;
  return survlab::LossTarget::make(kind, time, event, opt);
}

Eigen::MatrixXd random_logits(int n, int q, survlab::Rng& rng, double scale = 1.5) {
  Eigen::MatrixXd z(n, q);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < q; ++k) z(i, k) = scale * rng.normal();
  return z;
}

std::vector<CheckRecord> verify_gradients() {
  std::vector<CheckRecord> out;
  using survlab::LossKind;
  for (LossKind kind :
       {LossKind::deepsurv, LossKind::pchazard, LossKind::nnet, LossKind::nmtlr}) {
    survlab::Rng rng(2024 + static_cast<int>(kind));
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      const int n = 4 + static_cast<int>(rng.below(7));
      const int m = 2 + static_cast<int>(rng.below(4));
      const survlab::LossTarget target = make_random_target(kind, n, m, rng);
      const Eigen::MatrixXd z = random_logits(n, target.q(), rng);
      worst = std::max(worst, survlab::grad_check(target, z, 1e-5));
    }
    CheckRecord rec;
    rec.name = std::string("gradient_finite_difference_") + survlab::loss_kind_name(kind);
    rec.params = json{{"instances", 5}, {"h", 1e-5}};
    rec.lhs = worst;
    rec.rhs = 1e-6;
    rec.pass = worst <= 1e-6;
    out.push_back(rec);
  }
  return out;
}

CheckRecord verify_oracle() {
  survlab::Rng rng(77);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(49));
    Eigen::VectorXd time(n);
    Eigen::VectorXi event(n);
    for (int i = 0; i < n; ++i) {
      time[i] = 0.1 * (1.0 + static_cast<double>(rng.below(10)));  // ties on purpose
      event[i] = rng.uniform01() < 0.5 ? 1 : 0;
    }
    event[static_cast<int>(rng.below(n))] = 1;
    Eigen::VectorXd z = random_logits(n, 1, rng, 2.0).col(0);
    const survlab::LossReport fast = survlab::deepsurv_loss(z, survlab::risk_sets(time, event));
    const survlab::LossReport naive = survlab::deepsurv_loss_naive(z, time, event);
    const double scale = std::max({1.0, std::abs(fast.total), std::abs(naive.total)});
    worst = std::max(worst, std::abs(fast.total - naive.total) / scale);
    worst = std::max(worst, (fast.grad - naive.grad).cwiseAbs().maxCoeff());
  }
  CheckRecord rec;
  rec.name = "deepsurv_prefix_vs_naive";
  rec.params = json{{"instances", 100}, {"max_n", 50}};
  rec.lhs = worst;
  rec.rhs = 1e-12;
  rec.pass = worst <= 1e-12;
  return rec;
}

std::vector<CheckRecord> verify_constructs() {
  std::vector<CheckRecord> out;
  survlab::Rng rng(31);

  {  // hazard construction against its excess bound
    const survlab::LossTarget target = make_random_target(survlab::LossKind::pchazard, 12, 4, rng);
    for (double eps : {1e-3, 1e-5}) {
      CheckRecord rec;
      rec.name = "pchazard_construct_excess";
      rec.params = json{{"eps_prime", eps}, {"n", 12}, {"m", 4}};
      try {
        const survlab::ConstructReport rep = survlab::pchazard_construct(target.disc, eps);
        rec.lhs = rep.excess;
        rec.rhs = rep.bound;
        rec.pass = survlab::leq_with_slack(rep.excess, rep.bound);
      } catch (const std::exception& e) {
        rec.pass = false;
        rec.note = e.what();
      }
      out.push_back(rec);
    }
  }
  {  // saturating-logit constructions
    const survlab::LossTarget nn = make_random_target(survlab::LossKind::nnet, 12, 4, rng);
    const survlab::LossTarget nm = make_random_target(survlab::LossKind::nmtlr, 12, 4, rng);
    for (double t : {2.0, 5.0, 10.0, 20.0}) {
      CheckRecord rec;
      rec.name = "nnet_construct_bound";
      rec.params = json{{"t", t}};
      try {
        const survlab::ConstructReport rep = survlab::nnet_construct(nn.disc, t);
        rec.lhs = rep.loss;
        rec.rhs = rep.bound;
        rec.pass = survlab::leq_with_slack(rep.loss, rep.bound);
      } catch (const std::exception& e) {
        rec.pass = false;
        rec.note = e.what();
      }
      out.push_back(rec);

      CheckRecord rec2;
      rec2.name = "nmtlr_construct_bound";
      rec2.params = json{{"t", t}};
      try {
        const survlab::NmtlrConstructReport rep = survlab::nmtlr_construct(nm.disc, t);
        rec2.lhs = rep.loss;
        rec2.rhs = rep.bound;
        rec2.pass = survlab::leq_with_slack(rep.loss, rep.bound);
      } catch (const std::exception& e) {
        rec2.pass = false;
        rec2.note = e.what();
      }
      out.push_back(rec2);
    }
  }
  {  // dominance path on a separable instance
    const int n = 10;
    Eigen::VectorXd time(n);
    Eigen::VectorXi event(n);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
      time[i] = rng.uniform(0.1, 1.0);
      event[i] = i % 2 == 0 ? 1 : 0;
      z[i] = -time[i];  // later subjects score lower: separable
    }
    CheckRecord rec;
    rec.name = "deepsurv_scaling_path";
    rec.params = json{{"t_grid", {0.0, 1.0, 2.0, 5.0, 10.0, 20.0}}};
    try {
      const auto path = survlab::deepsurv_scaling_path(z, survlab::risk_sets(time, event),
                                                       survlab::default_t_grid);
      rec.lhs = path.back().loss;
      rec.rhs = path.back().bound;
      rec.pass = true;  // the call itself asserts bound and strict decrease
    } catch (const std::exception& e) {
      rec.pass = false;
      rec.note = e.what();
    }
    out.push_back(rec);
  }
  return out;
}

std::vector<CheckRecord> verify_margins() {
  std::vector<CheckRecord> out;
  for (double gap : {1.0, 2.0, 5.0}) {  // two-point excess/margin inversion
    Eigen::VectorXd time(2), z(2);
    Eigen::VectorXi event(2);
    time << 1.0, 2.0;
    event << 1, 0;
    z << gap, 0.0;
    const survlab::RiskSetIndex idx = survlab::risk_sets(time, event);
    const double eps = survlab::deepsurv_loss(z, idx).total;
    CheckRecord rec;
    rec.name = "epsilon_margin_two_point";
    rec.params = json{{"gap", gap}, {"epsilon", eps}};
    try {
      const survlab::MarginReport rep = survlab::epsilon_margin_deepsurv(z, idx, eps);
      rec.lhs = rep.gamma;
      rec.rhs = rep.required;
      rec.pass = true;
    } catch (const std::exception& e) {
      rec.pass = false;
      rec.note = e.what();
    }
    out.push_back(rec);
  }

  // margin/norm floor on small trained checkpoints
  using survlab::LossKind;
  for (LossKind kind : {LossKind::deepsurv, LossKind::nnet}) {
    survlab::Rng rng(500 + static_cast<int>(kind));
    const int n = 24, p = 3;
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < p; ++k) x(i, k) = rng.normal();
    const survlab::LossTarget target = make_random_target(kind, n, 3, rng);
    const survlab::MlpParams init = survlab::mlp_init(p, 16, target.q(), 9);
    survlab::TrainConfig tc;
    tc.lr = 5e-3;
    tc.full_batch = true;
    tc.max_epochs = 400;
    tc.seed = 4;
    const survlab::TrainOutcome outcome =
        survlab::train(init, x, target, Eigen::MatrixXd(0, p), target, tc);
    CheckRecord rec;
    rec.name = std::string("margin_norm_floor_") + survlab::loss_kind_name(kind);
    rec.params = json{{"n", n}, {"width", 16}};
    if (outcome.diverged) {
      rec.pass = false;
      rec.note = "training diverged";
    } else {
      try {
        const survlab::ForwardPass f = survlab::forward(outcome.params, x);
        const survlab::BoundCheck chk = survlab::margin_budget_check(
            outcome.params.w[2], outcome.params.b[2], f.h2, target);
        rec.lhs = chk.lhs;
        rec.rhs = chk.rhs;
        rec.pass = chk.pass;
      } catch (const survlab::verification_error& e) {
        rec.pass = true;  // no positive margin realized: floor not applicable
        rec.note = e.what();
      }
    }
    out.push_back(rec);
  }
  return out;
}

std::vector<CheckRecord> verify_datagen() {
  std::vector<CheckRecord> out;
  const survlab::GenConfig cfg = survlab::paper_gen_config();
  const survlab::Generated gen = survlab::generate_dataset(cfg);
  {
    CheckRecord rec;
    rec.name = "censoring_fraction";
    rec.params = json{{"n", cfg.n}, {"target", 0.55}, {"tolerance", 0.05}};
    rec.lhs = gen.stats.censoring_fraction;
    rec.rhs = 0.55;
    rec.pass = std::abs(rec.lhs - 0.55) <= 0.05;
    out.push_back(rec);
  }
  {
    double num = 0.0, den0 = 0.0, den1 = 0.0;
    const auto& x = gen.data.x;
    for (int i = 0; i < x.rows(); ++i)
      for (int k = 0; k + 1 < x.cols(); ++k) {
        num += x(i, k) * x(i, k + 1);
        den0 += x(i, k) * x(i, k);
        den1 += x(i, k + 1) * x(i, k + 1);
      }
    CheckRecord rec;
    rec.name = "lag1_correlation";
    rec.params = json{{"rho", cfg.rho}, {"tolerance", 0.03}};
    rec.lhs = num / std::sqrt(den0 * den1);
    rec.rhs = cfg.rho;
    rec.pass = std::abs(rec.lhs - cfg.rho) <= 0.03;
    out.push_back(rec);
  }
  return out;
}

int cmd_verify(const std::string& suite, const std::string& out_path) {
  std::vector<CheckRecord> records;
  auto want = [&](const char* name) { return suite == "all" || suite == name; };
  if (want("gradients"))
    for (auto& r : verify_gradients()) records.push_back(std::move(r));
  if (want("oracle")) records.push_back(verify_oracle());
  if (want("constructs"))
    for (auto& r : verify_constructs()) records.push_back(std::move(r));
  if (want("margins"))
    for (auto& r : verify_margins()) records.push_back(std::move(r));
  if (want("datagen"))
    for (auto& r : verify_datagen()) records.push_back(std::move(r));
  if (records.empty())
    throw survlab::invalid_config(
        "unknown suite '" + suite +
        "' (expect all|gradients|oracle|constructs|margins|datagen)");

  json report = json::array();
  bool all_pass = true;
  for (const CheckRecord& rec : records) {
    json j{{"name", rec.name},
           {"params", rec.params},
           {"lhs", rec.lhs},
           {"rhs", rec.rhs},
           {"pass", rec.pass}};
    if (!rec.note.empty()) j["note"] = rec.note;
    report.push_back(j);
    all_pass &= rec.pass;
    std::cout << (rec.pass ? "PASS " : "FAIL ") << rec.name << "  lhs="
              << survlab::format_double(rec.lhs) << " rhs=" << survlab::format_double(rec.rhs)
              << (rec.note.empty() ? "" : "  (" + rec.note + ")") << "\n";
  }
  if (!out_path.empty()) survlab::write_text_file(out_path, report.dump(2) + "\n");
  std::cout << (all_pass ? "verification suite passed" : "verification suite FAILED") << "\n";
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survival-loss interpolation laboratory"};
  app.require_subcommand(1);

  GlobalOpts g_gen, g_train, g_sweep;
  std::string gen_config, gen_out = "dataset";
  CLI::App* gen = app.add_subcommand("gen", "generate a right-censored dataset");
  gen->add_option("--config", gen_config, "GenConfig JSON file");
  gen->add_option("--out", gen_out, "output prefix (.csv and .json)");
  add_global_flags(gen, g_gen);

  std::string train_config, train_out;
  CLI::App* train = app.add_subcommand("train", "train one network");
  train->add_option("--config", train_config, "train command JSON file");
  train->add_option("--out", train_out, "output prefix for checkpoint/metrics");
  add_global_flags(train, g_train);

  std::string sweep_config, sweep_out = "sweep_out";
  CLI::App* sweep = app.add_subcommand("sweep", "run the capacity sweep");
  sweep->add_option("--config", sweep_config, "SweepConfig JSON file");
  sweep->add_option("--out", sweep_out, "output directory (rows.csv, manifest.json)");
  add_global_flags(sweep, g_sweep);

  std::string agg_in, agg_out = "curves.csv", agg_model;
  CLI::App* agg = app.add_subcommand("aggregate", "aggregate sweep rows into per-width curves");
  agg->add_option("--in", agg_in, "rows.csv path")->required();
  agg->add_option("--out", agg_out, "curves.csv path");
  agg->add_option("--model", agg_model, "model to aggregate (deepsurv|pchazard|nnet|nmtlr)");

  std::string plot_in, plot_out = "curves.svg", plot_title;
  std::optional<int> plot_threshold;
  std::optional<double> plot_infimum, plot_tol;
  CLI::App* plot = app.add_subcommand("plot", "render curves as a static SVG");
  plot->add_option("--in", plot_in, "curves.csv path")->required();
  plot->add_option("--out", plot_out, "svg path");
  plot->add_option("--title", plot_title, "chart title");
  plot->add_option("--threshold", plot_threshold, "explicit threshold marker width");
  plot->add_option("--infimum", plot_infimum, "per-sample infimum for threshold detection");
  plot->add_option("--tol", plot_tol, "threshold tolerance (default 0.05)");

  std::string verify_suite = "all", verify_out;
  CLI::App* verify = app.add_subcommand("verify", "run the numerical verification suite");
  verify->add_option("--suite", verify_suite,
                     "all|gradients|oracle|constructs|margins|datagen");
  verify->add_option("--out", verify_out, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_config, gen_out, g_gen);
    if (train->parsed()) return cmd_train(train_config, train_out, g_train);
    if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_out, g_sweep);
    if (agg->parsed()) return cmd_aggregate(agg_in, agg_out, agg_model);
    if (plot->parsed())
      return cmd_plot(plot_in, plot_out, plot_title, plot_threshold, plot_infimum, plot_tol);
    if (verify->parsed()) return cmd_verify(verify_suite, verify_out);
  } catch (const survlab::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
