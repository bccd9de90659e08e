#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "survlab/datagen.hpp"
#include "survlab/discretize.hpp"
#include "survlab/io.hpp"
#include "survlab/losses.hpp"
#include "survlab/mlp.hpp"
#include "survlab/numeric.hpp"

namespace survlab {

struct SweepConfig {
  std::vector<LossKind> models = {LossKind::deepsurv, LossKind::pchazard, LossKind::nnet,
                                  LossKind::nmtlr};
  std::vector<int> widths = {2, 4, 8, 16, 32, 64, 128, 256};
  std::vector<double> lrs = {1e-3};
  std::vector<int> batches = {256};
  int replicates = 5;
  std::uint64_t base_seed = 1;
  GenConfig data;
  double train_frac = 0.7;
  int m_pchazard = 50;
  int m_interval = 20;  // nnet and the cumulative-logit model
  TrainConfig train;    // lr/batch/seed overwritten per cell
  int jobs = 1;

  void validate() const {
    detail::require(!models.empty(), "SweepConfig: no models");
    detail::require(!widths.empty() && !lrs.empty() && !batches.empty(),
                    "SweepConfig: empty hyperparameter grid");
    detail::require(replicates >= 1, "SweepConfig: replicates must be >= 1");
    detail::require(train_frac > 0.0 && train_frac < 1.0, "SweepConfig: train_frac in (0,1)");
    detail::require(m_pchazard >= 1 && m_interval >= 2, "SweepConfig: interval counts");
    detail::require(jobs >= 1, "SweepConfig: jobs must be >= 1");
    data.validate();
  }

  int intervals_for(LossKind kind) const {
    return kind == LossKind::pchazard ? m_pchazard : m_interval;
  }
};

// One completed training run. Losses are per-sample means over the full train
// or test split; znorm_dev is the scalar-model output-norm deviation and NaN
// elsewhere.
struct SweepRow {
  std::string model;
  int width = 0;
  long d = 0;
  double lr = 0.0;
  int batch = 0;
  int replicate = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double w_norm = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  double znorm_dev = std::numeric_limits<double>::quiet_NaN();
  int converged_epoch = 0;
  bool diverged = false;
};

inline constexpr const char* sweep_rows_header =
    "model,width,d,lr,batch,replicate,train_loss,test_loss,w_norm,margin,znorm_dev,"
    "converged_epoch,diverged";

inline std::string sweep_row_to_csv(const SweepRow& r) {
  std::ostringstream out;
  out << r.model << ',' << r.width << ',' << r.d << ',' << format_double(r.lr) << ',' << r.batch
      << ',' << r.replicate << ',' << format_double(r.train_loss) << ','
      << format_double(r.test_loss) << ',' << format_double(r.w_norm) << ','
      << format_double(r.margin) << ',' << format_double(r.znorm_dev) << ','
      << r.converged_epoch << ',' << (r.diverged ? 1 : 0);
  return out.str();
}

inline SweepRow sweep_row_from_csv(const std::string& line) {
  const auto c = split_csv_line(line);
  if (c.size() != 13) throw data_error("sweep row needs 13 columns: " + line);
  SweepRow r;
  r.model = c[0];
  r.width = static_cast<int>(parse_double(c[1]));
  r.d = static_cast<long>(parse_double(c[2]));
  r.lr = parse_double(c[3]);
  r.batch = static_cast<int>(parse_double(c[4]));
  r.replicate = static_cast<int>(parse_double(c[5]));
  r.train_loss = parse_double(c[6]);
  r.test_loss = parse_double(c[7]);
  r.w_norm = parse_double(c[8]);
  r.margin = parse_double(c[9]);
  r.znorm_dev = parse_double(c[10]);
  r.converged_epoch = static_cast<int>(parse_double(c[11]));
  r.diverged = parse_double(c[12]) != 0.0;
  return r;
}

inline std::vector<SweepRow> read_sweep_rows(const std::string& path) {
  std::vector<SweepRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  std::string header = line;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != sweep_rows_header) throw data_error("unexpected rows header in " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(sweep_row_from_csv(line));
  }
  return rows;
}

// Cell identity; also the resume key and the hash seed material.
inline std::string sweep_cell_key(const std::string& model, int width, double lr, int batch,
                                  int replicate) {
  std::ostringstream key;
  key << model << "|w" << width << "|lr" << format_double(lr) << "|b" << batch << "|r"
      << replicate;
  return key.str();
}

// Immutable per-model data shared by every cell of a sweep.
struct SweepModelContext {
  LossKind kind = LossKind::deepsurv;
  Eigen::MatrixXd x_train, x_test;
  LossTarget train_target, test_target;
  Eigen::VectorXd eta_train;
  double infimum_total = 0.0;  // raw-sum infimum on the train split
  double infimum_mean = 0.0;
  double initial_train_mean = 0.0;  // untrained loss at the smallest width
  json grid_edges;                  // null for the scalar model
};

using RowSink =
    std::function<void(const SweepRow&, const TrainOutcome&, const SweepModelContext&)>;

inline SweepModelContext build_model_context(const SweepConfig& cfg, LossKind kind,
                                             const Generated& gen,
                                             const std::vector<int>& train_idx,
                                             const std::vector<int>& test_idx) {
  SweepModelContext ctx;
  ctx.kind = kind;
  const Dataset train = gen.data.subset(train_idx);
  const Dataset test = gen.data.subset(test_idx);
  ctx.x_train = train.x;
  ctx.x_test = test.x;
  ctx.eta_train.resize(static_cast<int>(train_idx.size()));
  for (int r = 0; r < static_cast<int>(train_idx.size()); ++r)
    ctx.eta_train[r] = gen.truth.eta[train_idx[r]];

  if (kind == LossKind::deepsurv) {
    ctx.train_target = LossTarget::make(kind, train.time, train.event);
    ctx.test_target = LossTarget::make(kind, test.time, test.event);
    ctx.infimum_total = 0.0;
    ctx.grid_edges = nullptr;
  } else {
    const int m = cfg.intervals_for(kind);
    DiscretizeOptions opt;
    opt.m = m;
    // the cumulative-logit likelihood needs every censored subject to keep a
    // nonempty tail, so its grid top clears the administrative cutoff
    opt.min_top = kind == LossKind::nmtlr
                      ? cfg.data.tau * static_cast<double>(m) / static_cast<double>(m - 1)
                      : 0.0;
    // one grid over the full pool so both splits are covered
    const DiscretizedDataset full = discretize(gen.data.time, gen.data.event, opt);
    ctx.train_target.kind = kind;
    ctx.train_target.time = train.time;
    ctx.train_target.event = train.event;
    ctx.train_target.disc = assign_bins(train.time, train.event, full.edges);
    ctx.test_target.kind = kind;
    ctx.test_target.time = test.time;
    ctx.test_target.event = test.event;
    ctx.test_target.disc = assign_bins(test.time, test.event, full.edges);
    ctx.infimum_total = kind == LossKind::pchazard ? pchazard_infimum(ctx.train_target.disc) : 0.0;
    ctx.grid_edges = std::vector<double>(full.edges.data(), full.edges.data() + full.edges.size());
  }
  ctx.infimum_mean = ctx.infimum_total / static_cast<double>(train_idx.size());
  return ctx;
}

inline std::uint64_t sweep_cell_seed(std::uint64_t base_seed, const std::string& key) {
  return base_seed + fnv1a64(key);
}

// Train one cell; every failure mode other than recorded divergence becomes a
// diverged row rather than an aborted sweep.
inline std::pair<SweepRow, TrainOutcome> run_sweep_cell(const SweepConfig& cfg,
                                                        const SweepModelContext& ctx, int width,
                                                        double lr, int batch, int replicate) {
  SweepRow row;
  row.model = loss_kind_name(ctx.kind);
  row.width = width;
  row.d = mlp_param_count(static_cast<int>(ctx.x_train.cols()), width, ctx.train_target.q());
  row.lr = lr;
  row.batch = batch;
  row.replicate = replicate;

  const std::string key = sweep_cell_key(row.model, width, lr, batch, replicate);
  const std::uint64_t cell_seed = sweep_cell_seed(cfg.base_seed, key);
  Rng seeder(cell_seed);

  TrainOutcome outcome;
  try {
    const MlpParams init = mlp_init(static_cast<int>(ctx.x_train.cols()), width,
                                    ctx.train_target.q(), seeder.substream(1).seed());
    TrainConfig tc = cfg.train;
    tc.lr = lr;
    tc.batch = batch;
    tc.seed = seeder.substream(2).seed();
    outcome = train(init, ctx.x_train, ctx.train_target, ctx.x_test, ctx.test_target, tc);
    row.diverged = outcome.diverged;
    row.converged_epoch = outcome.converged_epoch;
    if (!outcome.diverged) {
      row.train_loss = outcome.train_mean;
      row.test_loss = outcome.test_mean;
      row.w_norm = outcome.w_spectral;
      row.margin = outcome.margin;
      if (ctx.kind == LossKind::deepsurv) {
        const ZNormReport zn = z_norm_diagnostic(outcome.params, ctx.x_train, ctx.eta_train);
        row.znorm_dev = zn.deviation;
      }
    }
  } catch (const std::exception&) {
    row.diverged = true;
    outcome.diverged = true;
  }
  return {std::move(row), std::move(outcome)};
}

// Full sweep over models x widths x lrs x batches x replicates. One dataset
// per sweep; cells whose key appears in `done` are skipped (resume). Rows are
// delivered to the sink in canonical cell order regardless of worker count.
// Returns the number of rows produced.
inline int run_sweep(const SweepConfig& cfg, const std::set<std::string>& done,
                     const RowSink& sink) {
  cfg.validate();
  const Generated gen = generate_dataset(cfg.data);
  const auto [train_idx, test_idx] =
      split_indices(cfg.data.n, cfg.train_frac, Rng(cfg.data.seed).substream(5).seed());

  std::vector<SweepModelContext> contexts;
  for (LossKind kind : cfg.models)
    contexts.push_back(build_model_context(cfg, kind, gen, train_idx, test_idx));
  for (auto& ctx : contexts) {
    const MlpParams probe = mlp_init(
        static_cast<int>(ctx.x_train.cols()), *std::min_element(cfg.widths.begin(), cfg.widths.end()),
        ctx.train_target.q(),
        Rng(sweep_cell_seed(cfg.base_seed,
                            sweep_cell_key(loss_kind_name(ctx.kind),
                                           *std::min_element(cfg.widths.begin(), cfg.widths.end()),
                                           cfg.lrs.front(), cfg.batches.front(), 0)))
            .substream(1)
            .seed());
    ctx.initial_train_mean =
        eval_loss(ctx.train_target, forward(probe, ctx.x_train).logits).per_sample_mean();
  }

  struct Cell {
    int ctx;
    int width;
    double lr;
    int batch;
    int replicate;
  };
  std::vector<Cell> cells;
  for (int c = 0; c < static_cast<int>(contexts.size()); ++c)
    for (int width : cfg.widths)
      for (double lr : cfg.lrs)
        for (int batch : cfg.batches)
          for (int rep = 0; rep < cfg.replicates; ++rep) {
            const std::string key =
                sweep_cell_key(loss_kind_name(contexts[c].kind), width, lr, batch, rep);
            if (done.count(key)) continue;
            cells.push_back(Cell{c, width, lr, batch, rep});
          }

  if (cfg.jobs <= 1) {
    for (const Cell& cell : cells) {
      const auto [row, outcome] = run_sweep_cell(cfg, contexts[cell.ctx], cell.width, cell.lr,
                                                 cell.batch, cell.replicate);
      sink(row, outcome, contexts[cell.ctx]);
    }
    return static_cast<int>(cells.size());
  }

  std::atomic<std::size_t> next{0};
  std::map<std::size_t, std::pair<SweepRow, TrainOutcome>> ready;
  std::mutex mu;
  std::condition_variable cv;
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      const Cell& cell = cells[k];
      auto result = run_sweep_cell(cfg, contexts[cell.ctx], cell.width, cell.lr, cell.batch,
                                   cell.replicate);
      std::lock_guard<std::mutex> lock(mu);
      ready.emplace(k, std::move(result));
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), std::max<std::size_t>(cells.size(), 1));
  for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return ready.count(k) > 0; });
    auto result = std::move(ready.at(k));
    ready.erase(k);
    lock.unlock();
    sink(result.first, result.second, contexts[cells[k].ctx]);
  }
  for (auto& t : pool) t.join();
  return static_cast<int>(cells.size());
}

// --- aggregation ------------------------------------------------------------

// Median over cells of replicate means; even counts take the midpoint of the
// two central values.
struct CurvePoint {
  int width = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double w_norm = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  double znorm_dev = std::numeric_limits<double>::quiet_NaN();
  int cells = 0;     // hyperparameter cells with at least one surviving replicate
  int diverged = 0;  // diverged rows dropped at this width
};

inline double median_midpoint(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<CurvePoint> aggregate(const std::vector<SweepRow>& rows,
                                         const std::string& model) {
  struct CellAcc {
    double train = 0, test = 0, wn = 0, margin = 0, zn = 0;
    int n = 0;
    int zn_n = 0;
  };
  std::map<int, std::map<std::pair<double, int>, CellAcc>> by_width;
  std::map<int, int> diverged_count;
  for (const SweepRow& r : rows) {
    if (r.model != model) continue;
    if (r.diverged) {
      diverged_count[r.width]++;
      continue;
    }
    CellAcc& acc = by_width[r.width][{r.lr, r.batch}];
    acc.train += r.train_loss;
    acc.test += r.test_loss;
    acc.wn += r.w_norm;
    acc.margin += r.margin;
    if (!std::isnan(r.znorm_dev)) {
      acc.zn += r.znorm_dev;
      acc.zn_n += 1;
    }
    acc.n += 1;
  }
  std::set<int> widths;
  for (const auto& [w, _] : by_width) widths.insert(w);
  for (const auto& [w, _] : diverged_count) widths.insert(w);

  std::vector<CurvePoint> curve;
  for (int w : widths) {
    CurvePoint pt;
    pt.width = w;
    pt.diverged = diverged_count.count(w) ? diverged_count.at(w) : 0;
    if (by_width.count(w)) {
      std::vector<double> train, test, wn, margin, zn;
      for (const auto& [key, acc] : by_width.at(w)) {
        (void)key;
        train.push_back(acc.train / acc.n);
        test.push_back(acc.test / acc.n);
        wn.push_back(acc.wn / acc.n);
        margin.push_back(acc.margin / acc.n);
        if (acc.zn_n > 0) zn.push_back(acc.zn / acc.zn_n);
      }
      pt.cells = static_cast<int>(train.size());
      pt.train_loss = median_midpoint(train);
      pt.test_loss = median_midpoint(test);
      pt.w_norm = median_midpoint(wn);
      pt.margin = median_midpoint(margin);
      if (!zn.empty()) pt.znorm_dev = median_midpoint(zn);
    }
    curve.push_back(pt);
  }
  return curve;
}

// Smallest width whose aggregated train loss reaches infimum + tol. Widths
// with no surviving cells cannot qualify.
inline std::optional<int> detect_threshold(const std::vector<CurvePoint>& curve, double infimum,
                                           double tol) {
  std::optional<int> best;
  for (const CurvePoint& pt : curve) {
    if (pt.cells == 0 || std::isnan(pt.train_loss)) continue;
    if (pt.train_loss <= infimum + tol && (!best || pt.width < *best)) best = pt.width;
  }
  return best;
}

inline constexpr const char* curve_header =
    "width,train_loss,test_loss,w_norm,margin,znorm_dev,cells,diverged";

inline void write_curves_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << curve_header << "\n";
  for (const CurvePoint& pt : curve) {
    out << pt.width << ',' << format_double(pt.train_loss) << ',' << format_double(pt.test_loss)
        << ',' << format_double(pt.w_norm) << ',' << format_double(pt.margin) << ','
        << format_double(pt.znorm_dev) << ',' << pt.cells << ',' << pt.diverged << "\n";
  }
  write_text_file(path, out.str());
}

inline std::vector<CurvePoint> read_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open curves: " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty curves file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != curve_header) throw data_error("unexpected curves header in " + path);
  std::vector<CurvePoint> curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 8) throw data_error("curve row needs 8 columns: " + line);
    CurvePoint pt;
    pt.width = static_cast<int>(parse_double(c[0]));
    pt.train_loss = parse_double(c[1]);
    pt.test_loss = parse_double(c[2]);
    pt.w_norm = parse_double(c[3]);
    pt.margin = parse_double(c[4]);
    pt.znorm_dev = parse_double(c[5]);
    pt.cells = static_cast<int>(parse_double(c[6]));
    pt.diverged = static_cast<int>(parse_double(c[7]));
    curve.push_back(pt);
  }
  return curve;
}

// --- config (de)serialization and the durable sweep directory ---------------

inline json train_config_to_json(const TrainConfig& tc) {
  return json{{"lr", tc.lr},
              {"batch", tc.batch},
              {"beta1", tc.beta1},
              {"beta2", tc.beta2},
              {"adam_eps", tc.adam_eps},
              {"max_epochs", tc.max_epochs},
              {"plateau_window", tc.plateau_window},
              {"plateau_rel", tc.plateau_rel},
              {"seed", tc.seed},
              {"full_batch", tc.full_batch}};
}

inline void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                                const std::string& ctx) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw invalid_config("unknown key '" + key + "' in " + ctx);
}

inline TrainConfig train_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"lr", "batch", "beta1", "beta2", "adam_eps", "max_epochs",
                       "plateau_window", "plateau_rel", "seed", "full_batch"},
                      "train config");
  TrainConfig tc;
  tc.lr = j.value("lr", tc.lr);
  tc.batch = j.value("batch", tc.batch);
  tc.beta1 = j.value("beta1", tc.beta1);
  tc.beta2 = j.value("beta2", tc.beta2);
  tc.adam_eps = j.value("adam_eps", tc.adam_eps);
  tc.max_epochs = j.value("max_epochs", tc.max_epochs);
  tc.plateau_window = j.value("plateau_window", tc.plateau_window);
  tc.plateau_rel = j.value("plateau_rel", tc.plateau_rel);
  tc.seed = j.value("seed", tc.seed);
  tc.full_batch = j.value("full_batch", tc.full_batch);
  tc.validate();
  return tc;
}

inline json sweep_config_to_json(const SweepConfig& cfg) {
  std::vector<std::string> models;
  for (LossKind k : cfg.models) models.push_back(loss_kind_name(k));
  return json{{"models", models},
              {"widths", cfg.widths},
              {"lrs", cfg.lrs},
              {"batches", cfg.batches},
              {"replicates", cfg.replicates},
              {"base_seed", cfg.base_seed},
              {"data", gen_config_to_json(cfg.data)},
              {"train_frac", cfg.train_frac},
              {"m_pchazard", cfg.m_pchazard},
              {"m_interval", cfg.m_interval},
              {"train", train_config_to_json(cfg.train)},
              {"jobs", cfg.jobs}};
}

inline SweepConfig sweep_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"models", "widths", "lrs", "batches", "replicates", "base_seed", "data",
                       "train_frac", "m_pchazard", "m_interval", "train", "jobs"},
                      "sweep config");
  SweepConfig cfg;
  if (j.contains("models")) {
    cfg.models.clear();
    for (const auto& name : j.at("models")) cfg.models.push_back(parse_loss_kind(name));
  }
  cfg.widths = j.value("widths", cfg.widths);
  cfg.lrs = j.value("lrs", cfg.lrs);
  cfg.batches = j.value("batches", cfg.batches);
  cfg.replicates = j.value("replicates", cfg.replicates);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  if (j.contains("data")) {
    reject_unknown_keys(j.at("data"),
                        {"n", "p", "s", "rho", "beta_range", "scale", "gamma", "cens_hi", "tau",
                         "seed"},
                        "data config");
    cfg.data = gen_config_from_json(j.at("data"));
  }
  cfg.train_frac = j.value("train_frac", cfg.train_frac);
  cfg.m_pchazard = j.value("m_pchazard", cfg.m_pchazard);
  cfg.m_interval = j.value("m_interval", cfg.m_interval);
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

inline std::string sweep_config_hash(const SweepConfig& cfg) {
  // jobs is execution detail, not identity
  json j = sweep_config_to_json(cfg);
  j.erase("jobs");
  return hex64(fnv1a64(j.dump()));
}

// Durable sweep directory: rows.csv (append-only), manifest.json. Re-running
// with the same config resumes; a config-hash mismatch is an error.
inline int run_sweep_to_dir(const SweepConfig& cfg, const std::string& out_dir,
                            const RowSink& extra_sink = nullptr) {
  namespace fs = std::filesystem;
  cfg.validate();
  fs::create_directories(out_dir);
  const std::string rows_path = out_dir + "/rows.csv";
  const std::string manifest_path = out_dir + "/manifest.json";
  const std::string hash = sweep_config_hash(cfg);

  std::set<std::string> done;
  bool rows_exist = fs::exists(rows_path);
  if (rows_exist) {
    if (fs::exists(manifest_path)) {
      const json manifest = json::parse(read_text_file(manifest_path));
      if (manifest.value("config_hash", "") != hash)
        throw invalid_config("sweep directory " + out_dir +
                             " holds results for a different config; refusing to mix");
    }
    for (const SweepRow& r : read_sweep_rows(rows_path))
      done.insert(sweep_cell_key(r.model, r.width, r.lr, r.batch, r.replicate));
  }

  // manifest first so an interrupted run is still identifiable
  {
    const Generated gen = generate_dataset(cfg.data);
    const auto [train_idx, test_idx] =
        split_indices(cfg.data.n, cfg.train_frac, Rng(cfg.data.seed).substream(5).seed());
    json manifest;
    manifest["format"] = "survlab-sweep";
    manifest["version"] = 1;
    manifest["config"] = sweep_config_to_json(cfg);
    manifest["config_hash"] = hash;
    manifest["n_train"] = train_idx.size();
    manifest["n_test"] = test_idx.size();
    manifest["censoring_fraction"] = gen.stats.censoring_fraction;
    manifest["eta_rms"] = gen.truth.eta_rms;
    json per_model = json::object();
    for (LossKind kind : cfg.models) {
      SweepModelContext ctx = build_model_context(cfg, kind, gen, train_idx, test_idx);
      const int w0 = *std::min_element(cfg.widths.begin(), cfg.widths.end());
      const MlpParams probe =
          mlp_init(static_cast<int>(ctx.x_train.cols()), w0, ctx.train_target.q(),
                   Rng(sweep_cell_seed(cfg.base_seed,
                                       sweep_cell_key(loss_kind_name(kind), w0, cfg.lrs.front(),
                                                      cfg.batches.front(), 0)))
                       .substream(1)
                       .seed());
      const double initial =
          eval_loss(ctx.train_target, forward(probe, ctx.x_train).logits).per_sample_mean();
      per_model[loss_kind_name(kind)] =
          json{{"infimum_total", ctx.infimum_total},
               {"infimum_mean", ctx.infimum_mean},
               {"initial_train_mean", initial},
               {"grid", ctx.grid_edges}};
    }
    manifest["per_model"] = per_model;
    write_text_file(manifest_path, manifest.dump(2) + "\n");
  }

  std::ofstream rows_out(rows_path, std::ios::app);
  if (!rows_out) throw data_error("cannot open " + rows_path);
  if (!rows_exist) rows_out << sweep_rows_header << "\n";

  const int produced = run_sweep(cfg, done, [&](const SweepRow& row, const TrainOutcome& outcome,
                                                const SweepModelContext& ctx) {
    rows_out << sweep_row_to_csv(row) << "\n";
    rows_out.flush();
    if (extra_sink) extra_sink(row, outcome, ctx);
  });
  return produced;
}

}  // namespace survlab
