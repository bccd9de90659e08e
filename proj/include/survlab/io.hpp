#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "survlab/datagen.hpp"
#include "survlab/mlp.hpp"
#include "survlab/numeric.hpp"

namespace survlab {

using json = nlohmann::json;

// Shortest exact decimal: 17 significant digits round-trip any double.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw data_error("parse_double: not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write file: " + path);
  out << content;
  if (!out) throw data_error("write failed: " + path);
}

// 64-bit FNV-1a over a string; stable across platforms, used for config
// fingerprints in manifests.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// --- dataset files ---------------------------------------------------------

inline void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  for (int k = 0; k < data.p(); ++k) out << "x_" << (k + 1) << ",";
  out << "time,event\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int k = 0; k < data.p(); ++k) out << format_double(data.x(i, k)) << ",";
    out << format_double(data.time[i]) << "," << data.event[i] << "\n";
  }
  write_text_file(path, out.str());
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty dataset file: " + path);
  const auto header = split_csv_line(line);
  const int cols = static_cast<int>(header.size());
  if (cols < 3 || header[cols - 2] != "time" || header[cols - 1] != "event")
    throw data_error("dataset header must end with time,event: " + path);
  const int p = cols - 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != cols)
      throw data_error("dataset row width mismatch in " + path);
    std::vector<double> row(cols);
    for (int c = 0; c < cols; ++c) row[c] = parse_double(cells[c]);
    rows.push_back(std::move(row));
  }
  Dataset d;
  d.x.resize(static_cast<int>(rows.size()), p);
  d.time.resize(static_cast<int>(rows.size()));
  d.event.resize(static_cast<int>(rows.size()));
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    for (int k = 0; k < p; ++k) d.x(i, k) = rows[i][k];
    d.time[i] = rows[i][p];
    d.event[i] = static_cast<int>(rows[i][p + 1]);
  }
  return d;
}

inline json gen_config_to_json(const GenConfig& cfg) {
  return json{{"n", cfg.n},         {"p", cfg.p},
              {"s", cfg.s},         {"rho", cfg.rho},
              {"beta_range", cfg.beta_range}, {"scale", cfg.scale},
              {"gamma", cfg.gamma}, {"cens_hi", cfg.cens_hi},
              {"tau", cfg.tau},     {"seed", cfg.seed}};
}

inline GenConfig gen_config_from_json(const json& j) {
  GenConfig cfg;
  cfg.n = j.value("n", cfg.n);
  cfg.p = j.value("p", cfg.p);
  cfg.s = j.value("s", cfg.s);
  cfg.rho = j.value("rho", cfg.rho);
  cfg.beta_range = j.value("beta_range", cfg.beta_range);
  cfg.scale = j.value("scale", cfg.scale);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.cens_hi = j.value("cens_hi", cfg.cens_hi);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

// Sidecar carrying everything needed to reproduce and audit a generated file.
// `grid` is null unless a discretization grid is part of the artifact.
inline void write_dataset_sidecar(const std::string& path, const GenConfig& cfg,
                                  const Generated& gen, const json& grid = nullptr) {
  json j;
  j["config"] = gen_config_to_json(cfg);
  j["seed"] = cfg.seed;
  j["censoring_fraction"] = gen.stats.censoring_fraction;
  j["eta_rms"] = gen.truth.eta_rms;
  j["eta_l2"] = gen.truth.eta_l2;
  j["beta"] = std::vector<double>(gen.truth.beta.data(), gen.truth.beta.data() + gen.truth.beta.size());
  j["support"] = gen.truth.support;
  j["eta"] = std::vector<double>(gen.truth.eta.data(), gen.truth.eta.data() + gen.truth.eta.size());
  j["grid"] = grid;
  write_text_file(path, j.dump(2) + "\n");
}

// --- network checkpoints ----------------------------------------------------

inline void save_checkpoint(const std::string& path, const MlpParams& params) {
  json j;
  j["format"] = "survlab-mlp";
  j["version"] = 1;
  j["in_dim"] = params.in_dim;
  j["width"] = params.width;
  j["out_dim"] = params.out_dim;
  j["layers"] = json::array();
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    json layer;
    layer["rows"] = params.w[l].rows();
    layer["cols"] = params.w[l].cols();
    std::vector<double> wflat;
    wflat.reserve(params.w[l].size());
    for (int r = 0; r < params.w[l].rows(); ++r)
      for (int c = 0; c < params.w[l].cols(); ++c) wflat.push_back(params.w[l](r, c));
    layer["w"] = wflat;
    layer["b"] = std::vector<double>(params.b[l].data(), params.b[l].data() + params.b[l].size());
    j["layers"].push_back(layer);
  }
  write_text_file(path, j.dump() + "\n");
}

inline MlpParams load_checkpoint(const std::string& path) {
  json j = json::parse(read_text_file(path));
  if (j.value("format", "") != "survlab-mlp" || j.value("version", 0) != 1)
    throw data_error("unrecognized checkpoint header in " + path);
  MlpParams params;
  params.in_dim = j.at("in_dim").get<int>();
  params.width = j.at("width").get<int>();
  params.out_dim = j.at("out_dim").get<int>();
  for (const auto& layer : j.at("layers")) {
    const int rows = layer.at("rows").get<int>();
    const int cols = layer.at("cols").get<int>();
    const auto wflat = layer.at("w").get<std::vector<double>>();
    if (static_cast<int>(wflat.size()) != rows * cols)
      throw data_error("checkpoint layer size mismatch in " + path);
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = wflat[static_cast<std::size_t>(r) * cols + c];
    params.w.push_back(std::move(w));
    const auto bvec = layer.at("b").get<std::vector<double>>();
    Eigen::VectorXd b(static_cast<int>(bvec.size()));
    for (int r = 0; r < b.size(); ++r) b[r] = bvec[r];
    params.b.push_back(std::move(b));
  }
  if (params.w.size() != 3) throw data_error("checkpoint must hold three layers: " + path);
  return params;
}

}  // namespace survlab
