#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "survlab/datagen.hpp"
#include "survlab/numeric.hpp"

namespace survlab {

enum class GridScheme { equidistant, quantile };

struct DiscretizeOptions {
  int m = 20;
  GridScheme scheme = GridScheme::equidistant;
  // Lower bound on the grid top before inflation. Interval models whose
  // likelihood needs a nonempty tail past every censored subject (the
  // cumulative-logit one) set this above the administrative cutoff.
  double min_top = 0.0;
};

// Right-closed interval grid over (0, top]: subject i with observed time T_i
// gets bin[i] = smallest j with T_i <= edges[j+1] (0-indexed), exposure
// rho[i] = (T_i - edges[bin]) / interval width.
struct DiscretizedDataset {
  Eigen::VectorXd edges;       // m+1 cut points, edges[0] = 0
  Eigen::VectorXi bin;         // per-subject interval index in [0, m)
  Eigen::VectorXd rho;         // exposure fraction in the terminal interval
  Eigen::VectorXi event;      // delta
  Eigen::VectorXi risk_count;  // risk_count[j] = #{i : bin[i] >= j}

  int n() const { return static_cast<int>(bin.size()); }
  int m() const { return static_cast<int>(edges.size()) - 1; }

  bool at_risk(int i, int j) const { return j <= bin[i]; }
  // y_{ij}: 1 only in the terminal cell of an event subject.
  double target(int i, int j) const {
    return (j == bin[i] && event[i] == 1) ? 1.0 : 0.0;
  }

  void validate() const {
    const int mm = m();
    detail::require(mm >= 1, "DiscretizedDataset: need at least one interval");
    for (int j = 0; j < mm; ++j)
      if (!(edges[j] < edges[j + 1]))
        throw data_error("DiscretizedDataset: grid edges must increase strictly");
    if (edges[0] != 0.0) throw data_error("DiscretizedDataset: grid must start at 0");
    long total = 0;
    for (int i = 0; i < n(); ++i) {
      if (bin[i] < 0 || bin[i] >= mm) throw data_error("DiscretizedDataset: bin out of range");
      if (rho[i] < 0.0 || rho[i] > 1.0) throw data_error("DiscretizedDataset: rho outside [0,1]");
      total += bin[i] + 1;
    }
    long rc = 0;
    for (int j = 0; j < mm; ++j) rc += risk_count[j];
    if (rc != total) throw data_error("DiscretizedDataset: risk counts disagree with masks");
  }
};

inline Eigen::VectorXd equidistant_edges(double top, int m) {
  detail::require(m >= 1, "equidistant_edges: m must be >= 1");
  detail::require(top > 0.0, "equidistant_edges: top must be positive");
  Eigen::VectorXd edges(m + 1);
  for (int j = 0; j <= m; ++j) edges[j] = top * static_cast<double>(j) / m;
  edges[0] = 0.0;
  return edges;
}

inline Eigen::VectorXd quantile_edges(const Eigen::VectorXd& times, double top, int m) {
  detail::require(m >= 1, "quantile_edges: m must be >= 1");
  std::vector<double> sorted(times.data(), times.data() + times.size());
  std::sort(sorted.begin(), sorted.end());
  Eigen::VectorXd edges(m + 1);
  edges[0] = 0.0;
  for (int j = 1; j < m; ++j) {
    const double q = static_cast<double>(j) / m;
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    edges[j] = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  edges[m] = top;
  for (int j = 0; j < m; ++j)
    if (!(edges[j] < edges[j + 1]))
      throw data_error("quantile_edges: duplicate quantiles produce a zero-width interval");
  return edges;
}

// Assign bins and exposures against a prebuilt grid. Times above the top cut
// are a coverage error rather than a clamp.
inline DiscretizedDataset assign_bins(const Eigen::VectorXd& time, const Eigen::VectorXi& event,
                                      const Eigen::VectorXd& edges) {
  const int n = static_cast<int>(time.size());
  const int m = static_cast<int>(edges.size()) - 1;
  detail::require(m >= 1, "assign_bins: need at least one interval");
  DiscretizedDataset out;
  out.edges = edges;
  out.bin.resize(n);
  out.rho.resize(n);
  out.event = event;
  out.risk_count = Eigen::VectorXi::Zero(m);
  for (int i = 0; i < n; ++i) {
    const double t = time[i];
    if (t < 0.0) throw data_error("assign_bins: negative observed time");
    if (t > edges[m]) throw data_error("assign_bins: observed time exceeds grid top");
    // smallest j with t <= edges[j+1]
    int j = static_cast<int>(std::lower_bound(edges.data() + 1, edges.data() + m + 1, t) -
                             (edges.data() + 1));
    if (j >= m) j = m - 1;
    out.bin[i] = j;
    out.rho[i] = (t - edges[j]) / (edges[j + 1] - edges[j]);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= out.bin[i]; ++j) out.risk_count[j]++;
  out.validate();
  return out;
}

inline DiscretizedDataset discretize(const Eigen::VectorXd& time, const Eigen::VectorXi& event,
                                     const DiscretizeOptions& opt) {
  detail::require(opt.m >= 1, "discretize: m must be >= 1");
  detail::require(time.size() == event.size(), "discretize: time/event length mismatch");
  detail::require(time.size() > 0, "discretize: empty dataset");
  double top = std::max(time.maxCoeff(), opt.min_top);
  detail::require(top > 0.0, "discretize: all times zero, grid would be empty");
  top *= 1.0 + 1e-9;  // max observation must land inside the last interval
  Eigen::VectorXd edges = opt.scheme == GridScheme::equidistant
                              ? equidistant_edges(top, opt.m)
                              : quantile_edges(time, top, opt.m);
  return assign_bins(time, event, edges);
}

inline DiscretizedDataset discretize(const Dataset& data, const DiscretizeOptions& opt) {
  return discretize(data.time, data.event, opt);
}

}  // namespace survlab
