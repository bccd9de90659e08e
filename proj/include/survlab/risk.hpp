#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <numeric>
#include <vector>

#include "survlab/numeric.hpp"

namespace survlab {

// Risk sets R_i = {j : T_j >= T_i}, ties included. After sorting subjects by
// descending time, R_i is a prefix of `order`, so only its length is stored.
struct RiskSetIndex {
  std::vector<int> order;       // subject ids, time descending (ties by id)
  std::vector<int> pos;         // inverse of order
  std::vector<int> prefix_len;  // |R_i|; R_i = { order[0], ..., order[prefix_len[i]-1] }
  std::vector<int> events;      // ids with delta = 1, ascending

  int n() const { return static_cast<int>(order.size()); }
};

inline RiskSetIndex risk_sets(const Eigen::VectorXd& time, const Eigen::VectorXi& event) {
  detail::require(time.size() == event.size(), "risk_sets: time/event length mismatch");
  const int n = static_cast<int>(time.size());
  RiskSetIndex idx;
  idx.order.resize(n);
  std::iota(idx.order.begin(), idx.order.end(), 0);
  std::sort(idx.order.begin(), idx.order.end(), [&](int a, int b) {
    if (time[a] != time[b]) return time[a] > time[b];
    return a < b;
  });
  idx.pos.resize(n);
  for (int r = 0; r < n; ++r) idx.pos[idx.order[r]] = r;
  idx.prefix_len.resize(n);
  int r = 0;
  while (r < n) {
    int e = r;
    while (e + 1 < n && time[idx.order[e + 1]] == time[idx.order[r]]) ++e;
    for (int q = r; q <= e; ++q) idx.prefix_len[idx.order[q]] = e + 1;
    r = e + 1;
  }
  for (int i = 0; i < n; ++i) {
    if (event[i] != 0 && event[i] != 1) throw data_error("risk_sets: event flags must be 0/1");
    if (event[i] == 1) idx.events.push_back(i);
  }
  return idx;
}

}  // namespace survlab
