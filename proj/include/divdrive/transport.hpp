#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "divdrive/error.hpp"

namespace divdrive {

/// Dense cost matrix, row-major, rows = sources, cols = sinks.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  CostMatrix() = default;
  CostMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

struct TransportPlan {
  double cost = 0.0;                // sum of flow * cost, in integer mass units
  std::vector<std::int64_t> flow;   // rows x cols
};

// Exact transportation problem with integer supplies and demands, solved as a
// min-cost flow on the complete bipartite graph by successive shortest paths
// with node potentials. Dijkstra is the dense O(V^2) variant since every
// source connects to every sink. Ties resolve to the lowest node index.
inline TransportPlan solve_transport(const CostMatrix& cost, std::span<const std::int64_t> supply,
                                     std::span<const std::int64_t> demand) {
  const std::size_t n = cost.rows;
  const std::size_t m = cost.cols;
  if (n == 0 || m == 0) throw Error(ErrorCode::kInvalidInput, "transport problem with no sources or sinks");
  if (supply.size() != n || demand.size() != m)
    throw Error(ErrorCode::kInvalidInput, "supply/demand sizes do not match the cost matrix");
  const std::int64_t total_supply = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  const std::int64_t total_demand = std::accumulate(demand.begin(), demand.end(), std::int64_t{0});
  if (total_supply != total_demand) throw Error(ErrorCode::kInvalidInput, "unbalanced transport problem");
  for (double c : cost.values)
    if (!std::isfinite(c) || c < 0.0) throw Error(ErrorCode::kInvalidInput, "transport costs must be finite and >= 0");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t nodes = n + m;
  std::vector<std::int64_t> left(supply.begin(), supply.end());
  std::vector<std::int64_t> need(demand.begin(), demand.end());
  std::vector<std::int64_t> flow(n * m, 0);
  std::vector<double> potential(nodes, 0.0);
  std::vector<double> dist(nodes);
  std::vector<std::size_t> parent(nodes);
  std::vector<char> done(nodes);

  std::int64_t remaining = total_supply;
  while (remaining > 0) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    std::fill(parent.begin(), parent.end(), nodes);
    for (std::size_t i = 0; i < n; ++i)
      if (left[i] > 0) dist[i] = 0.0;

    for (std::size_t iter = 0; iter < nodes; ++iter) {
      std::size_t u = nodes;
      for (std::size_t v = 0; v < nodes; ++v)
        if (!done[v] && dist[v] < kInf && (u == nodes || dist[v] < dist[u])) u = v;
      if (u == nodes) break;
      done[u] = 1;
      if (u < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (done[v]) continue;
          const double reduced = cost(u, j) + potential[u] - potential[v];
          const double cand = dist[u] + std::max(reduced, 0.0);
          if (cand < dist[v]) {
            dist[v] = cand;
            parent[v] = u;
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (done[i] || flow[i * m + j] == 0) continue;
          const double reduced = -cost(i, j) + potential[u] - potential[i];
          const double cand = dist[u] + std::max(reduced, 0.0);
          if (cand < dist[i]) {
            dist[i] = cand;
            parent[i] = u;
          }
        }
      }
    }

    std::size_t target = nodes;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t v = n + j;
      if (need[j] > 0 && dist[v] < kInf && (target == nodes || dist[v] < dist[target])) target = v;
    }
    if (target == nodes) throw Error(ErrorCode::kInvalidInput, "transport problem is infeasible");

    std::int64_t push = need[target - n];
    std::size_t v = target;
    while (parent[v] != nodes) {
      const std::size_t u = parent[v];
      if (u >= n) push = std::min(push, flow[v * m + (u - n)]);  // backward edge sink u -> source v
      v = u;
    }
    push = std::min(push, left[v]);

    v = target;
    while (parent[v] != nodes) {
      const std::size_t u = parent[v];
      if (u < n)
        flow[u * m + (v - n)] += push;
      else
        flow[v * m + (u - n)] -= push;
      v = u;
    }
    left[v] -= push;
    need[target - n] -= push;
    remaining -= push;

    const double cap = dist[target];
    for (std::size_t k = 0; k < nodes; ++k) potential[k] += std::min(dist[k], cap);
  }

  TransportPlan plan;
  plan.flow = std::move(flow);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (plan.flow[i * m + j] != 0) plan.cost += static_cast<double>(plan.flow[i * m + j]) * cost(i, j);
  return plan;
}

/// Earth mover's distance between uniform distributions over the rows and the
/// columns of `cost`. Masses 1/rows and 1/cols are scaled to the common
/// denominator lcm(rows, cols) so the flow stays integral.
inline double uniform_transport_cost(const CostMatrix& cost) {
  if (cost.rows == 0 || cost.cols == 0) throw Error(ErrorCode::kInvalidInput, "empty distribution");
  const auto n = static_cast<std::int64_t>(cost.rows);
  const auto m = static_cast<std::int64_t>(cost.cols);
  const std::int64_t denom = std::lcm(n, m);
  std::vector<std::int64_t> supply(cost.rows, denom / n);
  std::vector<std::int64_t> demand(cost.cols, denom / m);
  return solve_transport(cost, supply, demand).cost / static_cast<double>(denom);
}

}  // namespace divdrive
