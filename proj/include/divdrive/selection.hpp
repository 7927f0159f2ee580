#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "divdrive/diversity.hpp"
#include "divdrive/random.hpp"

namespace divdrive {

struct Candidate {
  std::string policy_id;
  std::int64_t session_id = 0;
  std::int64_t training_step = 0;
  double driving_score = 0.0;
};

/// Candidate snapshots plus their pairwise distances. `distances` rows follow
/// the order of `candidates`, which callers keep sorted by snapshot id.
struct CandidatePool {
  std::vector<Candidate> candidates;
  DistanceMatrix distances;

  [[nodiscard]] std::size_t size() const { return candidates.size(); }
};

/// Keeps candidates whose driving score is not less than `delta`.
inline CandidatePool filter_by_score(const CandidatePool& pool, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorCode::kInvalidInput, "delta must lie in [0, 1]");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool.candidates[i].driving_score >= delta) keep.push_back(i);
  CandidatePool out;
  for (std::size_t i : keep) out.candidates.push_back(pool.candidates[i]);
  out.distances = pool.distances.subset(keep);
  return out;
}

struct SelectedPolicy {
  std::size_t rank = 0;
  std::size_t pool_index = 0;
  /// Min distance to the previously selected set when picked; +inf for the
  /// first pick, -inf when the pick shares no scenario with some selected one.
  double min_distance = std::numeric_limits<double>::infinity();
};

struct Selection {
  std::vector<SelectedPolicy> picks;
  bool truncated = false;                     // k exceeded the pool size
  std::vector<std::size_t> disconnected;      // candidates lacking a shared scenario with a pick

  [[nodiscard]] std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (const auto& p : picks) out.push_back(p.pool_index);
    return out;
  }
};

/// Farthest-point greedy selection starting from `first`: each step adds the
/// remaining candidate whose minimum distance to the selected set is largest.
/// Pairs without shared successful scenarios count as -inf. Ties go to the
/// lowest pool index.
inline Selection select_diverse_from(const CandidatePool& pool, std::size_t k, std::size_t first) {
  const std::size_t n = pool.size();
  if (n == 0) throw Error(ErrorCode::kNoCandidates, "filtered candidate pool is empty");
  if (k == 0) throw Error(ErrorCode::kInvalidInput, "k must be at least 1");
  if (first >= n) throw Error(ErrorCode::kInvalidInput, "first pick outside the pool");
  if (pool.distances.size() != n) throw Error(ErrorCode::kInvalidInput, "distance matrix does not match pool");

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const DistanceMatrix& d = pool.distances;
  auto dist = [&](std::size_t a, std::size_t b) { return d.connected(a, b) ? d(a, b) : kNegInf; };

  Selection out;
  out.truncated = k > n;
  const std::size_t target = std::min(k, n);
  std::vector<char> chosen(n, 0);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t idx, double score) {
    chosen[idx] = 1;
    out.picks.push_back({out.picks.size() + 1, idx, score});
    for (std::size_t c = 0; c < n; ++c)
      if (!chosen[c]) min_dist[c] = std::min(min_dist[c], dist(c, idx));
  };

  take(first, std::numeric_limits<double>::infinity());
  while (out.picks.size() < target) {
    std::size_t best = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (chosen[c]) continue;
      if (best == n || min_dist[c] > min_dist[best]) best = c;
    }
    take(best, min_dist[best]);
  }

  for (std::size_t c = 0; c < n; ++c) {
    for (const auto& p : out.picks) {
      if (c != p.pool_index && !d.connected(c, p.pool_index)) {
        out.disconnected.push_back(c);
        break;
      }
    }
  }
  return out;
}

/// Diverse selection with a seeded uniformly random first pick.
inline Selection select_diverse(const CandidatePool& pool, std::size_t k, std::uint64_t seed) {
  if (pool.size() == 0) throw Error(ErrorCode::kNoCandidates, "filtered candidate pool is empty");
  std::mt19937_64 rng(seed);
  return select_diverse_from(pool, k, uniform_index(rng, pool.size()));
}

/// Baseline: k candidates drawn uniformly without replacement.
inline Selection select_random(const CandidatePool& pool, std::size_t k, std::uint64_t seed) {
  const std::size_t n = pool.size();
  if (n == 0) throw Error(ErrorCode::kNoCandidates, "filtered candidate pool is empty");
  if (k == 0) throw Error(ErrorCode::kInvalidInput, "k must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  Selection out;
  out.truncated = k > n;
  const std::size_t target = std::min(k, n);
  for (std::size_t i = 0; i < target; ++i)
    out.picks.push_back({i + 1, order[i], std::numeric_limits<double>::quiet_NaN()});
  return out;
}

}  // namespace divdrive
