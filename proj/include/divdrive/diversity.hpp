#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "divdrive/trajectory.hpp"
#include "divdrive/trajectory_log.hpp"
#include "divdrive/transport.hpp"

namespace divdrive {

/// Outcomes and trajectories of every evaluated (scenario, policy) pair.
class EvaluationTable {
 public:
  struct Cell {
    Outcome outcome = Outcome::kTimeout;
    Trajectory trajectory;
  };

  EvaluationTable() = default;
  EvaluationTable(std::vector<std::string> scenarios, std::vector<std::string> policies)
      : scenarios_(std::move(scenarios)), policies_(std::move(policies)) {
    for (std::size_t i = 0; i < scenarios_.size(); ++i)
      if (!scenario_index_.emplace(scenarios_[i], i).second)
        throw Error(ErrorCode::kInvalidInput, "duplicate scenario id " + scenarios_[i]);
    for (std::size_t i = 0; i < policies_.size(); ++i)
      if (!policy_index_.emplace(policies_[i], i).second)
        throw Error(ErrorCode::kInvalidInput, "duplicate policy id " + policies_[i]);
    cells_.resize(scenarios_.size() * policies_.size());
  }

  [[nodiscard]] const std::vector<std::string>& scenarios() const { return scenarios_; }
  [[nodiscard]] const std::vector<std::string>& policies() const { return policies_; }

  [[nodiscard]] std::size_t scenario_index(const std::string& id) const { return lookup(scenario_index_, id, "scenario"); }
  [[nodiscard]] std::size_t policy_index(const std::string& id) const { return lookup(policy_index_, id, "policy"); }

  void set(std::size_t scenario, std::size_t policy, Outcome outcome, Trajectory trajectory) {
    cells_.at(scenario * policies_.size() + policy) = Cell{outcome, std::move(trajectory)};
  }
  void set(const std::string& scenario, const std::string& policy, Outcome outcome, Trajectory trajectory) {
    set(scenario_index(scenario), policy_index(policy), outcome, std::move(trajectory));
  }

  [[nodiscard]] const Cell& cell(std::size_t scenario, std::size_t policy) const {
    const auto& c = cells_.at(scenario * policies_.size() + policy);
    if (!c) throw Error(ErrorCode::kInvalidInput, "evaluation cell (" + scenarios_[scenario] + ", " +
                                                      policies_[policy] + ") is not filled");
    return *c;
  }
  [[nodiscard]] bool filled(std::size_t scenario, std::size_t policy) const {
    return cells_.at(scenario * policies_.size() + policy).has_value();
  }
  [[nodiscard]] bool complete() const {
    for (const auto& c : cells_)
      if (!c) return false;
    return true;
  }

  [[nodiscard]] bool succeeded(std::size_t scenario, std::size_t policy) const {
    return cell(scenario, policy).outcome == Outcome::kGoal;
  }

  /// Fraction of scenarios in which the policy reached the goal.
  [[nodiscard]] double driving_score(std::size_t policy) const {
    if (scenarios_.empty()) return 0.0;
    std::size_t wins = 0;
    for (std::size_t s = 0; s < scenarios_.size(); ++s) wins += succeeded(s, policy) ? 1 : 0;
    return static_cast<double>(wins) / static_cast<double>(scenarios_.size());
  }

 private:
  static std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index, const std::string& id,
                            const char* what) {
    const auto it = index.find(id);
    if (it == index.end()) throw Error(ErrorCode::kInvalidInput, std::string("unknown ") + what + " id " + id);
    return it->second;
  }

  std::vector<std::string> scenarios_;
  std::vector<std::string> policies_;
  std::unordered_map<std::string, std::size_t> scenario_index_;
  std::unordered_map<std::string, std::size_t> policy_index_;
  std::vector<std::optional<Cell>> cells_;
};

struct PairDiversity {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t shared = 0;
};

/// Average trajectory distance of two policies over the scenarios both of them
/// completed. Returns the shared-success count alongside the value; the value
/// is NaN when nothing is shared.
inline PairDiversity pairwise_diversity_detail(const EvaluationTable& table, std::size_t p, std::size_t q) {
  PairDiversity out;
  double sum = 0.0;
  for (std::size_t s = 0; s < table.scenarios().size(); ++s) {
    if (!table.succeeded(s, p) || !table.succeeded(s, q)) continue;
    sum += trajectory_distance(table.cell(s, p).trajectory, table.cell(s, q).trajectory);
    ++out.shared;
  }
  if (out.shared > 0) out.value = sum / static_cast<double>(out.shared);
  return out;
}

inline double pairwise_diversity(const EvaluationTable& table, std::size_t p, std::size_t q) {
  if (p == q) throw Error(ErrorCode::kInvalidInput, "pairwise diversity needs two distinct policies");
  const PairDiversity d = pairwise_diversity_detail(table, p, q);
  if (d.shared == 0)
    throw Error(ErrorCode::kNoSharedScenario,
                "policies " + table.policies()[p] + " and " + table.policies()[q] + " share no successful scenario");
  return d.value;
}

inline double pairwise_diversity(const EvaluationTable& table, const std::string& p, const std::string& q) {
  return pairwise_diversity(table, table.policy_index(p), table.policy_index(q));
}

/// Symmetric matrix of pairwise diversities over a list of policies.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::vector<std::string> ids)
      : ids_(std::move(ids)),
        values_(ids_.size() * ids_.size(), 0.0),
        shared_(ids_.size() * ids_.size(), 0) {}

  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }

  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values_[i * size() + j]; }
  [[nodiscard]] std::size_t shared(std::size_t i, std::size_t j) const { return shared_[i * size() + j]; }
  [[nodiscard]] bool connected(std::size_t i, std::size_t j) const { return i == j || shared(i, j) > 0; }

  void set(std::size_t i, std::size_t j, double value, std::size_t shared_count) {
    values_[i * size() + j] = values_[j * size() + i] = value;
    shared_[i * size() + j] = shared_[j * size() + i] = shared_count;
  }

  /// Sub-matrix restricted to the given row indices, in the given order.
  [[nodiscard]] DistanceMatrix subset(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    for (std::size_t r : rows) ids.push_back(ids_.at(r));
    DistanceMatrix sub(std::move(ids));
    for (std::size_t a = 0; a < rows.size(); ++a) {
      sub.shared_[a * rows.size() + a] = shared(rows[a], rows[a]);
      for (std::size_t b = a + 1; b < rows.size(); ++b) sub.set(a, b, (*this)(rows[a], rows[b]), shared(rows[a], rows[b]));
    }
    return sub;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::vector<std::size_t> shared_;
};

/// Builds the pairwise-diversity matrix for the listed policies. Entries with
/// no shared successful scenario are NaN with a zero shared count.
inline DistanceMatrix build_distance_matrix(const EvaluationTable& table, std::span<const std::string> policy_ids) {
  std::vector<std::size_t> idx;
  for (const auto& id : policy_ids) idx.push_back(table.policy_index(id));
  DistanceMatrix m(std::vector<std::string>(policy_ids.begin(), policy_ids.end()));
  for (std::size_t a = 0; a < idx.size(); ++a) {
    std::size_t own = 0;
    for (std::size_t s = 0; s < table.scenarios().size(); ++s) own += table.succeeded(s, idx[a]) ? 1 : 0;
    m.set(a, a, 0.0, own);
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const PairDiversity d = pairwise_diversity_detail(table, idx[a], idx[b]);
      m.set(a, b, d.value, d.shared);
    }
  }
  return m;
}

/// Mean pairwise diversity over all ordered pairs of the set (which equals the
/// mean over unordered pairs by symmetry).
inline double inter_policy_diversity(const DistanceMatrix& m, std::span<const std::size_t> members) {
  if (members.size() < 2) throw Error(ErrorCode::kInvalidInput, "inter-policy diversity needs at least two policies");
  // summed in index order so that the same set always gives the same bits
  std::vector<std::size_t> set(members.begin(), members.end());
  std::sort(set.begin(), set.end());
  double sum = 0.0;
  for (std::size_t a = 0; a < set.size(); ++a) {
    for (std::size_t b = a + 1; b < set.size(); ++b) {
      if (set[a] == set[b]) throw Error(ErrorCode::kInvalidInput, "duplicate policy in set");
      if (!m.connected(set[a], set[b]))
        throw Error(ErrorCode::kNoSharedScenario,
                    "policies " + m.ids()[set[a]] + " and " + m.ids()[set[b]] + " share no successful scenario");
      sum += m(set[a], set[b]);
    }
  }
  const double pairs = static_cast<double>(set.size() * (set.size() - 1) / 2);
  return sum / pairs;
}

inline double inter_policy_diversity(const EvaluationTable& table, std::span<const std::string> set) {
  std::vector<std::string> ordered(set.begin(), set.end());
  std::sort(ordered.begin(), ordered.end(),
            [&](const auto& a, const auto& b) { return table.policy_index(a) < table.policy_index(b); });
  const DistanceMatrix m = build_distance_matrix(table, ordered);
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return inter_policy_diversity(m, all);
}

/// Wasserstein-1 distance between two trajectory sets from one scenario, each
/// carrying uniform mass, with the mean Euclidean trajectory distance as the
/// ground cost. Solved exactly.
inline double wasserstein1(std::span<const Trajectory> set_a, std::span<const Trajectory> set_b) {
  if (set_a.empty() || set_b.empty()) throw Error(ErrorCode::kInvalidInput, "wasserstein1 of an empty set");
  CostMatrix cost(set_a.size(), set_b.size());
  for (std::size_t i = 0; i < set_a.size(); ++i)
    for (std::size_t j = 0; j < set_b.size(); ++j) cost(i, j) = trajectory_distance(set_a[i], set_b[j]);
  return uniform_transport_cost(cost);
}

/// Reference trajectories keyed by scenario id.
using ReferenceSets = std::map<std::string, std::vector<Trajectory>>;

/// Per-scenario optimal-transport distance between the successful
/// trajectories of `set` and the scenario's references, averaged over every
/// scenario of the table. Lower is better.
inline double overall_diversity(const EvaluationTable& table, std::span<const std::string> set,
                                const ReferenceSets& refs, std::vector<double>* per_scenario = nullptr) {
  if (table.scenarios().empty()) throw Error(ErrorCode::kInvalidInput, "no scenarios");
  std::vector<std::size_t> idx;
  for (const auto& id : set) idx.push_back(table.policy_index(id));
  std::sort(idx.begin(), idx.end());
  double sum = 0.0;
  if (per_scenario) per_scenario->clear();
  for (std::size_t s = 0; s < table.scenarios().size(); ++s) {
    const std::string& sid = table.scenarios()[s];
    std::vector<Trajectory> winners;
    for (std::size_t p : idx)
      if (table.succeeded(s, p)) winners.push_back(table.cell(s, p).trajectory);
    if (winners.empty())
      throw Error(ErrorCode::kEmptySuccessSet, "no policy of the set succeeded in scenario " + sid);
    const auto it = refs.find(sid);
    if (it == refs.end() || it->second.empty())
      throw Error(ErrorCode::kInvalidInput, "no reference trajectories for scenario " + sid);
    const double w = wasserstein1(winners, it->second);
    if (per_scenario) per_scenario->push_back(w);
    sum += w;
  }
  return sum / static_cast<double>(table.scenarios().size());
}

}  // namespace divdrive
