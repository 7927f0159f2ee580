#pragma once

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "divdrive/diversity.hpp"
#include "divdrive/harness/artifacts.hpp"
#include "divdrive/learning/snapshot.hpp"
#include "divdrive/sim/episode.hpp"

namespace divdrive::harness {

struct EvaluationRun {
  EvaluationTable table;
  std::vector<learning::PolicySnapshot> snapshots;  // same order as table.policies(), scores filled in
  std::size_t episodes_run = 0;
  std::size_t cache_hits = 0;
  std::vector<std::string> skipped;  // "<file>: <reason>"
};

/// Cache location of one (snapshot, scenario) episode.
inline fs::path episode_cache_path(const std::string& snapshot_hash, const std::string& scenario_id) {
  return fs::path("eval") / snapshot_hash / (scenario_id + ".log");
}

/// Reads a cached episode; nullopt when absent or unusable.
inline std::optional<EpisodeLog> read_cached_episode(const ArtifactStore& store, const fs::path& rel,
                                                     const std::string& scenario_id, const std::string& policy_id) {
  if (!store.exists(rel)) return std::nullopt;
  try {
    std::istringstream in(store.read_text(rel));
    LogFile log = read_log(in);
    if (log.episodes.size() != 1) return std::nullopt;
    EpisodeLog& ep = log.episodes.front();
    if (ep.scenario_id != scenario_id || ep.policy_id != policy_id || ep.steps.empty()) return std::nullopt;
    return std::move(ep);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::string episode_text(const EpisodeLog& ep) {
  std::ostringstream out;
  write_episode(out, ep);
  return out.str();
}

/// Runs every loadable snapshot on every scenario of the suite, reusing
/// episodes already cached in the store. Unloadable snapshot files are
/// skipped and listed in the result.
inline EvaluationRun cmd_evaluate(const ArtifactStore& store, const std::vector<sim::Scenario>& suite,
                                  const std::vector<fs::path>& snapshot_files, std::size_t threads = 1) {
  std::vector<learning::PolicySnapshot> loaded;
  std::vector<std::string> hashes;
  std::set<std::string> seen;
  EvaluationRun run;
  for (const fs::path& file : snapshot_files) {
    try {
      learning::PolicySnapshot snap = store.read_snapshot(file);
      if (!seen.insert(snap.id()).second) {
        run.skipped.push_back(file.string() + ": duplicate policy id " + snap.id());
        continue;
      }
      loaded.push_back(std::move(snap));
    } catch (const Error& e) {
      run.skipped.push_back(file.string() + ": " + e.what());
    }
  }
  std::sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
  for (const auto& s : loaded) hashes.push_back(learning::snapshot_hash(s));

  std::vector<std::string> scenario_ids, policy_ids;
  for (const auto& sc : suite) scenario_ids.push_back(sc.id);
  for (const auto& s : loaded) policy_ids.push_back(s.id());
  run.table = EvaluationTable(scenario_ids, policy_ids);

  std::vector<std::vector<EpisodeLog>> episodes(loaded.size());
  std::vector<std::size_t> ran(loaded.size(), 0), hits(loaded.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t p = next++; p < loaded.size(); p = next++) {
      const sim::ActionPolicy policy = learning::as_policy(loaded[p].network);
      for (const sim::Scenario& sc : suite) {
        const fs::path rel = episode_cache_path(hashes[p], sc.id);
        if (auto cached = read_cached_episode(store, rel, sc.id, policy_ids[p])) {
          episodes[p].push_back(std::move(*cached));
          ++hits[p];
          continue;
        }
        sim::EpisodeResult res = sim::run_episode(sc, policy, policy_ids[p]);
        store.write_text(rel, episode_text(res.log));
        episodes[p].push_back(std::move(res.log));
        ++ran[p];
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, loaded.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t p = 0; p < loaded.size(); ++p) {
    for (std::size_t s = 0; s < suite.size(); ++s)
      run.table.set(s, p, episodes[p][s].outcome, episodes[p][s].trajectory());
    loaded[p].driving_score = run.table.driving_score(p);
    run.episodes_run += ran[p];
    run.cache_hits += hits[p];
  }
  run.snapshots = std::move(loaded);
  return run;
}

/// Loads the cached episodes of the named policies (for plotting).
inline std::vector<EpisodeLog> cached_episodes(const ArtifactStore& store, const std::string& snapshot_hash,
                                               const std::string& policy_id, const std::vector<sim::Scenario>& suite) {
  std::vector<EpisodeLog> out;
  for (const auto& sc : suite)
    if (auto ep = read_cached_episode(store, episode_cache_path(snapshot_hash, sc.id), sc.id, policy_id))
      out.push_back(std::move(*ep));
  return out;
}

}  // namespace divdrive::harness
