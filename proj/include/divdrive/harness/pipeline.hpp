#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "divdrive/diversity.hpp"
#include "divdrive/harness/artifacts.hpp"
#include "divdrive/harness/config.hpp"
#include "divdrive/harness/evaluate.hpp"
#include "divdrive/learning/trainer.hpp"
#include "divdrive/refgen/reference.hpp"
#include "divdrive/selection.hpp"

namespace divdrive::harness {

using Logger = std::function<void(const std::string&)>;

inline void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

// ---- training -------------------------------------------------------------

struct TrainStage {
  std::vector<fs::path> snapshot_files;  // relative to the store root
  std::vector<learning::SessionReport> sessions;
  bool reused = false;
};

inline std::string training_report(const std::vector<learning::SessionReport>& sessions) {
  std::ostringstream out;
  out << "session,steps,episodes,goals,intrinsic_steps,intrinsic_violations,intrinsic_bonus_sum,failed,diagnostic\n";
  for (const auto& r : sessions)
    out << r.session << ',' << r.steps << ',' << r.episodes << ',' << r.goals << ',' << r.intrinsic_steps << ','
        << r.intrinsic_violations << ',' << text::format_double(r.intrinsic_bonus_sum) << ',' << (r.failed ? 1 : 0)
        << ',' << r.diagnostic << '\n';
  return out.str();
}

/// Trains the configured sessions and stores every snapshot. A completed
/// earlier run in the same store (recorded in snapshots/index.txt) is reused.
inline TrainStage cmd_train(const ExperimentConfig& cfg, const ArtifactStore& store, const Logger& log = {}) {
  TrainStage stage;
  const fs::path index = "snapshots/index.txt";
  if (store.exists(index)) {
    std::istringstream in(store.read_text(index));
    std::string line;
    while (std::getline(in, line)) {
      const auto t = text::trim(line);
      if (!t.empty() && t.front() != '#') stage.snapshot_files.push_back(fs::path("snapshots") / std::string(t));
    }
    stage.reused = true;
    say(log, "training: reusing " + std::to_string(stage.snapshot_files.size()) + " stored snapshots");
    return stage;
  }
  const std::int64_t report_every = std::max<std::int64_t>(cfg.trainer.snapshot_interval, 1);
  learning::TrainResult result = learning::train_sessions(
      cfg.trainer, cfg.scenario, cfg.sessions, cfg.dde, store.hash(),
      [&](std::int64_t step, const std::vector<learning::SessionReport>& reports) {
        if (step % report_every != 0) return;
        std::ostringstream msg;
        msg << "training: step " << step;
        for (const auto& r : reports) msg << " | s" << r.session << " ep=" << r.episodes << " goals=" << r.goals;
        say(log, msg.str());
      });
  std::ostringstream listing;
  for (const auto& snap : result.snapshots) {
    const fs::path name = snap.id() + ".snap";
    store.write_snapshot(fs::path("snapshots") / name, snap);
    stage.snapshot_files.push_back(fs::path("snapshots") / name);
    listing << name.string() << '\n';
  }
  for (const auto& r : result.sessions)
    if (r.failed) say(log, "training: " + r.diagnostic);
  store.write_text("training.txt", training_report(result.sessions));
  store.write_text(index, listing.str());
  stage.sessions = std::move(result.sessions);
  return stage;
}

/// All snapshot files currently in the store's snapshot directory.
inline std::vector<fs::path> stored_snapshots(const ArtifactStore& store) {
  std::vector<fs::path> out;
  if (!store.exists("snapshots")) return out;
  for (const auto& e : fs::directory_iterator(store.path("snapshots")))
    if (e.path().extension() == ".snap") out.push_back(fs::path("snapshots") / e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

// ---- evaluation summary ---------------------------------------------------

inline std::string evaluation_report(const EvaluationRun& run) {
  std::ostringstream out;
  out << "policy_id,session_id,training_step,driving_score,snapshot_hash\n";
  for (const auto& s : run.snapshots)
    out << s.id() << ',' << s.session_id << ',' << s.training_step << ',' << text::format_double(s.driving_score)
        << ',' << learning::snapshot_hash(s) << '\n';
  for (const auto& skip : run.skipped) out << "# skipped " << skip << '\n';
  return out.str();
}

struct EvaluationIndexEntry {
  std::string policy_id;
  std::int64_t session_id = 0;
  std::int64_t training_step = 0;
  double driving_score = 0.0;
  std::string snapshot_hash;
};

inline std::vector<EvaluationIndexEntry> parse_evaluation_report(const std::string& body) {
  std::vector<EvaluationIndexEntry> out;
  std::istringstream in(body);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto f = text::split(t, ',');
    if (f.size() != 5) throw Error(ErrorCode::kCorrupt, "evaluation report: bad row '" + std::string(t) + "'");
    out.push_back({std::string(f[0]), text::parse_int(f[1]), text::parse_int(f[2]), text::parse_double(f[3]),
                   std::string(f[4])});
  }
  return out;
}

// ---- references -----------------------------------------------------------

struct ReferenceStage {
  ReferenceSets sets;
  std::size_t attempts = 0;
  std::size_t curvature_flags = 0;
  std::vector<std::string> short_sets;  // scenarios with fewer than the requested count
};

inline fs::path reference_path(const std::string& scenario_id) { return fs::path("references") / (scenario_id + ".log"); }

/// Generates (or reloads) the reference set of every evaluation scenario.
inline ReferenceStage cmd_refgen(const ExperimentConfig& cfg, const ArtifactStore& store, const Logger& log = {}) {
  ReferenceStage stage;
  const refgen::CoreTrajectory core = cfg.core_trajectory();
  for (const sim::Scenario& sc : cfg.evaluation_suite()) {
    const fs::path rel = reference_path(sc.id);
    std::vector<Trajectory> trajs;
    if (store.exists(rel)) {
      std::istringstream in(store.read_text(rel));
      for (const auto& ep : read_log(in).episodes) trajs.push_back(ep.trajectory());
    } else {
      refgen::ReferenceSet set = refgen::generate_reference_set(sc, core, cfg.bridge, cfg.pcontrol, cfg.reference_count);
      stage.attempts += set.attempts;
      stage.curvature_flags += set.curvature_flags;
      std::ostringstream body;
      write_header(body, {{"attempts", std::to_string(set.attempts)},
                          {"accepted", std::to_string(set.trajectories.size())},
                          {"curvature_flags", std::to_string(set.curvature_flags)}});
      for (std::size_t i = 0; i < set.trajectories.size(); ++i) {
        const Trajectory& t = set.trajectories[i];
        EpisodeLog ep;
        ep.scenario_id = sc.id;
        ep.policy_id = "ref-" + std::to_string(i);
        for (std::size_t k = 0; k < t.size(); ++k) {
          StepRecord r;
          r.x = t[k].x;
          r.y = t[k].y;
          if (!t.speeds().empty()) r.v = t.speeds()[k];
          if (!t.headings().empty()) r.theta = t.headings()[k];
          ep.steps.push_back(r);
        }
        ep.outcome = Outcome::kGoal;
        ep.step_count = static_cast<std::int64_t>(t.size()) - 1;
        write_episode(body, ep);
      }
      store.write_text(rel, body.str());
      trajs = std::move(set.trajectories);
    }
    if (trajs.size() < cfg.reference_count) stage.short_sets.push_back(sc.id);
    stage.sets[sc.id] = std::move(trajs);
  }
  say(log, "references: " + std::to_string(stage.sets.size()) + " scenarios, " +
               std::to_string(stage.short_sets.size()) + " below the requested count");
  return stage;
}

// ---- selection and metrics ------------------------------------------------

/// Candidate pool of every evaluated snapshot, ordered by policy id.
inline CandidatePool candidate_pool(const EvaluationRun& run) {
  CandidatePool pool;
  for (const auto& s : run.snapshots) pool.candidates.push_back({s.id(), s.session_id, s.training_step, s.driving_score});
  pool.distances = build_distance_matrix(run.table, run.table.policies());
  return pool;
}

inline std::string score_histogram(const CandidatePool& pool) {
  std::array<int, 11> bins{};
  for (const auto& c : pool.candidates) bins[static_cast<std::size_t>(std::floor(std::clamp(c.driving_score, 0.0, 1.0) * 10.0))]++;
  std::ostringstream out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (b) out << ' ';
    out << (b == 10 ? "1.0" : "[" + text::format_double(b / 10.0) + "," + text::format_double((b + 1) / 10.0) + ")")
        << ':' << bins[b];
  }
  return out.str();
}

/// Filters by driving score, rejecting an empty result with the score
/// histogram in the message.
inline CandidatePool filtered_pool(const CandidatePool& pool, double delta) {
  CandidatePool out = filter_by_score(pool, delta);
  if (out.size() == 0)
    throw Error(ErrorCode::kNoCandidates, "no candidate reaches driving score " + text::format_double(delta) +
                                              " (of " + std::to_string(pool.size()) + "); scores " +
                                              score_histogram(pool));
  return out;
}

inline std::string selection_report(const CandidatePool& pool, const Selection& sel, const std::string& method,
                                    std::uint64_t seed) {
  std::ostringstream out;
  out << "# method=" << method << "\n# seed=" << seed << "\n# pool=" << pool.size() << "\n# selected="
      << sel.picks.size() << "\n# truncated=" << (sel.truncated ? 1 : 0) << '\n';
  for (std::size_t c : sel.disconnected) out << "# disconnected=" << pool.candidates[c].policy_id << '\n';
  out << "rank,policy_id,session_id,training_step,driving_score,min_dist_at_selection\n";
  for (const auto& p : sel.picks) {
    const Candidate& c = pool.candidates[p.pool_index];
    out << p.rank << ',' << c.policy_id << ',' << c.session_id << ',' << c.training_step << ','
        << text::format_double(c.driving_score) << ',' << text::format_double(p.min_distance) << '\n';
  }
  return out.str();
}

/// Policy ids listed in a selection report, in rank order.
inline std::vector<std::string> parse_selection_report(const std::string& body) {
  std::vector<std::string> ids;
  std::istringstream in(body);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto f = text::split(t, ',');
    if (f.size() != 6) throw Error(ErrorCode::kCorrupt, "selection report: bad row '" + std::string(t) + "'");
    ids.emplace_back(f[1]);
  }
  return ids;
}

struct SetMetrics {
  double success = std::numeric_limits<double>::quiet_NaN();  // mean driving score
  double overall = std::numeric_limits<double>::quiet_NaN();
  double inter_policy = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> notes;
};

/// Suc., O.A. and I.P. of a set of pool members. Undefined values stay NaN
/// and the reason goes to `notes`.
inline SetMetrics set_metrics(const EvaluationTable& table, const CandidatePool& pool,
                              const std::vector<std::size_t>& picks, const ReferenceSets* refs) {
  SetMetrics m;
  if (picks.empty()) return m;
  std::vector<std::string> ids;
  double score = 0.0;
  for (std::size_t i : picks) {
    ids.push_back(pool.candidates[i].policy_id);
    score += pool.candidates[i].driving_score;
  }
  m.success = score / static_cast<double>(picks.size());
  try {
    m.inter_policy = inter_policy_diversity(pool.distances, picks);
  } catch (const Error& e) {
    m.notes.push_back(std::string("I.P.: ") + e.what());
  }
  if (refs) {
    try {
      m.overall = overall_diversity(table, ids, *refs);
    } catch (const Error& e) {
      m.notes.push_back(std::string("O.A.: ") + e.what());
    }
  }
  return m;
}

struct Repetition {
  std::uint64_t seed = 0;
  Selection diverse;
  Selection random;
  SetMetrics diverse_metrics;
  SetMetrics random_metrics;
};

struct PipelineResult {
  std::string config_hash;
  std::size_t candidates = 0;
  CandidatePool pool;  // filtered
  std::vector<Repetition> repetitions;
  std::size_t ip_wins = 0;  // repetitions where PolicySelect's I.P. >= RandomSelect's
  std::vector<std::string> warnings;
};

inline std::uint64_t repetition_seed(std::uint64_t seed, std::size_t r) { return mix_seed(seed, 1000 + r); }

/// Paired PolicySelect / RandomSelect runs on the filtered pool.
inline PipelineResult compare_selections(const ExperimentConfig& cfg, const EvaluationRun& run,
                                         const ReferenceSets* refs) {
  PipelineResult res;
  const CandidatePool all = candidate_pool(run);
  res.candidates = all.size();
  res.pool = filtered_pool(all, cfg.delta);
  if (cfg.k > res.pool.size())
    res.warnings.push_back("k=" + std::to_string(cfg.k) + " exceeds the filtered pool of " +
                           std::to_string(res.pool.size()) + "; selecting the entire pool");
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    Repetition rep;
    rep.seed = repetition_seed(cfg.seed, r);
    rep.diverse = select_diverse(res.pool, cfg.k, rep.seed);
    rep.random = select_random(res.pool, cfg.k, rep.seed);
    rep.diverse_metrics = set_metrics(run.table, res.pool, rep.diverse.indices(), refs);
    rep.random_metrics = set_metrics(run.table, res.pool, rep.random.indices(), refs);
    if (rep.diverse_metrics.inter_policy >= rep.random_metrics.inter_policy) ++res.ip_wins;
    res.repetitions.push_back(std::move(rep));
  }
  return res;
}

inline std::string metrics_report(const PipelineResult& res) {
  std::ostringstream out;
  out << "# candidates=" << res.candidates << "\n# filtered=" << res.pool.size()
      << "\n# repetitions=" << res.repetitions.size() << "\n# ip_wins=" << res.ip_wins << '/'
      << res.repetitions.size() << '\n';
  for (const auto& w : res.warnings) out << "# warning=" << w << '\n';
  out << "method,repetition,seed,selected,Suc.,O.A.,I.P.\n";
  auto row = [&](const char* method, std::size_t r, const Repetition& rep, const Selection& sel, const SetMetrics& m) {
    out << method << ',' << r << ',' << rep.seed << ',' << sel.picks.size() << ',' << text::format_double(m.success)
        << ',' << text::format_double(m.overall) << ',' << text::format_double(m.inter_policy) << '\n';
  };
  for (std::size_t r = 0; r < res.repetitions.size(); ++r) {
    row("PolicySelect", r, res.repetitions[r], res.repetitions[r].diverse, res.repetitions[r].diverse_metrics);
    row("RandomSelect", r, res.repetitions[r], res.repetitions[r].random, res.repetitions[r].random_metrics);
  }
  auto mean_of = [&](bool diverse, double SetMetrics::*field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& rep : res.repetitions) {
      const double v = (diverse ? rep.diverse_metrics : rep.random_metrics).*field;
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
    return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  };
  for (bool diverse : {true, false}) {
    out << "# mean " << (diverse ? "PolicySelect" : "RandomSelect") << " Suc.="
        << text::format_double(mean_of(diverse, &SetMetrics::success))
        << " O.A.=" << text::format_double(mean_of(diverse, &SetMetrics::overall))
        << " I.P.=" << text::format_double(mean_of(diverse, &SetMetrics::inter_policy)) << '\n';
  }
  for (std::size_t r = 0; r < res.repetitions.size(); ++r) {
    for (const auto& n : res.repetitions[r].diverse_metrics.notes) out << "# note PolicySelect " << r << ": " << n << '\n';
    for (const auto& n : res.repetitions[r].random_metrics.notes) out << "# note RandomSelect " << r << ": " << n << '\n';
  }
  return out.str();
}

inline std::string distance_report(const DistanceMatrix& m) {
  std::ostringstream out;
  out << "policy_a,policy_b,distance,shared\n";
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = a + 1; b < m.size(); ++b)
      out << m.ids()[a] << ',' << m.ids()[b] << ',' << text::format_double(m(a, b)) << ',' << m.shared(a, b) << '\n';
  return out.str();
}

/// Loads the evaluation of every stored snapshot (running what is missing)
/// and records the summary.
inline EvaluationRun evaluate_store(const ExperimentConfig& cfg, const ArtifactStore& store,
                                    const std::vector<fs::path>& files, const Logger& log = {}) {
  EvaluationRun run = cmd_evaluate(store, cfg.evaluation_suite(), files, cfg.threads);
  say(log, "evaluation: " + std::to_string(run.snapshots.size()) + " snapshots, " + std::to_string(run.episodes_run) +
               " episodes run, " + std::to_string(run.cache_hits) + " cached");
  for (const auto& s : run.skipped) say(log, "evaluation: skipped " + s);
  store.write_text("evaluation.txt", evaluation_report(run));
  return run;
}

/// Train, evaluate, generate references, select and report.
inline PipelineResult cmd_pipeline(const ExperimentConfig& cfg, const ArtifactStore& store, const Logger& log = {}) {
  const TrainStage trained = cmd_train(cfg, store, log);
  const EvaluationRun run = evaluate_store(cfg, store, trained.snapshot_files, log);
  const ReferenceStage refs = cmd_refgen(cfg, store, log);
  PipelineResult res = compare_selections(cfg, run, &refs.sets);
  res.config_hash = store.hash();
  for (const auto& w : res.warnings) say(log, "warning: " + w);
  const Repetition& first = res.repetitions.front();
  store.write_text("selection.txt", selection_report(res.pool, first.diverse, "PolicySelect", first.seed));
  store.write_text("selection_random.txt", selection_report(res.pool, first.random, "RandomSelect", first.seed));
  store.write_text("distances.csv", distance_report(res.pool.distances));
  store.write_text("metrics.txt", metrics_report(res));
  return res;
}

}  // namespace divdrive::harness
