// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--work DIR] [criterion ...]
//
// With no criteria every one of 1..11 runs. Training artifacts go to DIR
// (a fresh temporary directory by default, removed afterwards).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "divdrive/diversity.hpp"
#include "divdrive/harness/pipeline.hpp"
#include "divdrive/refgen/reference.hpp"
#include "divdrive/selection.hpp"
#include "divdrive/sim/episode.hpp"
#include "../oracles.hpp"

namespace fs = std::filesystem;
using namespace divdrive;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

bool close_rel(double got, double want, double rel) {
  if (want == 0.0) return std::abs(got) <= 1e-15;
  return std::abs(got - want) <= rel * std::abs(want);
}

Trajectory line(std::vector<Vec2> pts) { return Trajectory(std::move(pts)); }

Trajectory offset_line(double dy, std::size_t n = 5) {
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({static_cast<double>(i), dy});
  return Trajectory(std::move(pts));
}

EvaluationTable offsets_table(const std::vector<std::vector<double>>& offsets,
                              const std::vector<std::vector<bool>>& success) {
  std::vector<std::string> scenarios, policies;
  for (std::size_t s = 0; s < offsets.size(); ++s) scenarios.push_back("s" + std::to_string(s));
  for (std::size_t p = 0; p < offsets.front().size(); ++p) policies.push_back("p" + std::to_string(p));
  EvaluationTable t(scenarios, policies);
  for (std::size_t s = 0; s < offsets.size(); ++s)
    for (std::size_t p = 0; p < offsets[s].size(); ++p)
      t.set(s, p, success[s][p] ? Outcome::kGoal : Outcome::kCollision, offset_line(offsets[s][p]));
  return t;
}

std::vector<std::string> ids_of(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("p" + std::to_string(i));
  return out;
}

Trajectory random_trajectory(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 5.0);
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({g(rng), g(rng)});
  return Trajectory(std::move(pts));
}

harness::ExperimentConfig config(const char* name) {
  return harness::load_config(std::string(DIVDRIVE_DATA_DIR "/configs/") + name);
}

// ---- 1 ----------------------------------------------------------------------

Verdict metric_exactness() {
  const auto t0 = Clock::now();
  struct Fixture {
    const char* name;
    std::function<double()> got;
    double want;
  };
  const std::vector<bool> all2{true, true}, all3{true, true, true}, all4{true, true, true, true};
  const std::vector<Fixture> fixtures = {
      {"offset (3,4)", [] { return trajectory_distance(line({{0, 0}, {1, 0}, {2, 0}}), line({{3, 4}, {4, 4}, {5, 4}})); },
       5.0},
      {"truncated prefix", [] { return trajectory_distance(offset_line(0, 5), offset_line(1, 3)); }, 1.0},
      {"identical", [] { return trajectory_distance(offset_line(2), offset_line(2)); }, 0.0},
      {"mixed offsets", [] { return trajectory_distance(line({{0, 0}, {1, 1}}), line({{1, 0}, {1, 3}})); }, 1.5},
      {"single point", [] { return trajectory_distance(line({{0, 0}}), line({{6, 8}})); }, 10.0},
      {"ramp", [] {
         return trajectory_distance(line({{0, 0}, {1, 0}, {2, 0}, {3, 0}}), line({{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
       }, 1.5},
      {"pairwise two scenarios", [&] { return pairwise_diversity(offsets_table({{0, 2}, {0, 4}}, {all2, all2}), "p0", "p1"); },
       3.0},
      {"pairwise skips unshared", [&] {
         return pairwise_diversity(offsets_table({{0, 2}, {0, 4}, {0, 100}}, {all2, all2, {true, false}}), "p0", "p1");
       }, 3.0},
      {"inter-policy 0,1,3", [&] { return inter_policy_diversity(offsets_table({{0, 1, 3}}, {all3}), ids_of(3)); }, 2.0},
      {"inter-policy 0,1,2,4", [&] {
         return inter_policy_diversity(offsets_table({{0, 1, 2, 4}}, {all4}), ids_of(4));
       }, 13.0 / 6.0},
      {"inter-policy of two", [&] {
         return inter_policy_diversity(offsets_table({{0, 2}, {0, 5}}, {all2, all2}), ids_of(2));
       }, 3.5},
      {"inter-policy partial success", [&] {
         // d01 = (2+4)/2, d02 = 6 (first scenario only), d12 = 4
         return inter_policy_diversity(offsets_table({{0, 2, 6}, {0, 4, 9}}, {all3, {true, true, false}}), ids_of(3));
       }, 13.0 / 3.0},
  };
  std::vector<std::string> bad;
  for (const auto& f : fixtures) {
    const double got = f.got();
    if (!close_rel(got, f.want, 1e-9)) bad.push_back(std::string(f.name) + " got " + fmt(got, 17));
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = bad.empty() && fixtures.size() >= 10 && secs < 1.0;
  v.detail = std::to_string(fixtures.size() - bad.size()) + "/" + std::to_string(fixtures.size()) +
             " fixtures exact, " + fmt(secs, 3) + " s";
  for (const auto& b : bad) v.detail += "; " + b;
  return v;
}

// ---- 2 ----------------------------------------------------------------------

Verdict ot_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t na = 1 + rng() % 5, nb = 1 + rng() % 5;
    std::vector<Trajectory> a, b;
    for (std::size_t i = 0; i < na; ++i) a.push_back(random_trajectory(rng, 3 + rng() % 8));
    for (std::size_t j = 0; j < nb; ++j) b.push_back(random_trajectory(rng, 3 + rng() % 8));
    std::vector<std::vector<double>> cost(na, std::vector<double>(nb));
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) cost[i][j] = oracle::trajectory_distance(
          {a[i].points().begin(), a[i].points().end()}, {b[j].points().begin(), b[j].points().end()});
    const double lp = oracle::uniform_transport_lp(cost);
    worst = std::max(worst, std::abs(wasserstein1(a, b) - lp) / lp);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 30.0,
          "200 instances, worst relative gap " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

// ---- 3 ----------------------------------------------------------------------

CandidatePool pool_from(const std::vector<std::vector<double>>& d) {
  CandidatePool pool;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < d.size(); ++i) {
    ids.push_back("c" + std::to_string(i));
    pool.candidates.push_back({ids.back(), 0, static_cast<std::int64_t>(i), 1.0});
  }
  pool.distances = DistanceMatrix(ids);
  for (std::size_t i = 0; i < d.size(); ++i) {
    pool.distances.set(i, i, 0.0, 1);
    for (std::size_t j = i + 1; j < d.size(); ++j) pool.distances.set(i, j, d[i][j], 1);
  }
  return pool;
}

std::vector<std::vector<double>> random_matrix(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = ties ? static_cast<double>(1 + rng() % 4) : u(rng);
  return d;
}

Verdict fps_oracle() {
  std::mt19937_64 rng(3);
  int matches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 20, k = 1 + rng() % 10;
    const auto d = random_matrix(rng, n, trial % 2 == 0);
    const std::uint64_t seed = rng();
    std::mt19937_64 first(seed);
    const std::vector<std::vector<bool>> conn(n, std::vector<bool>(n, true));
    if (select_diverse(pool_from(d), k, seed).indices() == oracle::greedy_maxmin(d, conn, k, uniform_index(first, n)))
      ++matches;
  }
  // informational: greedy objective against the exhaustive optimum
  double ratio = 0.0, worst = 1.0;
  const int small = 50;
  for (int trial = 0; trial < small; ++trial) {
    const std::size_t n = 3 + rng() % 6, k = 2 + rng() % std::min<std::size_t>(3, n - 1);
    const auto d = random_matrix(rng, n, false);
    const CandidatePool pool = pool_from(d);
    const double greedy = inter_policy_diversity(pool.distances, select_diverse(pool, k, rng()).indices());
    const double r = greedy / oracle::best_subset_mean(d, k);
    ratio += r;
    worst = std::min(worst, r);
  }
  return {matches == 100, std::to_string(matches) + "/100 selections identical to the re-simulation; greedy/optimum " +
                              "on small pools mean " + fmt(ratio / small) + ", worst " + fmt(worst)};
}

// ---- 4 ----------------------------------------------------------------------

Verdict dynamics_and_reward() {
  using namespace sim;
  const auto t0 = Clock::now();
  std::vector<std::string> bad;
  auto check = [&](const char* what, double got, double want) {
    if (std::abs(got - want) > 1e-12) bad.push_back(std::string(what) + " got " + fmt(got, 17));
  };
  VehicleState s{0, 0, 0.3, 1.5, {}};
  for (int i = 0; i < 100; ++i) s = step_dynamics(s, {0.0, 0.0}, kStepSeconds);
  check("straight heading", s.theta, 0.3);
  check("straight x", s.x, 15.0 * std::cos(0.3));
  check("straight y", s.y, 15.0 * std::sin(0.3));

  VehicleState c{};
  for (int i = 0; i < 100; ++i) c = step_dynamics(c, {0.0, 1.0}, kStepSeconds);
  check("speed clamp", c.v, 2.0);

  const VehicleState rest{};
  check("Right steer", apply_action(rest, Action::kRight, kStepSeconds).steer, 0.0628);
  check("Left steer", apply_action(rest, Action::kLeft, kStepSeconds).steer, -0.0628);
  check("Forward accel", apply_action(rest, Action::kForward, kStepSeconds).accel, 0.25);
  check("Backward accel", apply_action(rest, Action::kBackward, kStepSeconds).accel, -0.25);

  const ZoneMap map = parse_map(nlohmann::json::parse(R"({
    "routes": [{"name": "ego", "arrows": [[0, 0, 20, 0]]}],
    "zones": [{"route": "ego", "arrow": 0, "type": "straight", "center": [10, 0], "length": 20, "width": 6}]})"));
  const RewardWeights w{100.0, 300.0, 15.0, 5.0};
  const VehicleState a{5.0, 0.0, 0.0, 1.0, {}}, b{5.1, 0.0, 0.0, 1.0, {}};
  RewardTerms r = compute_reward(map, 0, a, b, false, w);
  check("r_angle at zero angle", r.angle, 0.5 * w.angle);
  check("r_center on the arrow", r.center, 4.5 * w.center);
  r = compute_reward(map, 0, a, b, true, w);
  check("r_collision", r.collision, -w.collision);
  const double secs = seconds_since(t0);
  Verdict v{bad.empty() && secs < 1.0, "13 checks, " + std::to_string(bad.size()) + " off, " + fmt(secs, 3) + " s"};
  for (const auto& m : bad) v.detail += "; " + m;
  return v;
}

// ---- desk pipeline (5 and 8) --------------------------------------------------

struct DeskRun {
  harness::PipelineResult result;
  fs::path dir;
  double seconds = 0.0;
  std::size_t sessions = 0;
};

const char* kReports[] = {"training.txt", "evaluation.txt", "selection.txt", "selection_random.txt",
                          "distances.csv", "metrics.txt"};

DeskRun run_desk(const fs::path& dir) {
  harness::ExperimentConfig cfg = config("desk_right_turn.json");
  cfg.output_dir = dir.string();
  const harness::ArtifactStore store(dir, harness::config_hash(cfg));
  DeskRun run;
  run.dir = dir;
  run.sessions = cfg.sessions;
  const auto t0 = Clock::now();
  run.result = harness::cmd_pipeline(cfg, store, [](const std::string& m) { std::cerr << "  desk: " << m << '\n'; });
  run.seconds = seconds_since(t0);
  return run;
}

std::string file_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- 5 ----------------------------------------------------------------------

Verdict determinism(const DeskRun& first, const fs::path& work) {
  // single-episode replay with a stored snapshot
  const harness::ExperimentConfig cfg = config("desk_right_turn.json");
  const harness::ArtifactStore store(first.dir, harness::config_hash(cfg));
  const auto files = harness::stored_snapshots(store);
  int identical = 0, episodes = 0;
  const auto suite = cfg.evaluation_suite();
  for (std::size_t f = 0; f < files.size(); f += std::max<std::size_t>(1, files.size() / 4)) {
    const learning::PolicySnapshot snap = store.read_snapshot(files[f]);
    for (std::size_t s = 0; s < suite.size(); s += 10) {
      std::ostringstream a, b;
      write_episode(a, sim::run_episode(suite[s], learning::as_policy(snap.network), snap.id()).log);
      write_episode(b, sim::run_episode(suite[s], learning::as_policy(snap.network), snap.id()).log);
      ++episodes;
      if (a.str() == b.str()) ++identical;
    }
  }
  // full pipeline replayed into a second directory
  const DeskRun second = run_desk(work / "desk-replay");
  std::vector<std::string> differ;
  for (const char* r : kReports)
    if (file_text(first.dir / r) != file_text(second.dir / r)) differ.push_back(r);
  Verdict v{episodes > 0 && identical == episodes && differ.empty(),
            std::to_string(identical) + "/" + std::to_string(episodes) + " episode replays byte-identical; " +
                std::to_string(std::size(kReports) - differ.size()) + "/" + std::to_string(std::size(kReports)) +
                " pipeline reports identical on replay"};
  for (const auto& d : differ) v.detail += "; differs: " + d;
  return v;
}

// ---- 6 ----------------------------------------------------------------------

Verdict bridge_statistics() {
  const auto t0 = Clock::now();
  const std::size_t n = 41;
  const double T = 4.0, sigma = 0.7;
  std::mt19937_64 rng(6);
  bool endpoints = true;
  double sum = 0.0, sq = 0.0;
  const int samples = 10000;
  for (int k = 0; k < samples; ++k) {
    const auto b = refgen::brownian_bridge(n, T, sigma, rng);
    endpoints = endpoints && b.front() == 0.0 && b.back() == 0.0;
    sum += b[n / 2];
    sq += b[n / 2] * b[n / 2];
  }
  const double mean = sum / samples;
  const double ratio = (sq / samples - mean * mean) / (sigma * sigma * T / 4.0);
  const double secs = seconds_since(t0);
  return {endpoints && std::abs(ratio - 1.0) <= 0.05 && secs < 10.0,
          std::string("endpoints ") + (endpoints ? "exactly zero" : "NOT zero") + ", midpoint variance / (sigma^2 T/4) = " +
              fmt(ratio) + ", " + fmt(secs, 3) + " s"};
}

// ---- 7 ----------------------------------------------------------------------

Verdict learning_smoke(const fs::path& work) {
  const auto t0 = Clock::now();
  harness::ExperimentConfig cfg = config("straight_lane.json");
  cfg.output_dir = (work / "straight").string();
  const harness::ArtifactStore store(cfg.output_dir, harness::config_hash(cfg));
  const harness::TrainStage trained = harness::cmd_train(cfg, store);
  const harness::EvaluationRun run = harness::evaluate_store(cfg, store, trained.snapshot_files);
  double best = 0.0;
  std::string best_id;
  for (const auto& s : run.snapshots)
    if (s.driving_score > best || best_id.empty()) {
      best = s.driving_score;
      best_id = s.id();
    }
  const auto suite = cfg.evaluation_suite();
  std::size_t goals = 0;
  for (std::size_t i = 0; i < suite.size(); ++i)
    if (sim::run_episode(suite[i], sim::uniform_random_policy(mix_seed(cfg.seed, 700 + i)), "random").outcome ==
        Outcome::kGoal)
      ++goals;
  const double random_score = static_cast<double>(goals) / static_cast<double>(suite.size());
  const double secs = seconds_since(t0);
  return {cfg.trainer.total_steps >= 100000 && best >= random_score + 0.3 && secs <= 1800.0,
          "best snapshot " + best_id + " scores " + fmt(best) + ", uniform random " + fmt(random_score) + " after " +
              std::to_string(cfg.trainer.total_steps) + " steps, " + fmt(secs, 4) + " s"};
}

// ---- 8 ----------------------------------------------------------------------

Verdict selection_ordering(const DeskRun& desk) {
  const auto& r = desk.result;
  std::set<std::int64_t> sessions;
  for (const auto& c : r.pool.candidates) sessions.insert(c.session_id);
  double ip_div = 0.0, ip_rand = 0.0;
  for (const auto& rep : r.repetitions) {
    ip_div += rep.diverse_metrics.inter_policy;
    ip_rand += rep.random_metrics.inter_policy;
  }
  const double reps = static_cast<double>(r.repetitions.size());
  std::string detail = std::to_string(r.candidates) + " candidates from " + std::to_string(desk.sessions) +
                       " sessions, " + std::to_string(r.pool.size()) + " pass the score filter; PolicySelect I.P. >= " +
                       "RandomSelect in " + std::to_string(r.ip_wins) + "/" + std::to_string(r.repetitions.size()) +
                       " (mean " + fmt(ip_div / reps) + " vs " + fmt(ip_rand / reps) + "), " + fmt(desk.seconds, 4) +
                       " s";
  for (const auto& w : r.warnings) detail += "; " + w;
  return {r.candidates >= 40 && desk.sessions >= 4 && r.repetitions.size() == 20 && r.ip_wins >= 18 &&
              desk.seconds <= 7200.0,
          detail};
}

// ---- 9 ----------------------------------------------------------------------

std::vector<Eigen::VectorXd> sampled_observations(const std::vector<sim::Scenario>& suite, std::size_t count) {
  std::vector<Eigen::VectorXd> all;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const sim::ActionPolicy random = sim::uniform_random_policy(mix_seed(91, i));
    const sim::ActionPolicy recording = [&](const sim::Observation& o) {
      all.push_back(learning::encode(o.values));
      return random(o);
    };
    (void)sim::run_episode(suite[i], recording);
  }
  std::mt19937_64 rng(92);
  std::shuffle(all.begin(), all.end(), rng);
  if (all.size() > count) all.resize(count);
  return all;
}

double mean_pairwise_kl(const std::vector<const learning::QNetwork*>& nets, const Eigen::MatrixXd& x, double temp) {
  std::vector<Eigen::MatrixXd> logp;
  for (const auto* n : nets) {
    const Eigen::MatrixXd q = n->forward(x);
    Eigen::MatrixXd lp(q.rows(), q.cols());
    for (Eigen::Index c = 0; c < q.cols(); ++c) lp.col(c) = learning::log_action_distribution(q.col(c), temp);
    logp.push_back(std::move(lp));
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < nets.size(); ++a)
    for (std::size_t b = 0; b < nets.size(); ++b) {
      if (a == b) continue;
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        sum += learning::kl_divergence_log(logp[a].col(c), logp[b].col(c));
      pairs += static_cast<std::size_t>(x.cols());
    }
  return sum / static_cast<double>(pairs);
}

Verdict dde_property(std::int64_t steps) {
  const auto t0 = Clock::now();
  const harness::ExperimentConfig cfg = config("desk_right_turn.json");
  const auto obs = sampled_observations(cfg.evaluation_suite(), 1000);
  Eigen::MatrixXd x(learning::kInputSize, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = obs[i];

  int larger = 0;
  std::int64_t checked = 0, violations = 0;
  std::ostringstream per;
  for (int rep = 0; rep < 10; ++rep) {
    learning::TrainerConfig tc = cfg.trainer;
    tc.total_steps = steps;
    tc.snapshot_interval = steps;
    tc.seed = mix_seed(cfg.seed, 900 + static_cast<std::uint64_t>(rep));
    double kl[2];
    for (int with = 0; with < 2; ++with) {
      tc.dde_alpha = with ? 0.01 : 0.0;
      const learning::TrainResult res = learning::train_sessions(tc, cfg.scenario, 2, true);
      std::vector<const learning::QNetwork*> finals;
      for (const auto& s : res.snapshots) finals.push_back(s.network.get());
      kl[with] = mean_pairwise_kl(finals, x, tc.dde_temperature);
      for (const auto& s : res.sessions) {
        checked += s.intrinsic_steps;
        violations += s.intrinsic_violations;
      }
    }
    if (kl[1] > kl[0]) ++larger;
    per << (rep ? " " : "") << fmt(kl[1], 3) << "/" << fmt(kl[0], 3);
  }
  const double secs = seconds_since(t0);
  return {larger >= 8 && violations == 0 && checked > 0,
          "KL larger with DDE in " + std::to_string(larger) + "/10 (" + std::to_string(steps) +
              " steps per session, with/without: " + per.str() + "); " + std::to_string(violations) +
              " intrinsic-reward violations over " + std::to_string(checked) + " steps, " + fmt(secs, 4) + " s"};
}

// ---- 10 ---------------------------------------------------------------------

Verdict gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0), t(-3.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const learning::QNetwork net = learning::QNetwork::initialized(1000 + static_cast<std::uint64_t>(trial));
    const int n = 4 + trial % 29;
    learning::TdBatch b;
    b.obs = Eigen::MatrixXd::NullaryExpr(learning::kInputSize, n, [&] { return u(rng); });
    for (int i = 0; i < n; ++i) b.actions.push_back(static_cast<int>(rng() % learning::kOutputSize));
    b.targets = Eigen::VectorXd::NullaryExpr(n, [&] { return t(rng); });
    worst = std::max(worst, oracle::td_gradient_mismatch(net, b, rng, 60));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          "50 batches, worst relative mismatch " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

// ---- 11 ---------------------------------------------------------------------

Verdict reference_sanity() {
  const harness::ExperimentConfig cfg = config("desk_right_turn.json");
  const refgen::ReferenceSet set =
      refgen::generate_reference_set(cfg.scenario, cfg.core_trajectory(), cfg.bridge, cfg.pcontrol, 50);
  const std::vector<std::string> ids = ids_of(set.trajectories.size());
  EvaluationTable table({cfg.scenario.id}, ids);
  for (std::size_t p = 0; p < ids.size(); ++p) table.set(0, p, Outcome::kGoal, set.trajectories[p]);
  const double od = overall_diversity(table, ids, {{cfg.scenario.id, set.trajectories}});
  return {set.trajectories.size() == 50 && std::abs(od) <= 1e-9,
          std::to_string(set.trajectories.size()) + " accepted of " + std::to_string(set.attempts) +
              " attempts, overall diversity against itself " + fmt(od, 3)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  fs::path work;
  bool keep = false;
  std::int64_t dde_steps = 20000;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
      keep = true;
    } else if (a == "--dde-steps" && i + 1 < argc) {
      dde_steps = std::stoll(argv[++i]);
    } else {
      wanted.insert(std::stoi(a));
    }
  }
  if (wanted.empty())
    for (int c = 1; c <= 11; ++c) wanted.insert(c);
  if (work.empty()) work = fs::temp_directory_path() / ("divdrive-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(work);

  std::optional<DeskRun> desk;
  auto desk_run = [&]() -> const DeskRun& {
    if (!desk) desk = run_desk(work / "desk");
    return *desk;
  };

  const std::map<int, std::pair<const char*, std::function<Verdict()>>> criteria = {
      {1, {"metric exactness", metric_exactness}},
      {2, {"optimal transport oracle", ot_oracle}},
      {3, {"farthest point selection oracle", fps_oracle}},
      {4, {"dynamics and reward", dynamics_and_reward}},
      {5, {"determinism", [&] { return determinism(desk_run(), work); }}},
      {6, {"bridge statistics", bridge_statistics}},
      {7, {"learning smoke test", [&] { return learning_smoke(work); }}},
      {8, {"selection ordering", [&] { return selection_ordering(desk_run()); }}},
      {9, {"diversity bonus", [&] { return dde_property(dde_steps); }}},
      {10, {"gradient check", gradient_check}},
      {11, {"reference set", reference_sanity}},
  };

  int failed = 0;
  for (int c : wanted) {
    const auto it = criteria.find(c);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << c << '\n';
      return 2;
    }
    Verdict v;
    try {
      v = it->second.second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " C" << c << ' ' << it->second.first << ": " << v.detail << std::endl;
  }
  if (!keep) fs::remove_all(work);
  return failed ? 1 : 0;
}
