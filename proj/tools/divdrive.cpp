// divdrive command line: training, evaluation, diversity metrics, policy
// selection, reference generation and plotting over one experiment config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "divdrive/harness/pipeline.hpp"
#include "divdrive/harness/plot.hpp"

namespace fs = std::filesystem;
using namespace divdrive;
using namespace divdrive::harness;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return 2;
    case ErrorCode::kNoCandidates:
    case ErrorCode::kInfeasibleReference: return 3;
    default: return 1;
  }
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

struct Opened {
  ExperimentConfig cfg;
  std::unique_ptr<ArtifactStore> store;
};

Opened open(const std::string& config_path) {
  Opened o;
  o.cfg = load_config(config_path);
  o.store = std::make_unique<ArtifactStore>(o.cfg.output_dir, config_hash(o.cfg));
  return o;
}

EvaluationRun evaluate_all(const Opened& o) {
  std::vector<fs::path> files = stored_snapshots(*o.store);
  if (files.empty()) throw Error(ErrorCode::kNoCandidates, "no snapshots in " + o.store->path("snapshots").string());
  return evaluate_store(o.cfg, *o.store, files, log_line);
}

std::vector<std::string> split_ids(const std::string& list) {
  std::vector<std::string> out;
  for (auto f : text::split(list, ','))
    if (!text::trim(f).empty()) out.emplace_back(text::trim(f));
  return out;
}

int cmd_simulate(const std::string& scenario_path, const std::string& policy, const std::string& record,
                 const std::string& seed_override, std::uint64_t random_seed) {
  sim::Scenario sc = sim::load_scenario(scenario_path);
  if (!seed_override.empty()) sc.seed = static_cast<std::uint64_t>(text::parse_int(seed_override));
  sim::ActionPolicy act;
  std::string policy_id = policy;
  if (policy == "random") {
    act = sim::uniform_random_policy(random_seed);
  } else if (policy.rfind("action:", 0) == 0) {
    const sim::Action a = sim::action_from_index(static_cast<int>(text::parse_int(policy.substr(7))));
    act = [a](const sim::Observation&) { return a; };
  } else {
    learning::PolicySnapshot snap = learning::load_snapshot(policy);
    policy_id = snap.id();
    act = learning::as_policy(snap.network);
  }
  const sim::EpisodeResult res = sim::run_episode(sc, act, policy_id);
  if (!record.empty()) {
    std::ofstream out(record);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + record);
    write_header(out, {{"scenario", sc.id}, {"seed", std::to_string(sc.seed)}});
    write_episode(out, res.log);
  }
  std::cout << sc.id << ' ' << to_string(res.outcome) << " steps=" << res.steps
            << " reward=" << text::format_double(res.total_reward) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diverse driving policy training, evaluation and selection"};
  app.require_subcommand(1);
  std::string config;

  auto* train = app.add_subcommand("train", "train the configured sessions and store snapshots");
  auto* evaluate = app.add_subcommand("evaluate", "run stored snapshots over the evaluation scenarios");
  auto* metrics = app.add_subcommand("metrics", "Suc./O.A./I.P. of a policy set");
  auto* select = app.add_subcommand("select", "select diverse policies from the evaluated pool");
  auto* refgen = app.add_subcommand("refgen", "generate the reference trajectory sets");
  auto* pipeline = app.add_subcommand("pipeline", "train, evaluate, select and report");
  auto* plot = app.add_subcommand("plot", "plot the selected policies' trajectories");
  auto* simulate = app.add_subcommand("simulate", "run one episode of a scenario");

  for (auto* sub : {train, evaluate, metrics, select, refgen, pipeline, plot})
    sub->add_option("-c,--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::vector<std::string> snapshot_files;
  evaluate->add_option("--snapshot", snapshot_files, "snapshot files (default: all stored)");

  std::string policies, selection_file;
  metrics->add_option("--policies", policies, "comma-separated policy ids");
  metrics->add_option("--selection", selection_file, "selection report (default: selection.txt in the output)");

  std::string method = "diverse";
  std::uint64_t select_seed = 0;
  bool has_seed = false;
  select->add_option("--method", method, "diverse or random")->check(CLI::IsMember({"diverse", "random"}));
  select->add_option("--seed", select_seed, "selection seed")->each([&](const std::string&) { has_seed = true; });

  plot->add_option("--selection", selection_file, "selection report (default: selection.txt in the output)");

  std::string scenario, policy = "random", record, seed_override;
  std::uint64_t random_seed = 0;
  simulate->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--policy", policy, "snapshot file, 'random', or 'action:<index>'");
  simulate->add_option("--record", record, "write the trajectory log here");
  simulate->add_option("--seed-override", seed_override, "replace the scenario seed");
  simulate->add_option("--random-seed", random_seed, "seed of the random policy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(scenario, policy, record, seed_override, random_seed);

    Opened o = open(config);
    std::cerr << "config " << o.store->hash() << " -> " << o.store->root().string() << '\n';

    if (*train) {
      const TrainStage stage = cmd_train(o.cfg, *o.store, log_line);
      std::cout << stage.snapshot_files.size() << " snapshots in " << o.store->path("snapshots").string() << '\n';
      for (const auto& s : stage.sessions)
        if (s.failed) return 1;
    } else if (*evaluate) {
      std::vector<fs::path> files;
      for (const auto& f : snapshot_files) files.emplace_back(fs::absolute(f));
      if (files.empty()) files = stored_snapshots(*o.store);
      const EvaluationRun run = evaluate_store(o.cfg, *o.store, files, log_line);
      std::cout << evaluation_report(run);
    } else if (*refgen) {
      const ReferenceStage stage = cmd_refgen(o.cfg, *o.store, log_line);
      std::size_t total = 0;
      for (const auto& [_, v] : stage.sets) total += v.size();
      std::cout << total << " reference trajectories over " << stage.sets.size() << " scenarios\n";
    } else if (*select) {
      const EvaluationRun run = evaluate_all(o);
      const CandidatePool pool = filtered_pool(candidate_pool(run), o.cfg.delta);
      const std::uint64_t seed = has_seed ? select_seed : repetition_seed(o.cfg.seed, 0);
      if (o.cfg.k > pool.size())
        std::cerr << "warning: k=" << o.cfg.k << " exceeds the filtered pool of " << pool.size()
                  << "; selecting the entire pool\n";
      const Selection sel = method == "diverse" ? select_diverse(pool, o.cfg.k, seed) : select_random(pool, o.cfg.k, seed);
      const std::string report = selection_report(pool, sel, method == "diverse" ? "PolicySelect" : "RandomSelect", seed);
      o.store->write_text(method == "diverse" ? "selection.txt" : "selection_random.txt", report);
      std::cout << report;
    } else if (*metrics) {
      std::vector<std::string> ids = split_ids(policies);
      if (ids.empty()) {
        const fs::path sel = selection_file.empty() ? o.store->path("selection.txt") : fs::absolute(selection_file);
        ids = parse_selection_report(o.store->read_text(sel));
      }
      const EvaluationRun run = evaluate_all(o);
      const ReferenceStage refs = cmd_refgen(o.cfg, *o.store, log_line);
      const CandidatePool pool = candidate_pool(run);
      std::vector<std::size_t> picks;
      for (const auto& id : ids) picks.push_back(run.table.policy_index(id));
      const SetMetrics m = set_metrics(run.table, pool, picks, &refs.sets);
      std::cout << "policies," << ids.size() << "\nSuc.," << text::format_double(m.success) << "\nO.A.,"
                << text::format_double(m.overall) << "\nI.P.," << text::format_double(m.inter_policy) << '\n';
      for (const auto& n : m.notes) std::cerr << "note: " << n << '\n';
    } else if (*pipeline) {
      const PipelineResult res = cmd_pipeline(o.cfg, *o.store, log_line);
      std::cout << o.store->read_text("metrics.txt");
    } else if (*plot) {
      const fs::path sel = selection_file.empty() ? o.store->path("selection.txt") : fs::absolute(selection_file);
      const std::vector<std::string> ids = parse_selection_report(o.store->read_text(sel));
      std::map<std::string, std::string> hashes;
      for (const auto& e : parse_evaluation_report(o.store->read_text("evaluation.txt"))) hashes[e.policy_id] = e.snapshot_hash;
      const auto suite = o.cfg.evaluation_suite();
      std::map<std::string, std::vector<EpisodeLog>> by_scenario;
      for (const auto& sc : suite) by_scenario[sc.id];
      for (const auto& id : ids) {
        const auto it = hashes.find(id);
        if (it == hashes.end()) {
          std::cerr << "missing evaluation for " << id << "; skipped\n";
          continue;
        }
        const auto eps = cached_episodes(*o.store, it->second, id, suite);
        if (eps.size() != suite.size()) std::cerr << "missing logs for " << id << " in " << suite.size() - eps.size() << " scenarios\n";
        for (const auto& ep : eps) by_scenario[ep.scenario_id].push_back(ep);
      }
      for (const auto& [sid, eps] : by_scenario) {
        const PlotFiles files = plot_scenario(sid, eps);
        o.store->write_text(fs::path("plots") / (sid + ".csv"), files.data_csv);
        const std::string stamp = "<!-- config=" + o.store->hash() + " -->\n";
        std::ofstream(o.store->path(fs::path("plots") / (sid + "-xy.svg"))) << stamp << files.overlay_svg;
        std::ofstream(o.store->path(fs::path("plots") / (sid + "-speed.svg"))) << stamp << files.speed_svg;
      }
      std::cout << by_scenario.size() << " scenario plots in " << o.store->path("plots").string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
