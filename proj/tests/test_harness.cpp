#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sys/wait.h>

#include "divdrive/harness/pipeline.hpp"
#include "divdrive/harness/plot.hpp"

namespace fs = std::filesystem;
using namespace divdrive;
using namespace divdrive::harness;

namespace {

const std::string kSmoke = DIVDRIVE_DATA_DIR "/configs/smoke.json";

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("divdrive-test-" + name + "-" + std::to_string(std::random_device{}()));
  fs::remove_all(p);
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidInput;
}

nlohmann::json smoke_json() {
  std::ifstream in(kSmoke);
  return nlohmann::json::parse(in);
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(DIVDRIVE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, LoadsAndHashesStably) {
  const ExperimentConfig a = load_config(kSmoke), b = load_config(kSmoke);
  EXPECT_EQ(a.sessions, 2u);
  EXPECT_EQ(a.k, 3u);
  EXPECT_EQ(a.trainer.total_steps, 4000);
  EXPECT_EQ(a.core.size(), 15u);
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);

  ExperimentConfig c = a;
  c.output_dir = "elsewhere";
  c.threads = 4;
  EXPECT_EQ(config_hash(c), config_hash(a));
  c.delta = 0.5;
  EXPECT_NE(config_hash(c), config_hash(a));
}

TEST(Config, RejectsBadInput) {
  const fs::path base = fs::path(kSmoke).parent_path();
  nlohmann::json j = smoke_json();
  j["selection"]["bogus"] = 1;
  EXPECT_EQ(code_of([&] { (void)parse_config(j, base); }), ErrorCode::kConfig);
  j = smoke_json();
  j["trainer"]["reward_scale"] = 2.0;
  EXPECT_EQ(code_of([&] { (void)parse_config(j, base); }), ErrorCode::kConfig);
  j = smoke_json();
  j["sessions"] = 1;
  EXPECT_EQ(code_of([&] { (void)parse_config(j, base); }), ErrorCode::kConfig);
  j = smoke_json();
  j["selection"]["delta"] = 1.5;
  EXPECT_EQ(code_of([&] { (void)parse_config(j, base); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { (void)load_config("/nonexistent/cfg.json"); }), ErrorCode::kConfig);
}

TEST(Store, RefusesOtherConfigsDirectory) {
  const fs::path dir = scratch_dir("store");
  {
    const ArtifactStore s(dir, "aaaa");
    s.write_text("x/y.txt", "hello\n");
    EXPECT_EQ(s.read_text("x/y.txt"), "# config=aaaa\nhello\n");  // stamped with the config hash
  }
  EXPECT_NO_THROW(ArtifactStore(dir, "aaaa"));
  EXPECT_EQ(code_of([&] { ArtifactStore(dir, "bbbb"); }), ErrorCode::kConfig);
  fs::remove_all(dir);
}

TEST(Pipeline, SmokeRunAndCachedRerun) {
  ExperimentConfig cfg = load_config(kSmoke);
  cfg.output_dir = scratch_dir("smoke").string();
  const ArtifactStore store(cfg.output_dir, config_hash(cfg));

  const PipelineResult res = cmd_pipeline(cfg, store);
  EXPECT_EQ(res.candidates, 2u * 4u);
  EXPECT_EQ(res.pool.size(), res.candidates);  // delta 0 keeps everyone
  ASSERT_EQ(res.repetitions.size(), 3u);
  for (const auto& rep : res.repetitions) {
    EXPECT_EQ(rep.diverse.picks.size(), 3u);
    EXPECT_EQ(rep.random.picks.size(), 3u);
    EXPECT_GE(rep.diverse_metrics.success, 0.0);
    EXPECT_LE(rep.diverse_metrics.success, 1.0);
  }
  for (const char* f : {"selection.txt", "selection_random.txt", "distances.csv", "metrics.txt", "evaluation.txt"})
    EXPECT_TRUE(fs::exists(store.path(f))) << f;

  const auto ids = parse_selection_report(store.read_text("selection.txt"));
  ASSERT_EQ(ids.size(), 3u);
  for (std::size_t i = 0; i < ids.size(); ++i)
    EXPECT_EQ(ids[i], res.pool.candidates[res.repetitions[0].diverse.picks[i].pool_index].policy_id);

  // second run: snapshots reused, every episode served from the cache
  const TrainStage again = cmd_train(cfg, store);
  EXPECT_TRUE(again.reused);
  const EvaluationRun run = evaluate_store(cfg, store, again.snapshot_files);
  EXPECT_EQ(run.episodes_run, 0u);
  EXPECT_EQ(run.cache_hits, 8u * 5u);
  const auto entries = parse_evaluation_report(store.read_text("evaluation.txt"));
  ASSERT_EQ(entries.size(), 8u);
  for (std::size_t i = 0; i < entries.size(); ++i)
    EXPECT_DOUBLE_EQ(entries[i].driving_score, run.snapshots[i].driving_score);

  const PipelineResult rerun = cmd_pipeline(cfg, store);
  EXPECT_EQ(rerun.ip_wins, res.ip_wins);

  // plot data holds every step of every cached episode
  const auto suite = cfg.evaluation_suite();
  const auto eps = cached_episodes(store, entries[0].snapshot_hash, entries[0].policy_id, suite);
  ASSERT_EQ(eps.size(), suite.size());
  const PlotFiles plot = plot_scenario(eps[0].scenario_id, {eps[0]});
  std::istringstream csv(plot.data_csv);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "scenario_id,policy_id,step,time,x,y,v");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    const auto f = text::split(line, ',');
    ASSERT_EQ(f.size(), 7u);
    EXPECT_DOUBLE_EQ(text::parse_double(f[4]), eps[0].steps[rows].x);
    ++rows;
  }
  EXPECT_EQ(rows, eps[0].steps.size());
  EXPECT_NE(plot.overlay_svg.find("<svg"), std::string::npos);
  fs::remove_all(cfg.output_dir);
}

TEST(Pipeline, StrictDeltaReportsEmptyPool) {
  CandidatePool pool;
  pool.candidates = {{"a", 0, 1, 0.2}, {"b", 0, 2, 0.45}};
  EXPECT_EQ(code_of([&] { (void)filtered_pool(pool, 0.9); }), ErrorCode::kNoCandidates);
  try {
    (void)filtered_pool(pool, 0.9);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("[0.4,0.5):1"), std::string::npos) << e.what();
  }
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("simulate --scenario " DIVDRIVE_DATA_DIR "/scenarios/straight_lane.json --policy action:4"), 0);
  EXPECT_NE(run_cli("no-such-command"), 0);
  const fs::path dir = scratch_dir("cli");
  fs::create_directories(dir);
  nlohmann::json j = smoke_json();
  j["scenario"] = DIVDRIVE_DATA_DIR "/scenarios/right_turn.json";
  j["mystery"] = true;
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_EQ(run_cli("train -c " + (dir / "bad.json").string()), 2);
  fs::remove_all(dir);
}
