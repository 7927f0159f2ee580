#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "divdrive/learning/trainer.hpp"
#include "divdrive/refgen/reference.hpp"
#include "divdrive/text_format.hpp"

namespace divdrive::harness {

/// Everything one experiment run depends on. Relative paths in the file are
/// resolved against the file's directory, except `output_dir`, which is taken
/// relative to the working directory (and may be replaced by DIVDRIVE_OUT).
struct ExperimentConfig {
  std::string scenario_path;
  sim::Scenario scenario;
  std::size_t evaluation_count = 50;
  std::uint64_t seed = 1;
  std::string output_dir = "divdrive-out";

  learning::TrainerConfig trainer;
  std::size_t sessions = 4;
  bool dde = true;

  std::size_t k = 10;
  double delta = 0.9;
  std::size_t repetitions = 20;

  std::vector<Vec2> core;
  std::size_t reference_count = 50;
  refgen::BridgeParams bridge;
  refgen::PControlParams pcontrol;

  std::size_t threads = 1;

  void validate() const {
    if (k == 0) throw Error(ErrorCode::kConfig, "selection size k must be at least 1");
    if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorCode::kConfig, "delta must lie in [0, 1]");
    if (evaluation_count == 0) throw Error(ErrorCode::kConfig, "evaluation scenario count must be at least 1");
    if (repetitions == 0) throw Error(ErrorCode::kConfig, "repetitions must be at least 1");
    if (reference_count == 0) throw Error(ErrorCode::kConfig, "reference count must be at least 1");
    if (core.size() < 2) throw Error(ErrorCode::kConfig, "reference core needs at least two points");
    if (sessions == 0) throw Error(ErrorCode::kConfig, "at least one training session is required");
    if (dde && sessions < 2) throw Error(ErrorCode::kConfig, "DDE needs at least two sessions");
    trainer.validate();
    bridge.validate();
    pcontrol.validate();
  }

  [[nodiscard]] std::vector<sim::Scenario> evaluation_suite() const {
    return sim::evaluation_suite(scenario, evaluation_count);
  }
  [[nodiscard]] refgen::CoreTrajectory core_trajectory() const { return refgen::CoreTrajectory(core); }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw Error(ErrorCode::kConfig, "unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_trainer(const nlohmann::json& j, learning::TrainerConfig& t) {
  reject_unknown(j,
                 {"total_steps", "snapshot_interval", "gamma", "learning_rate", "epsilon_start", "epsilon_end",
                  "epsilon_decay_steps", "collision_weight_max", "collision_ramp_steps", "move_weight", "angle_weight",
                  "center_weight", "dde_alpha", "dde_temperature", "exchange_interval", "replay_capacity",
                  "batch_size", "target_sync_interval", "learning_starts", "train_interval"},
                 "trainer");
  read(j, "total_steps", t.total_steps);
  read(j, "snapshot_interval", t.snapshot_interval);
  read(j, "gamma", t.gamma);
  read(j, "learning_rate", t.learning_rate);
  read(j, "epsilon_start", t.epsilon_start);
  read(j, "epsilon_end", t.epsilon_end);
  read(j, "epsilon_decay_steps", t.epsilon_decay_steps);
  read(j, "collision_weight_max", t.collision_weight_max);
  read(j, "collision_ramp_steps", t.collision_ramp_steps);
  read(j, "move_weight", t.rewards.move);
  read(j, "angle_weight", t.rewards.angle);
  read(j, "center_weight", t.rewards.center);
  read(j, "dde_alpha", t.dde_alpha);
  read(j, "dde_temperature", t.dde_temperature);
  read(j, "exchange_interval", t.exchange_interval);
  read(j, "replay_capacity", t.replay_capacity);
  read(j, "batch_size", t.batch_size);
  read(j, "target_sync_interval", t.target_sync_interval);
  read(j, "learning_starts", t.learning_starts);
  read(j, "train_interval", t.train_interval);
}

inline nlohmann::json trainer_json(const learning::TrainerConfig& t) {
  return {{"total_steps", t.total_steps},
          {"snapshot_interval", t.snapshot_interval},
          {"gamma", t.gamma},
          {"learning_rate", t.learning_rate},
          {"epsilon_start", t.epsilon_start},
          {"epsilon_end", t.epsilon_end},
          {"epsilon_decay_steps", t.epsilon_decay_steps},
          {"collision_weight_max", t.collision_weight_max},
          {"collision_ramp_steps", t.collision_ramp_steps},
          {"move_weight", t.rewards.move},
          {"angle_weight", t.rewards.angle},
          {"center_weight", t.rewards.center},
          {"dde_alpha", t.dde_alpha},
          {"dde_temperature", t.dde_temperature},
          {"exchange_interval", t.exchange_interval},
          {"replay_capacity", t.replay_capacity},
          {"batch_size", t.batch_size},
          {"target_sync_interval", t.target_sync_interval},
          {"learning_starts", t.learning_starts},
          {"train_interval", t.train_interval}};
}

inline std::string file_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    detail::reject_unknown(j,
                           {"scenario", "evaluation_scenarios", "seed", "output_dir", "sessions", "dde", "threads",
                            "trainer", "selection", "reference"},
                           "experiment config");
    c.scenario_path = (base_dir / j.at("scenario").get<std::string>()).lexically_normal().string();
    if (!std::filesystem::exists(c.scenario_path))
      throw Error(ErrorCode::kConfig, "scenario file " + c.scenario_path + " does not exist");
    c.scenario = sim::load_scenario(c.scenario_path);
    detail::read(j, "evaluation_scenarios", c.evaluation_count);
    detail::read(j, "seed", c.seed);
    detail::read(j, "output_dir", c.output_dir);
    detail::read(j, "sessions", c.sessions);
    detail::read(j, "dde", c.dde);
    detail::read(j, "threads", c.threads);
    if (j.contains("trainer")) detail::read_trainer(j.at("trainer"), c.trainer);
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      detail::reject_unknown(s, {"k", "delta", "repetitions"}, "selection");
      detail::read(s, "k", c.k);
      detail::read(s, "delta", c.delta);
      detail::read(s, "repetitions", c.repetitions);
    }
    const auto& r = j.at("reference");
    detail::reject_unknown(r,
                           {"core", "count", "sigma_lateral", "sigma_longitudinal", "base_speed", "lookahead",
                            "steer_gain", "accel_gain"},
                           "reference");
    for (const auto& p : r.at("core")) c.core.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    detail::read(r, "count", c.reference_count);
    detail::read(r, "sigma_lateral", c.bridge.sigma_lateral);
    detail::read(r, "sigma_longitudinal", c.bridge.sigma_longitudinal);
    detail::read(r, "base_speed", c.bridge.base_speed);
    detail::read(r, "lookahead", c.pcontrol.lookahead);
    detail::read(r, "steer_gain", c.pcontrol.steer_gain);
    detail::read(r, "accel_gain", c.pcontrol.accel_gain);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("experiment config: ") + e.what());
  }
  c.trainer.seed = mix_seed(c.seed, 1);
  c.trainer.threads = c.threads;
  c.bridge.seed = mix_seed(c.seed, 2);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::file_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
  ExperimentConfig c = parse_config(j, std::filesystem::path(path).parent_path());
  if (const char* out = std::getenv("DIVDRIVE_OUT"); out && *out) c.output_dir = out;
  return c;
}

/// Canonical JSON of every setting that affects results (the output
/// directory and thread count excluded), with the scenario and map files
/// embedded by content.
inline nlohmann::json canonical_json(const ExperimentConfig& c) {
  nlohmann::json core = nlohmann::json::array();
  for (const Vec2& p : c.core) core.push_back({p.x, p.y});
  return {{"scenario", nlohmann::json::parse(detail::file_text(c.scenario_path))},
          {"map", nlohmann::json::parse(detail::file_text(c.scenario.map_path))},
          {"evaluation_scenarios", c.evaluation_count},
          {"seed", c.seed},
          {"sessions", c.sessions},
          {"dde", c.dde},
          {"trainer", detail::trainer_json(c.trainer)},
          {"selection", {{"k", c.k}, {"delta", c.delta}, {"repetitions", c.repetitions}}},
          {"reference",
           {{"core", core},
            {"count", c.reference_count},
            {"sigma_lateral", c.bridge.sigma_lateral},
            {"sigma_longitudinal", c.bridge.sigma_longitudinal},
            {"base_speed", c.bridge.base_speed},
            {"lookahead", c.pcontrol.lookahead},
            {"steer_gain", c.pcontrol.steer_gain},
            {"accel_gain", c.pcontrol.accel_gain}}}};
}

inline std::string config_hash(const ExperimentConfig& c) {
  return text::hex64(text::fnv1a(canonical_json(c).dump()));
}

}  // namespace divdrive::harness
