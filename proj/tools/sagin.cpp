// Command-line front end: validate, run, train, sweep, verify.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "sagin/config.hpp"
#include "sagin/harness.hpp"
#include "sagin/madrl.hpp"
#include "sagin/verify.hpp"

namespace {

using nlohmann::json;

enum ExitCode { kOk = 0, kCheckFailed = 1, kUsage = 2, kRuntime = 3 };

struct CliError {
  int code;
  std::string kind;
  std::string message;
  json extra = json::object();
};

[[noreturn]] void fail(int code, std::string kind, std::string message, json extra = json::object()) {
  throw CliError{code, std::move(kind), std::move(message), std::move(extra)};
}

void emit_error(const CliError& e) {
  json err = {{"kind", e.kind}, {"message", e.message}};
  for (auto& [k, v] : e.extra.items()) err[k] = v;
  std::cerr << json{{"error", err}}.dump() << "\n";
}

sagin::ScenarioConfig load_or_default(const std::string& path) {
  sagin::ScenarioConfig cfg;
  try {
    if (!path.empty()) cfg = sagin::load_config(path);
  } catch (const sagin::ConfigError& e) {
    fail(kUsage, "config_error", e.what());
  }
  const auto report = sagin::validate_config(cfg);
  if (!report.ok()) {
    json v = json::array();
    for (const auto& x : report.violations) v.push_back({{"field", x.field}, {"message", x.message}});
    fail(kUsage, "config_invalid", "configuration violates constraints", {{"violations", v}});
  }
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(kRuntime, "io_error", "cannot write '" + path + "'");
  out << text;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(kRuntime, "io_error", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(kRuntime, "io_error", "'" + path + "' is not valid JSON: " + e.what());
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, double>) {
        out.push_back(std::stod(item, &used));
      } else {
        out.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(kUsage, "usage_error", "bad " + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) fail(kUsage, "usage_error", what + " list is empty");
  return out;
}

/// Actors come from a checkpoint or from a fresh training run of the given
/// length (0 episodes leaves the initial networks).
sagin::ActorSource actor_source(const std::string& checkpoint, int train_episodes) {
  if (!checkpoint.empty()) {
    const json doc = read_json_file(checkpoint);
    return [doc](const sagin::ScenarioConfig& cfg, std::uint64_t) {
      try {
        return sagin::load_policy(doc, cfg);
      } catch (const std::invalid_argument& e) {
        fail(kRuntime, "checkpoint_mismatch", e.what());
      }
    };
  }
  if (train_episodes >= 0)
    return [train_episodes](const sagin::ScenarioConfig& cfg, std::uint64_t seed) {
      return sagin::train(cfg, train_episodes, seed).model;
    };
  return {};
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates batch-sized temporaries just above glibc's default
  // mmap and trim thresholds; without this each one costs page faults.
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  CLI::App app{"Space-air-ground edge computing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 7;
  std::string policy = "maddpg-cocg";
  std::string trace_path, report_path, trajectory_path, checkpoint_path;
  int train_episodes = -1;
  int episodes = 300;
  std::string checkpoint_out, curve_out;
  std::string axis, values_text, seeds_text = "1,2,3,4,5", rows_out, summary_out;

  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("--config", config_path, "Config JSON (defaults if omitted)");

  auto* run = app.add_subcommand("run", "Run one evaluation episode");
  run->add_option("--config", config_path, "Config JSON (defaults if omitted)");
  run->add_option("--policy", policy, "maddpg-cocg | ecra | no | random")->capture_default_str();
  run->add_option("--seed", seed, "Episode seed")->capture_default_str();
  run->add_option("--trace", trace_path, "Write the per-slot JSONL trace here");
  run->add_option("--report", report_path, "Write the report here (stdout by default)");
  run->add_option("--trajectory", trajectory_path, "Write per-slot positions CSV here");
  run->add_option("--checkpoint", checkpoint_path, "Trained checkpoint for learned policies");
  run->add_option("--train-episodes", train_episodes, "Train this many episodes instead of loading");

  auto* train = app.add_subcommand("train", "Train the learned stack");
  train->add_option("--config", config_path, "Config JSON (defaults if omitted)");
  train->add_option("--episodes", episodes, "Training episodes")->capture_default_str();
  train->add_option("--seed", seed, "Training seed")->capture_default_str();
  train->add_option("--checkpoint-out", checkpoint_out, "Checkpoint file to write")->required();
  train->add_option("--curve-out", curve_out, "Learning-curve CSV (stdout by default)");

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep with median/IQR aggregation");
  sweep->add_option("--config", config_path, "Config JSON (defaults if omitted)");
  sweep->add_option("--axis", axis, "num_uds | task_size_mean | f_uav_max")->required();
  sweep->add_option("--values", values_text, "Comma-separated axis values")->required();
  sweep->add_option("--seeds", seeds_text, "Comma-separated seeds")->capture_default_str();
  sweep->add_option("--policy", policy, "maddpg-cocg | ecra | no | random")->capture_default_str();
  sweep->add_option("--checkpoint", checkpoint_path, "Trained checkpoint for learned policies");
  sweep->add_option("--train-episodes", train_episodes, "Train per cell instead of loading");
  sweep->add_option("--rows-out", rows_out, "Per-run rows CSV");
  sweep->add_option("--summary-out", summary_out, "Median/IQR CSV (stdout by default)");

  auto* verify = app.add_subcommand("verify", "Run the oracle, equilibrium and gradient self-checks");
  verify->add_option("--config", config_path, "Config JSON (defaults if omitted)");
  verify->add_option("--seed", seed, "Check seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error({kUsage, "usage_error", e.what()});
    return kUsage;
  }

  try {
    const auto cfg = load_or_default(config_path);

    if (*validate) {
      std::cout << json{{"ok", true}, {"config_hash", sagin::config_hash(cfg)}}.dump() << "\n";
      return kOk;
    }

    if (*run) {
      sagin::PolicyKind kind;
      try {
        kind = sagin::parse_policy(policy);
      } catch (const std::invalid_argument& e) {
        fail(kUsage, "usage_error", e.what());
      }
      std::optional<sagin::Maddpg> actors;
      if (sagin::needs_actors(kind)) {
        auto source = actor_source(checkpoint_path, train_episodes);
        if (!source)
          fail(kUsage, "usage_error", "policy " + policy + " needs --checkpoint or --train-episodes");
        actors = source(cfg, seed);
      }
      const auto result = sagin::run_episode(cfg, kind, actors ? &*actors : nullptr, seed);
      if (!trace_path.empty()) write_text(trace_path, result.trace_jsonl());
      if (!trajectory_path.empty()) write_text(trajectory_path, result.trajectory_csv());
      write_text(report_path, sagin::to_json(result.report).dump(2) + "\n");
      return kOk;
    }

    if (*train) {
      if (episodes < 0) fail(kUsage, "usage_error", "--episodes must be >= 0");
      sagin::Trainer trainer(cfg, seed);
      const std::string hash = sagin::config_hash(cfg);
      std::string curve = sagin::curve_csv_header(trainer.model.layout()) + "\n";
      for (int e = 0; e < episodes; ++e)
        curve += sagin::curve_csv_row(trainer.run_episode(), cfg.reward_cost_ref, hash) + "\n";
      write_text(checkpoint_out, trainer.checkpoint().dump() + "\n");
      write_text(curve_out, curve);
      return kOk;
    }

    if (*sweep) {
      sagin::PolicyKind kind;
      try {
        kind = sagin::parse_policy(policy);
      } catch (const std::invalid_argument& e) {
        fail(kUsage, "usage_error", e.what());
      }
      const auto values = parse_list<double>(values_text, "--values");
      const auto seeds = parse_list<std::uint64_t>(seeds_text, "--seeds");
      auto source = actor_source(checkpoint_path, train_episodes);
      if (sagin::needs_actors(kind) && !source)
        fail(kUsage, "usage_error", "policy " + policy + " needs --checkpoint or --train-episodes");
      sagin::SweepResult res;
      try {
        res = sagin::sweep(cfg, axis, values, seeds, kind, source);
      } catch (const sagin::ConfigError& e) {
        fail(kUsage, "config_invalid", e.what());
      }
      if (!rows_out.empty()) write_text(rows_out, sagin::sweep_rows_csv(res, axis));
      write_text(summary_out, sagin::sweep_summary_csv(res, axis, policy));
      return kOk;
    }

    if (*verify) {
      bool all = true;
      for (const auto& c : sagin::verify::run_all(seed, cfg)) {
        std::cout << sagin::verify::to_json(c).dump() << "\n";
        all = all && c.passed;
      }
      return all ? kOk : kCheckFailed;
    }
  } catch (const CliError& e) {
    emit_error(e);
    return e.code;
  } catch (const std::invalid_argument& e) {
    emit_error({kUsage, "invalid_argument", e.what()});
    return kUsage;
  } catch (const std::exception& e) {
    emit_error({kRuntime, "runtime_error", e.what()});
    return kRuntime;
  }
  return kOk;
}
