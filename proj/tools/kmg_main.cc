// Copyright 2026 The kmg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kmg: experiment harness for kernel mixture Markov games.
//
//   kmg run --config exp.json [--seed N] [--out DIR] [--workers N]
//           [--variant V] [--beta-scale F]
//   kmg sweep --config exp.json [--axis A --values v1,v2,...] [same flags]
//   kmg oracle-check [--seed N] [--corrupt-dual X]
//   kmg cce-solve --in payoffs.txt --out sigma.txt [--maximize-gap]
//   kmg gen-game --out game.json [--seed N] [--states S] [--actions A]
//                [--horizon H] [--dim D] [--iota I]

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kmg/harness.h"

namespace {

using kmg::ExperimentConfig;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  std::string variant;
  std::optional<double> beta_scale;
};

void AddOverrides(CLI::App* cmd, std::string* config_path, Overrides* o) {
  cmd->add_option("--config", *config_path, "experiment config (kmg-exp-v1)")
      ->required();
  cmd->add_option("--seed", o->seed, "master seed");
  cmd->add_option("--out", o->out, "output directory");
  cmd->add_option("--workers", o->workers, "parallel runs");
  cmd->add_option("--variant", o->variant, "hoeffding, bernstein or misspecified");
  cmd->add_option("--beta-scale", o->beta_scale, "multiplier on beta");
}

ExperimentConfig LoadWithOverrides(const std::string& path, const Overrides& o) {
  ExperimentConfig c = kmg::LoadExperimentConfig(path);
  if (o.seed) c.master_seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.workers) c.workers = *o.workers;
  if (!o.variant.empty()) {
    try {
      c.variant = kmg::ParseVariant(o.variant);
    } catch (const std::invalid_argument& e) {
      throw kmg::ConfigError(e.what());
    }
  }
  if (o.beta_scale) c.beta_scale = *o.beta_scale;
  c.Validate();
  return c;
}

int Report(const kmg::ExperimentOutcome& outcome, const std::string& label) {
  for (const auto& f : outcome.failures) {
    std::cerr << label << "run " << f.seed_index << " aborted: " << f.message
              << "\n";
  }
  std::cout << label << kmg::FormatSummary(outcome.summary);
  return outcome.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel mixture Markov game laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  CLI::App* run = app.add_subcommand("run", "run every seed of an experiment");
  AddOverrides(run, &config_path, &overrides);

  std::string sweep_config_path, axis, values;
  Overrides sweep_overrides;
  CLI::App* sweep = app.add_subcommand("sweep", "run an experiment per axis value");
  AddOverrides(sweep, &sweep_config_path, &sweep_overrides);
  sweep->add_option("--axis", axis, "T, beta_scale, iota, d or H");
  sweep->add_option("--values", values, "comma-separated axis values");

  kmg::OracleCheckOptions oracle;
  CLI::App* check = app.add_subcommand("oracle-check", "numerical self-checks");
  check->add_option("--seed", oracle.seed, "fuzz seed");
  check->add_option("--corrupt-dual", oracle.corrupt_dual,
                    "perturb ridge dual weights (negative control)");

  std::string cce_in, cce_out;
  bool maximize_gap = false;
  CLI::App* cce = app.add_subcommand("cce-solve", "CCE of a payoff pair");
  cce->add_option("--in", cce_in, "payoff file")->required();
  cce->add_option("--out", cce_out, "output file (default stdout)");
  cce->add_flag("--maximize-gap", maximize_gap, "maximize E[q_max - q_min]");

  std::string game_out;
  std::uint64_t game_seed = 0;
  kmg::GameConfig game_config;
  CLI::App* gen = app.add_subcommand("gen-game", "write a random game");
  gen->add_option("--out", game_out, "output file")->required();
  gen->add_option("--seed", game_seed, "master seed");
  gen->add_option("--states", game_config.n_states);
  gen->add_option("--actions", game_config.n_actions);
  gen->add_option("--horizon", game_config.horizon);
  gen->add_option("--dim", game_config.feature_dim);
  gen->add_option("--iota", game_config.iota);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ExperimentConfig c = LoadWithOverrides(config_path, overrides);
      return Report(kmg::RunExperiment(c), "");
    }
    if (*sweep) {
      ExperimentConfig c = LoadWithOverrides(sweep_config_path, sweep_overrides);
      if (!axis.empty()) c.sweep_axis = kmg::ParseSweepAxis(axis);
      if (!values.empty()) {
        c.sweep_values.clear();
        std::stringstream ss(values);
        std::string item;
        while (std::getline(ss, item, ',')) c.sweep_values.push_back(std::stod(item));
      }
      int status = 0;
      for (const kmg::SweepCell& cell : kmg::RunSweep(c)) {
        const std::string label =
            "[" + kmg::ToString(c.sweep_axis) + "=" + std::to_string(cell.value) + "] ";
        status |= Report(cell.outcome, label);
      }
      return status;
    }
    if (*check) {
      bool ok = true;
      for (const kmg::CheckResult& r : kmg::RunOracleChecks(oracle)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail
                  << "\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
    if (*cce) {
      const auto [q1, q2] = kmg::ParsePayoffPair(kmg::ReadFile(cce_in));
      kmg::CceOptions options;
      options.maximize_gap = maximize_gap;
      const std::string text =
          kmg::FormatMatrix(kmg::FindCce(q1, q2, options).probs());
      if (cce_out.empty()) {
        std::cout << text;
      } else {
        kmg::WriteFile(cce_out, text);
      }
      return 0;
    }
    if (*gen) {
      kmg::Rng rng(kmg::DeriveSeed(game_seed, 0, 0));
      kmg::SaveGame(kmg::GenerateRandomGame(game_config, rng), game_out);
      return 0;
    }
  } catch (const kmg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
