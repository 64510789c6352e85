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

#ifndef KMG_HARNESS_H_
#define KMG_HARNESS_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmg/equilibrium.h"
#include "kmg/game.h"
#include "kmg/learner.h"

namespace kmg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SplitMix64 finalizer applied to master + golden * (2^32 stream + index + 1).
// The game is generated from DeriveSeed(master, 0, 0), run i uses
// DeriveSeed(master, 1, i).
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t stream,
                         std::uint64_t index);

enum class SweepAxis { kEpisodes, kBetaScale, kIota, kFeatureDim, kHorizon };

std::string ToString(SweepAxis axis);
SweepAxis ParseSweepAxis(const std::string& name);

// Experiment description, stored as JSON with "format": "kmg-exp-v1".
struct ExperimentConfig {
  GameConfig game;          // used when game_path is empty
  std::string game_path;    // serialized game, overrides `game`
  Variant variant = Variant::kHoeffding;
  int episodes = 100;
  double delta = 0.05;
  double beta_scale = 1.0;
  double lambda = 0.0;      // <= 0: variant default
  GammaMode gamma_mode = GammaMode::kAdaptive;
  double gamma_fixed = 0.0;
  // Misspecification: noise level of the generated game and of the enlarged
  // beta. A loaded game keeps its own noise.
  double iota = 0.0;
  std::uint64_t master_seed = 0;
  int num_seeds = 1;
  std::vector<std::uint64_t> seeds;  // explicit run seeds, override num_seeds
  std::string out_dir;
  int checkpoint_every = 100;
  int workers = 1;
  SweepAxis sweep_axis = SweepAxis::kEpisodes;
  std::vector<double> sweep_values;

  // Throws ConfigError.
  void Validate() const;
};

ExperimentConfig ParseExperimentConfig(const std::string& json_text);
ExperimentConfig LoadExperimentConfig(const std::string& path);
std::string SerializeExperimentConfig(const ExperimentConfig& config);

// Game of the experiment: loaded from game_path or generated from the derived
// game seed.
KernelMixtureGame BuildGame(const ExperimentConfig& config);
std::vector<std::uint64_t> RunSeeds(const ExperimentConfig& config);
LearnerConfig ToLearnerConfig(const ExperimentConfig& config);

// Copy of `config` with the sweep axis set to `value`.
ExperimentConfig WithAxisValue(const ExperimentConfig& config, SweepAxis axis,
                               double value);

// Record CSV: header
//   episode,duality_gap,cum_regret,vbar1,vlow1,beta_t,info_gain_mean,clip_count
// then one row per episode, doubles printed with %.17g.
extern const char kRecordHeader[];

std::string FormatRecord(const std::vector<EpisodeRecord>& episodes);
// Parses and validates episode order, prefix sums and gap sign. Fields not in
// the CSV are left at zero. Throws RecordError.
std::vector<EpisodeRecord> ParseRecord(const std::string& text);

std::string FormatDiagnostics(const std::vector<EpisodeRecord>& episodes);
std::string FormatModelDump(const std::vector<StreamSummary>& streams);
std::vector<StreamSummary> ParseModelDump(const std::string& text);
std::string FormatVarianceSamples(const std::vector<VarianceSample>& samples);

// Ordered key=value pairs, first line "format=kmg-summary-v1".
using Summary = std::vector<std::pair<std::string, std::string>>;

// Aggregate over per-seed records: mean and standard error of cumulative
// regret at checkpoints, t0 gaps, quartile gaps and the log-log regret slope
// of the seed-mean over the last three quarters of the run.
Summary ComputeSummary(const ExperimentConfig& config,
                       const std::vector<std::vector<EpisodeRecord>>& records);
std::string FormatSummary(const Summary& summary);
Summary ParseSummary(const std::string& text);
// Value of `key`; throws RecordError when absent.
std::string SummaryValue(const Summary& summary, const std::string& key);
double SummaryNumber(const Summary& summary, const std::string& key);

// Least-squares slope of log(cum_regret) on log(t) over t in [t_lo, t_hi].
double LogLogSlope(const std::vector<double>& cum_regret, int t_lo, int t_hi);

struct RunFailure {
  int seed_index = 0;
  std::string message;
};

struct ExperimentOutcome {
  std::vector<RunResult> runs;  // one per seed, partial for failed runs
  std::vector<RunFailure> failures;
  Summary summary;
};

// Runs every seed (up to config.workers in parallel). When out_dir is set it
// writes, per seed i: seed_<i>.csv, seed_<i>.diag.csv, seed_<i>.model.csv and,
// in bernstein mode, seed_<i>.variance.csv; then summary.txt and config.json.
// The summary is verified against the records read back from disk.
ExperimentOutcome RunExperiment(const ExperimentConfig& config);

struct SweepCell {
  double value = 0.0;
  ExperimentOutcome outcome;
};

// One RunExperiment per sweep value, into out_dir/<axis>_<index>/.
std::vector<SweepCell> RunSweep(const ExperimentConfig& config);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct OracleCheckOptions {
  std::uint64_t seed = 0;
  int ridge_instances = 50;
  int cce_instances = 200;
  int matrix_instances = 100;
  // Added to the dual weights of every ridge instance before checking.
  double corrupt_dual = 0.0;
};

// Dual/primal ridge equivalence, dual residual, elliptical potential, CCE
// constraint fuzzing and matrix-game saddle checks.
std::vector<CheckResult> RunOracleChecks(const OracleCheckOptions& options);

// Payoff file: "n m" then the n x m max-player matrix and the n x m
// min-player matrix, row-major, whitespace separated.
std::pair<PayoffMatrix, PayoffMatrix> ParsePayoffPair(const std::string& text);
// "n m" followed by the rows of `matrix`.
std::string FormatMatrix(const Eigen::MatrixXd& matrix);

}  // namespace kmg

#endif  // KMG_HARNESS_H_
