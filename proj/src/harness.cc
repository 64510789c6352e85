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

#include "kmg/harness.h"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace kmg {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw RecordError("bad number for " + what + ": '" + s + "'");
  }
  return v;
}

long long ParseInt(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw RecordError("bad integer for " + what + ": '" + s + "'");
  }
  return v;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

double StdErr(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

std::string SideName(Player p) { return p == Player::kMax ? "max" : "min"; }

Player ParseSide(const std::string& s) {
  if (s == "max") return Player::kMax;
  if (s == "min") return Player::kMin;
  throw RecordError("bad side '" + s + "'");
}

GammaMode ParseGammaMode(const std::string& s) {
  if (s == "adaptive") return GammaMode::kAdaptive;
  if (s == "fixed") return GammaMode::kFixed;
  throw ConfigError("unknown gamma_mode '" + s + "'");
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t stream,
                         std::uint64_t index) {
  std::uint64_t z =
      master + 0x9E3779B97F4A7C15ULL * ((stream << 32) + index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string ToString(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kEpisodes:
      return "T";
    case SweepAxis::kBetaScale:
      return "beta_scale";
    case SweepAxis::kIota:
      return "iota";
    case SweepAxis::kFeatureDim:
      return "d";
    case SweepAxis::kHorizon:
      return "H";
  }
  return "?";
}

SweepAxis ParseSweepAxis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kEpisodes, SweepAxis::kBetaScale,
                      SweepAxis::kIota, SweepAxis::kFeatureDim,
                      SweepAxis::kHorizon}) {
    if (ToString(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected T, beta_scale, iota, d or H)");
}

void ExperimentConfig::Validate() const {
  if (episodes < 0) throw ConfigError("T must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0,1)");
  if (!(beta_scale > 0.0)) throw ConfigError("beta_scale must be > 0");
  if (!(iota >= 0.0 && iota <= 1.0)) throw ConfigError("iota must be in [0,1]");
  if (seeds.empty() && num_seeds < 1) throw ConfigError("seed list is empty");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (game_path.empty()) {
    if (game.n_states < 1 || game.n_actions < 1 || game.horizon < 1 ||
        game.feature_dim < 1) {
      throw ConfigError("game dimensions must be >= 1");
    }
  }
}

ExperimentConfig ParseExperimentConfig(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.value("format", std::string()) != "kmg-exp-v1") {
    throw ConfigError("config format must be \"kmg-exp-v1\"");
  }
  static const char* const kKeys[] = {
      "format", "game", "game_path", "variant", "T", "delta", "beta_scale",
      "lambda", "gamma_mode", "gamma_fixed", "iota", "master_seed",
      "num_seeds", "seeds", "out_dir", "checkpoint_every", "workers", "sweep"};
  for (const auto& item : j.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) {
          return item.key() == k;
        }) == std::end(kKeys)) {
      throw ConfigError("unknown config key '" + item.key() + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("game")) {
      const json& g = j.at("game");
      c.game.n_states = g.value("n_states", c.game.n_states);
      c.game.n_actions = g.value("n_actions", c.game.n_actions);
      c.game.horizon = g.value("H", c.game.horizon);
      c.game.feature_dim = g.value("d", c.game.feature_dim);
      c.game.dirichlet_alpha = g.value("dirichlet_alpha", c.game.dirichlet_alpha);
      c.game.initial_state = g.value("initial_state", c.game.initial_state);
    }
    c.game_path = j.value("game_path", std::string());
    c.variant = ParseVariant(j.value("variant", std::string("hoeffding")));
    c.episodes = j.value("T", c.episodes);
    c.delta = j.value("delta", c.delta);
    c.beta_scale = j.value("beta_scale", c.beta_scale);
    c.lambda = j.value("lambda", c.lambda);
    c.gamma_mode = ParseGammaMode(j.value("gamma_mode", std::string("adaptive")));
    c.gamma_fixed = j.value("gamma_fixed", c.gamma_fixed);
    c.iota = j.value("iota", c.iota);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.num_seeds = j.value("num_seeds", c.num_seeds);
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      if (c.seeds.empty()) throw ConfigError("seed list is empty");
    }
    c.out_dir = j.value("out_dir", std::string());
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.workers = j.value("workers", c.workers);
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      c.sweep_axis = ParseSweepAxis(s.at("axis").get<std::string>());
      c.sweep_values = s.at("values").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.game.iota = c.iota;
  c.Validate();
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  return ParseExperimentConfig(ReadFile(path));
}

std::string SerializeExperimentConfig(const ExperimentConfig& c) {
  json j;
  j["format"] = "kmg-exp-v1";
  j["game"] = {{"n_states", c.game.n_states},
               {"n_actions", c.game.n_actions},
               {"H", c.game.horizon},
               {"d", c.game.feature_dim},
               {"dirichlet_alpha", c.game.dirichlet_alpha},
               {"initial_state", c.game.initial_state}};
  if (!c.game_path.empty()) j["game_path"] = c.game_path;
  j["variant"] = ToString(c.variant);
  j["T"] = c.episodes;
  j["delta"] = c.delta;
  j["beta_scale"] = c.beta_scale;
  j["lambda"] = c.lambda;
  j["gamma_mode"] = c.gamma_mode == GammaMode::kFixed ? "fixed" : "adaptive";
  j["gamma_fixed"] = c.gamma_fixed;
  j["iota"] = c.iota;
  j["master_seed"] = c.master_seed;
  j["num_seeds"] = c.num_seeds;
  if (!c.seeds.empty()) j["seeds"] = c.seeds;
  j["checkpoint_every"] = c.checkpoint_every;
  j["workers"] = c.workers;
  if (!c.sweep_values.empty()) {
    j["sweep"] = {{"axis", ToString(c.sweep_axis)}, {"values", c.sweep_values}};
  }
  return j.dump(2) + "\n";
}

KernelMixtureGame BuildGame(const ExperimentConfig& config) {
  if (!config.game_path.empty()) return LoadGame(config.game_path);
  GameConfig g = config.game;
  g.iota = config.iota;
  Rng rng(DeriveSeed(config.master_seed, 0, 0));
  return GenerateRandomGame(g, rng);
}

std::vector<std::uint64_t> RunSeeds(const ExperimentConfig& config) {
  if (!config.seeds.empty()) return config.seeds;
  std::vector<std::uint64_t> out;
  for (int i = 0; i < config.num_seeds; ++i) {
    out.push_back(DeriveSeed(config.master_seed, 1, i));
  }
  return out;
}

LearnerConfig ToLearnerConfig(const ExperimentConfig& config) {
  LearnerConfig l;
  l.variant = config.variant;
  l.episodes = config.episodes;
  l.delta = config.delta;
  l.beta_scale = config.beta_scale;
  l.lambda = config.lambda;
  l.gamma_mode = config.gamma_mode;
  l.gamma_fixed = config.gamma_fixed;
  l.iota = config.iota;
  return l;
}

ExperimentConfig WithAxisValue(const ExperimentConfig& config, SweepAxis axis,
                               double value) {
  ExperimentConfig c = config;
  switch (axis) {
    case SweepAxis::kEpisodes:
      c.episodes = static_cast<int>(std::lround(value));
      break;
    case SweepAxis::kBetaScale:
      c.beta_scale = value;
      break;
    case SweepAxis::kIota:
      c.iota = value;
      c.game.iota = value;
      break;
    case SweepAxis::kFeatureDim:
      c.game.feature_dim = static_cast<int>(std::lround(value));
      break;
    case SweepAxis::kHorizon:
      c.game.horizon = static_cast<int>(std::lround(value));
      break;
  }
  c.sweep_values.clear();
  c.Validate();
  return c;
}

const char kRecordHeader[] =
    "episode,duality_gap,cum_regret,vbar1,vlow1,beta_t,info_gain_mean,"
    "clip_count";

std::string FormatRecord(const std::vector<EpisodeRecord>& episodes) {
  std::string out = std::string(kRecordHeader) + "\n";
  for (const EpisodeRecord& r : episodes) {
    out += std::to_string(r.episode) + "," + Num(r.duality_gap) + "," +
           Num(r.cum_regret) + "," + Num(r.vbar1) + "," + Num(r.vlow1) + "," +
           Num(r.beta) + "," + Num(r.info_gain_mean) + "," +
           std::to_string(r.clip_count) + "\n";
  }
  return out;
}

std::vector<EpisodeRecord> ParseRecord(const std::string& text) {
  const std::vector<std::string> lines = Lines(text);
  if (lines.empty() || lines[0] != kRecordHeader) {
    throw RecordError("record header mismatch");
  }
  std::vector<EpisodeRecord> out;
  double prefix = 0.0;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> f = SplitCsv(lines[i]);
    const std::string where = "record line " + std::to_string(i + 1);
    if (f.size() != 8) throw RecordError(where + ": expected 8 fields");
    EpisodeRecord r;
    r.episode = static_cast<int>(ParseInt(f[0], "episode"));
    r.duality_gap = ParseDouble(f[1], "duality_gap");
    r.cum_regret = ParseDouble(f[2], "cum_regret");
    r.vbar1 = ParseDouble(f[3], "vbar1");
    r.vlow1 = ParseDouble(f[4], "vlow1");
    r.beta = ParseDouble(f[5], "beta_t");
    r.info_gain_mean = ParseDouble(f[6], "info_gain_mean");
    r.clip_count = static_cast<int>(ParseInt(f[7], "clip_count"));
    if (r.episode != static_cast<int>(out.size()) + 1) {
      throw RecordError(where + ": episodes out of order");
    }
    if (r.duality_gap < -1e-9) throw RecordError(where + ": negative gap");
    prefix += r.duality_gap;
    if (std::abs(prefix - r.cum_regret) > 1e-9 * std::max(1.0, std::abs(prefix))) {
      throw RecordError(where + ": cum_regret is not the prefix sum");
    }
    out.push_back(r);
  }
  return out;
}

std::string FormatDiagnostics(const std::vector<EpisodeRecord>& episodes) {
  std::string out = "episode,best_response_max,best_response_min,lp_pivots\n";
  for (const EpisodeRecord& r : episodes) {
    out += std::to_string(r.episode) + "," + Num(r.best_response_max) + "," +
           Num(r.best_response_min) + "," + std::to_string(r.lp_pivots) + "\n";
  }
  return out;
}

std::string FormatModelDump(const std::vector<StreamSummary>& streams) {
  std::string out = "step,side,entries,potential_sum,log_det,dual_residual\n";
  for (const StreamSummary& s : streams) {
    out += std::to_string(s.step) + "," + SideName(s.side) + "," +
           std::to_string(s.entries) + "," + Num(s.potential_sum) + "," +
           Num(s.log_det) + "," + Num(s.dual_residual) + "\n";
  }
  return out;
}

std::vector<StreamSummary> ParseModelDump(const std::string& text) {
  const std::vector<std::string> lines = Lines(text);
  if (lines.empty() ||
      lines[0] != "step,side,entries,potential_sum,log_det,dual_residual") {
    throw RecordError("model dump header mismatch");
  }
  std::vector<StreamSummary> out;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> f = SplitCsv(lines[i]);
    if (f.size() != 6) throw RecordError("model dump: expected 6 fields");
    StreamSummary s;
    s.step = static_cast<int>(ParseInt(f[0], "step"));
    s.side = ParseSide(f[1]);
    s.entries = static_cast<int>(ParseInt(f[2], "entries"));
    s.potential_sum = ParseDouble(f[3], "potential_sum");
    s.log_det = ParseDouble(f[4], "log_det");
    s.dual_residual = ParseDouble(f[5], "dual_residual");
    out.push_back(s);
  }
  return out;
}

std::string FormatVarianceSamples(const std::vector<VarianceSample>& samples) {
  std::string out = "episode,step,side,r_squared,true_variance\n";
  for (const VarianceSample& s : samples) {
    out += std::to_string(s.episode) + "," + std::to_string(s.step) + "," +
           SideName(s.side) + "," + Num(s.r_squared) + "," +
           Num(s.true_variance) + "\n";
  }
  return out;
}

double LogLogSlope(const std::vector<double>& cum_regret, int t_lo, int t_hi) {
  t_lo = std::max(t_lo, 1);
  t_hi = std::min<int>(t_hi, cum_regret.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int t = t_lo; t <= t_hi; ++t) {
    const double c = cum_regret[t - 1];
    if (!(c > 0.0)) continue;
    const double x = std::log(static_cast<double>(t)), y = std::log(c);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double denom = n * sxx - sx * sx;
  return denom == 0.0 ? std::nan("") : (n * sxy - sx * sy) / denom;
}

Summary ComputeSummary(const ExperimentConfig& config,
                       const std::vector<std::vector<EpisodeRecord>>& records) {
  Summary s;
  s.emplace_back("format", "kmg-summary-v1");
  s.emplace_back("variant", ToString(config.variant));
  s.emplace_back("T", std::to_string(config.episodes));
  s.emplace_back("beta_scale", Num(config.beta_scale));
  s.emplace_back("iota", Num(config.iota));
  s.emplace_back("delta", Num(config.delta));
  s.emplace_back("seeds", std::to_string(records.size()));

  int min_len = config.episodes;
  for (const auto& r : records) min_len = std::min<int>(min_len, r.size());
  s.emplace_back("complete_episodes", std::to_string(min_len));

  std::vector<int> checkpoints;
  for (int t = config.checkpoint_every; t <= min_len; t += config.checkpoint_every) {
    checkpoints.push_back(t);
  }
  if (min_len > 0 && (checkpoints.empty() || checkpoints.back() != min_len)) {
    checkpoints.push_back(min_len);
  }
  for (int t : checkpoints) {
    std::vector<double> v;
    for (const auto& r : records) v.push_back(r[t - 1].cum_regret);
    s.emplace_back("cum_regret@" + std::to_string(t) + ".mean", Num(Mean(v)));
    s.emplace_back("cum_regret@" + std::to_string(t) + ".stderr", Num(StdErr(v)));
  }

  const int q = min_len / 4;
  if (q >= 1) {
    std::vector<double> first, last;
    for (const auto& r : records) {
      double a = 0.0, b = 0.0;
      for (int t = 0; t < q; ++t) a += r[t].duality_gap;
      for (int t = min_len - q; t < min_len; ++t) b += r[t].duality_gap;
      first.push_back(a / q);
      last.push_back(b / q);
    }
    s.emplace_back("first_quartile_gap.mean", Num(Mean(first)));
    s.emplace_back("first_quartile_gap.stderr", Num(StdErr(first)));
    s.emplace_back("last_quartile_gap.mean", Num(Mean(last)));
    s.emplace_back("last_quartile_gap.stderr", Num(StdErr(last)));
    std::vector<double> mean_cum(min_len, 0.0);
    for (const auto& r : records) {
      for (int t = 0; t < min_len; ++t) mean_cum[t] += r[t].cum_regret;
    }
    for (double& c : mean_cum) c /= records.size();
    s.emplace_back("regret_slope", Num(LogLogSlope(mean_cum, q, min_len)));
  }

  if (min_len > 0) {
    std::vector<double> width, gap;
    for (const auto& r : records) {
      const std::vector<EpisodeRecord> head(r.begin(), r.begin() + min_len);
      const int t0 = *SelectT0(head);
      width.push_back(head[t0 - 1].vbar1 - head[t0 - 1].vlow1);
      gap.push_back(head[t0 - 1].duality_gap);
    }
    s.emplace_back("t0_width.mean", Num(Mean(width)));
    s.emplace_back("t0_duality_gap.mean", Num(Mean(gap)));
    s.emplace_back("t0_duality_gap.stderr", Num(StdErr(gap)));
  }
  return s;
}

std::string FormatSummary(const Summary& summary) {
  std::string out;
  for (const auto& [k, v] : summary) out += k + "=" + v + "\n";
  return out;
}

Summary ParseSummary(const std::string& text) {
  Summary s;
  for (const std::string& line : Lines(text)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw RecordError("summary line without '='");
    s.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  if (s.empty() || s[0] != std::make_pair(std::string("format"),
                                          std::string("kmg-summary-v1"))) {
    throw RecordError("summary format mismatch");
  }
  return s;
}

std::string SummaryValue(const Summary& summary, const std::string& key) {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  throw RecordError("summary has no key '" + key + "'");
}

double SummaryNumber(const Summary& summary, const std::string& key) {
  return ParseDouble(SummaryValue(summary, key), key);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

ExperimentOutcome RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  const KernelMixtureGame game = BuildGame(config);
  const LearnerConfig learner_config = ToLearnerConfig(config);
  const std::vector<std::uint64_t> seeds = RunSeeds(config);
  const bool write = !config.out_dir.empty();
  if (write) fs::create_directories(config.out_dir);
  auto path = [&](int i, const char* suffix) {
    return (fs::path(config.out_dir) / ("seed_" + std::to_string(i) + suffix))
        .string();
  };

  ExperimentOutcome outcome;
  outcome.runs.resize(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < seeds.size(); i = next++) {
      try {
        outcome.runs[i] = Run(game, learner_config, seeds[i]);
      } catch (const RunAborted& e) {
        outcome.runs[i] = e.partial();
        errors[i] = e.what();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      if (!write) continue;
      const RunResult& r = outcome.runs[i];
      const int idx = static_cast<int>(i);
      WriteFile(path(idx, ".csv"), FormatRecord(r.episodes));
      WriteFile(path(idx, ".diag.csv"), FormatDiagnostics(r.episodes));
      WriteFile(path(idx, ".model.csv"), FormatModelDump(r.streams));
      if (config.variant == Variant::kBernstein) {
        WriteFile(path(idx, ".variance.csv"),
                  FormatVarianceSamples(r.variance_samples));
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(config.workers, static_cast<int>(seeds.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (!errors[i].empty()) {
      outcome.failures.push_back({static_cast<int>(i), errors[i]});
    }
  }

  std::vector<std::vector<EpisodeRecord>> records;
  for (const RunResult& r : outcome.runs) records.push_back(r.episodes);
  outcome.summary = ComputeSummary(config, records);
  if (write) {
    const std::string text = FormatSummary(outcome.summary);
    WriteFile((fs::path(config.out_dir) / "summary.txt").string(), text);
    WriteFile((fs::path(config.out_dir) / "config.json").string(),
              SerializeExperimentConfig(config));
    std::vector<std::vector<EpisodeRecord>> reread;
    for (size_t i = 0; i < seeds.size(); ++i) {
      reread.push_back(ParseRecord(ReadFile(path(static_cast<int>(i), ".csv"))));
    }
    if (FormatSummary(ComputeSummary(config, reread)) != text) {
      throw RecordError("summary does not round-trip through the records in " +
                        config.out_dir);
    }
  }
  return outcome;
}

std::vector<SweepCell> RunSweep(const ExperimentConfig& config) {
  if (config.sweep_values.empty()) throw ConfigError("sweep has no values");
  std::vector<SweepCell> cells;
  for (size_t i = 0; i < config.sweep_values.size(); ++i) {
    ExperimentConfig c =
        WithAxisValue(config, config.sweep_axis, config.sweep_values[i]);
    if (!config.out_dir.empty()) {
      c.out_dir = (fs::path(config.out_dir) /
                   (ToString(config.sweep_axis) + "_" + std::to_string(i)))
                      .string();
    }
    cells.push_back({config.sweep_values[i], RunExperiment(c)});
  }
  return cells;
}

namespace {

CheckResult Check(std::string name, bool passed, std::string detail) {
  return {std::move(name), passed, std::move(detail)};
}

std::string Sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

std::vector<CheckResult> RunOracleChecks(const OracleCheckOptions& options) {
  std::vector<CheckResult> out;
  Rng rng(DeriveSeed(options.seed, 2, 0));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> pick_d(1, 10), pick_t(0, 50), pick_l(0, 2);
  const double lambdas[] = {0.5, 1.0, 2.0};

  double mean_err = 0, width_err = 0, gain_err = 0, residual = 0;
  double potential_excess = -1e300;
  for (int k = 0; k < options.ridge_instances; ++k) {
    const int d = pick_d(rng), t = pick_t(rng);
    const double lambda = lambdas[pick_l(rng)];
    GramState g(d, lambda);
    Eigen::MatrixXd lam = lambda * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (int p = 0; p < t; ++p) {
      Eigen::VectorXd f(d);
      for (int i = 0; i < d; ++i) f(i) = unit(rng);
      const double y = unit(rng);
      g.Append(f, y);
      lam += f * f.transpose();
      b += f * y;
    }
    if (options.corrupt_dual != 0.0 && t > 0) {
      g.CorruptDualWeightsForTesting(options.corrupt_dual);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(lam);
    const Eigen::VectorXd theta = ldlt.solve(b);
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd z(d);
      for (int i = 0; i < d; ++i) z(i) = unit(rng);
      const double m = z.dot(theta);
      const double w = std::sqrt(z.dot(ldlt.solve(z)));
      mean_err = std::max(mean_err, std::abs(g.Mean(z) - m) / std::max(1.0, std::abs(m)));
      width_err = std::max(width_err, std::abs(g.Width(z) - w) / std::max(1.0, w));
    }
    const double gain = 0.5 * (ldlt.vectorD().array().log().sum() -
                               d * std::log(lambda));
    gain_err = std::max(gain_err, std::abs(g.InformationGain() - gain) /
                                      std::max(1.0, std::abs(gain)));
    residual = std::max(residual, g.DualResidual());
    potential_excess =
        std::max(potential_excess, g.potential_sum() - 4.0 * g.InformationGain());
  }
  out.push_back(Check("ridge mean dual=primal", mean_err <= 1e-8,
                      "max rel err " + Sci(mean_err)));
  out.push_back(Check("ridge width dual=primal", width_err <= 1e-8,
                      "max rel err " + Sci(width_err)));
  out.push_back(Check("information gain dual=primal", gain_err <= 1e-8,
                      "max rel err " + Sci(gain_err)));
  out.push_back(Check("dual residual", residual <= 1e-8,
                      "max residual " + Sci(residual)));
  out.push_back(Check("elliptical potential", potential_excess <= 1e-9,
                      "max sum min(1,w^2) - 2 logdet " + Sci(potential_excess)));

  std::uniform_int_distribution<int> pick_a(2, 8);
  double cce_violation = 0.0, cce_mass = 0.0;
  std::string cce_error;
  for (int k = 0; k < options.cce_instances && cce_error.empty(); ++k) {
    const int n = pick_a(rng);
    PayoffMatrix q1(n, n), q2(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        q1(i, j) = 3.0 * unit(rng);
        q2(i, j) = 3.0 * unit(rng);
      }
    }
    try {
      const JointDistribution sigma = FindCce(q1, q2);
      cce_violation = std::max(cce_violation, CceViolation(q1, q2, sigma.probs()));
      cce_mass = std::max({cce_mass, std::abs(sigma.probs().sum() - 1.0),
                           -sigma.probs().minCoeff()});
    } catch (const std::exception& e) {
      cce_error = e.what();
    }
  }
  out.push_back(Check("cce constraints", cce_error.empty() && cce_violation <= 1e-8,
                      cce_error.empty() ? "max violation " + Sci(cce_violation)
                                        : cce_error));
  out.push_back(Check("cce distribution", cce_error.empty() && cce_mass <= 1e-9,
                      "max mass error " + Sci(cce_mass)));

  double saddle = 0.0;
  for (int k = 0; k < options.matrix_instances; ++k) {
    std::uniform_int_distribution<int> pick_n(1, 8);
    const int n = pick_n(rng), m = pick_n(rng);
    PayoffMatrix a(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) a(i, j) = unit(rng);
    }
    const MatrixGameSolution s = MatrixGameValue(a);
    const double lower = (s.row_strategy.transpose() * a).minCoeff();
    const double upper = (a * s.col_strategy).maxCoeff();
    saddle = std::max(saddle, upper - lower);
  }
  out.push_back(Check("matrix game saddle", saddle <= 1e-8,
                      "max minimax - maximin " + Sci(saddle)));
  PayoffMatrix known(2, 2);
  known << 3, 0, 1, 2;
  const double v = MatrixGameValue(known).value;
  out.push_back(Check("matrix game [[3,0],[1,2]]", std::abs(v - 1.5) <= 1e-9,
                      "value " + Num(v)));
  return out;
}

std::pair<PayoffMatrix, PayoffMatrix> ParsePayoffPair(const std::string& text) {
  std::istringstream in(text);
  long n = 0, m = 0;
  if (!(in >> n >> m) || n < 1 || m < 1 || n > 1000 || m > 1000) {
    throw std::invalid_argument("payoff file: bad dimension line");
  }
  PayoffMatrix q1(n, m), q2(n, m);
  for (PayoffMatrix* q : {&q1, &q2}) {
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < m; ++j) {
        if (!(in >> (*q)(i, j)) || !std::isfinite((*q)(i, j))) {
          throw std::invalid_argument("payoff file: missing or bad entry");
        }
      }
    }
  }
  std::string rest;
  if (in >> rest) throw std::invalid_argument("payoff file: trailing data");
  return {q1, q2};
}

std::string FormatMatrix(const Eigen::MatrixXd& matrix) {
  std::string out =
      std::to_string(matrix.rows()) + " " + std::to_string(matrix.cols()) + "\n";
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      out += (j ? " " : "") + Num(matrix(i, j));
    }
    out += "\n";
  }
  return out;
}

}  // namespace kmg
