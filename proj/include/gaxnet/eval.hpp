#pragma once

// Greedy evaluation of trained actors with per-slot URLLC link metrics,
// attention/SR matrices and the exchange-symmetry statistic, plus the
// (distance, latency) -> error-rate surface of the channel.

#include "gaxnet/config.hpp"
#include "gaxnet/io.hpp"
#include "gaxnet/policy.hpp"
#include "gaxnet/rollout.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gaxnet::eval {

struct MetricsRecord {
  std::int64_t episode = 0;
  int slot = 0;  // 1..T, positions after the slot's move
  std::vector<env::Point> agents;
  env::Point target = env::Point::Zero();
  std::vector<double> target_distance;
  int serving = 0;  // nearest agent
  double serving_distance = 0.0;
  double snr_db = 0.0;
  double error_rate = 0.0;  // at L_B/W
  double latency = 0.0;     // shortest duration meeting the target error; +inf if none
  bool meets = false;       // error and latency requirements both hold
  int collisions = 0;       // unordered colliding pairs
  Matrix sr;                // N x N, row n = w-bar_{n,.}, zero diagonal
  Matrix attention;         // N x N, row n = w_{n,.}, zero diagonal
};

/// Link metrics of one slot from raw positions.
MetricsRecord link_metrics(const RunConfig& cfg, const env::WorldState& world, const env::StepInfo& info);

/// Scatters per-agent neighbour vectors into an N x N matrix (zero diagonal).
Matrix neighbor_matrix(const std::vector<std::vector<double>>& rows);

struct Symmetry {
  double mse = 0.0;
  double max_diff = 0.0;
  std::int64_t terms = 0;
};

/// Mean over t >= 1 and ordered pairs n != m of (W_t(n,m) - W_{t-1}(m,n))^2.
Symmetry symmetry_mse(const std::vector<Matrix>& per_slot);
/// Pools several episodes into one mean (each episode lagged separately).
Symmetry symmetry_mse(const std::vector<std::vector<Matrix>>& episodes);

struct EvalSummary {
  int episodes = 0;
  int slots = 0;
  int collision_events = 0;
  double mean_latency = 0.0;  // over slots with a finite latency
  double max_latency = 0.0;
  double fraction_meeting = 0.0;
  double mean_episode_reward = 0.0;
  int saturated_slots = 0;    // no duration up to 1 s meets the error target
  Symmetry symmetry;
  std::vector<MetricsRecord> records;
  std::vector<EpisodeTrace> traces;
};

/// Greedy (epsilon = 0) rollouts; episode e uses env seed `seed + e`.
EvalSummary evaluate(const RunConfig& cfg, const std::vector<policy::Actor>& actors, int episodes,
                     std::uint64_t seed);

/// Loads actors from a checkpoint (actor parameters suffice), checks the
/// config hash (VersionError on mismatch), evaluates and writes
/// metrics.csv, attention.csv, trajectory.jsonl and summary.json.
EvalSummary run_eval(const RunConfig& cfg, const std::string& checkpoint, int episodes, std::uint64_t seed,
                     const std::filesystem::path& out_dir);

std::vector<policy::Actor> load_actors(const RunConfig& cfg, const std::string& checkpoint);

io::CsvTable metrics_table(const EvalSummary& s, int n_agents);
io::CsvTable attention_table(const EvalSummary& s);

/// Error-rate surface over the grid plus the operating points
/// (urllc range, L_B/W) and (urllc range, target latency).
io::CsvTable channel_table(const channel::ChannelParams& p, const channel::UrllcRequirement& req,
                           const std::vector<double>& distances, const std::vector<double>& latencies);
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace gaxnet::eval
