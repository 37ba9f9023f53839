#pragma once

// Multi-UAV target-tracking grid world. Agents move in eight compass
// directions at a fixed speed; a ground user wanders around the grid
// centre. Every agent shares one reward built from per-agent coverage
// terms and per-ordered-pair collision penalties.

#include "gaxnet/nn/param_store.hpp"
#include "gaxnet/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

namespace gaxnet::env {

using Point = Eigen::Vector2d;
using Rng = nn::Rng;

struct EnvConfig {
  double grid_side = 3750.0;
  int n_agents = 4;
  double uav_speed = 45.0 / 3.6;     // m/s
  double target_speed = 36.0 / 3.6;  // m/s
  double urllc_range = 938.0;
  double collision_dist = 563.0;
  double slot_duration = 60.0;
  int steps_per_episode = 20;
  double observe_radius = 3750.0 * 1.4142135623730951;
  double target_area_radius = 1200.0;  // containment disc around the centre
  double target_spawn_radius = 300.0;
  double heading_jitter_deg = 30.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
  double diagonal() const;
  int observation_dim() const { return kOwnDim + kOtherDim * (n_agents - 1); }
  int state_dim() const { return 2 * (n_agents * observation_dim() + 2); }

  static constexpr int kOwnDim = 10;
  static constexpr int kOtherDim = 4;
};

inline constexpr int kNumActions = 8;

/// Unit displacement for action index 0..7: E, W, N, S, NE, NW, SE, SW.
Point action_direction(int action);

struct WorldState {
  std::vector<Point> agent_pos;       // t
  std::vector<Point> agent_pos_prev;  // t-1
  Point target_pos = Point::Zero();
  Point target_pos_prev = Point::Zero();
  double target_heading = 0.0;  // radians
  int slot_index = 0;
};

// Normalized observation o^n_t. Layout:
//   [0..4]  own position, relative target position, target distance at t
//   [5..9]  the same at t-1
//   then per neighbour m (ascending index, skipping n):
//           relative position (2), distance (1), observable flag (1)
// Coordinates are divided by grid_side, distances by the grid diagonal.
using Observation = Vector;

struct StepInfo {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> collision;  // N x N, symmetric, false diagonal
  std::vector<bool> in_range;
  std::vector<double> target_distance;       // d^{n,c}_t, metres
  std::vector<double> target_distance_prev;  // d^{n,c}_{t-1}
  std::vector<double> coverage_reward;       // r^{n,c}_t
  double collision_reward = 0.0;             // sum over ordered pairs
  int collision_pairs = 0;                   // unordered colliding pairs
};

struct StepResult {
  std::vector<Observation> observations;
  Vector state;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Reward terms recomputed from raw positions; shared by the environment
/// and by log consumers that re-derive rewards.
StepInfo score_slot(const EnvConfig& cfg, const std::vector<Point>& agents, const std::vector<Point>& agents_prev,
                    const Point& target, const Point& target_prev);

class UavEnv {
 public:
  explicit UavEnv(EnvConfig cfg);

  struct ResetResult {
    std::vector<Observation> observations;
    Vector state;
  };

  ResetResult reset(std::uint64_t seed);
  StepResult step(const std::vector<int>& joint_action);

  /// Advances the target one slot: jittered heading, fixed step length,
  /// heading reflected (then pointed inward) so the user stays in the disc.
  static Point target_motion(const EnvConfig& cfg, const Point& pos, double& heading, Rng& rng);

  Observation build_observation(int agent) const;
  Vector build_state() const;

  const EnvConfig& config() const { return cfg_; }
  const WorldState& world() const { return world_; }
  bool done() const { return world_.slot_index >= cfg_.steps_per_episode; }
  Point center() const { return Point(cfg_.grid_side / 2, cfg_.grid_side / 2); }

 private:
  EnvConfig cfg_;
  WorldState world_;
  std::vector<Observation> prev_observations_;
  Rng rng_;
  bool has_reset_ = false;
};

/// One JSON-lines trajectory record (slot 0 is the reset configuration).
struct TrajectoryRecord {
  std::int64_t episode = 0;
  int slot = 0;
  std::vector<Point> agents;
  Point target = Point::Zero();
  std::vector<double> target_distance;
  std::vector<double> coverage_reward;
  double collision_reward = 0.0;
  double reward = 0.0;
  std::vector<std::array<int, 2>> collisions;  // unordered pairs (n < m)
};

TrajectoryRecord make_record(std::int64_t episode, const WorldState& world, const StepInfo* info, double reward);
void write_record(std::ostream& os, const TrajectoryRecord& rec);
TrajectoryRecord parse_record(const std::string& line);

}  // namespace gaxnet::env
