#include "gaxnet/env.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace gaxnet::env {

void EnvConfig::validate() const {
  if (n_agents < 2) throw ConfigError("env: n_agents must be >= 2");
  if (!(uav_speed > 0.0) || !(target_speed > 0.0)) throw ConfigError("env: speeds must be > 0");
  if (!(slot_duration > 0.0)) throw ConfigError("env: slot_duration must be > 0");
  if (steps_per_episode < 1) throw ConfigError("env: steps_per_episode must be >= 1");
  if (!(collision_dist < urllc_range && urllc_range < grid_side))
    throw ConfigError("env: need collision_dist < urllc_range < grid_side");
  if (!(target_area_radius > 0.0) || 2.0 * target_area_radius > grid_side)
    throw ConfigError("env: target_area_radius must fit inside the grid");
  if (target_speed * slot_duration > target_area_radius)
    throw ConfigError("env: target step longer than the containment radius");
  if (target_spawn_radius < 0.0 || target_spawn_radius > target_area_radius)
    throw ConfigError("env: target_spawn_radius must lie in [0, target_area_radius]");
  if (observe_radius < 0.0) throw ConfigError("env: observe_radius must be >= 0");
}

double EnvConfig::diagonal() const { return grid_side * std::numbers::sqrt2; }

Point action_direction(int action) {
  constexpr double s = 1.0 / std::numbers::sqrt2;
  switch (action) {
    case 0: return {1.0, 0.0};
    case 1: return {-1.0, 0.0};
    case 2: return {0.0, 1.0};
    case 3: return {0.0, -1.0};
    case 4: return {s, s};
    case 5: return {-s, s};
    case 6: return {s, -s};
    case 7: return {-s, -s};
    default: throw std::out_of_range("action index " + std::to_string(action) + " outside 0..7");
  }
}

StepInfo score_slot(const EnvConfig& cfg, const std::vector<Point>& agents, const std::vector<Point>& agents_prev,
                    const Point& target, const Point& target_prev) {
  const int n = int(agents.size());
  StepInfo info;
  info.collision = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  info.in_range.resize(n);
  info.target_distance.resize(n);
  info.target_distance_prev.resize(n);
  info.coverage_reward.resize(n);
  for (int a = 0; a < n; ++a) {
    const double d = (target - agents[a]).norm();
    const double d_prev = (target_prev - agents_prev[a]).norm();
    info.target_distance[a] = d;
    info.target_distance_prev[a] = d_prev;
    info.in_range[a] = d < cfg.urllc_range;
    if (d < cfg.urllc_range)
      info.coverage_reward[a] = 1.0;
    else if (d < d_prev)
      info.coverage_reward[a] = 0.05;
    else
      info.coverage_reward[a] = -0.01;
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if ((agents[a] - agents[b]).norm() < cfg.collision_dist) {
        info.collision(a, b) = info.collision(b, a) = true;
        ++info.collision_pairs;
        info.collision_reward += 2 * -0.5;  // (a,b) and (b,a)
      }
    }
  }
  return info;
}

UavEnv::UavEnv(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

UavEnv::ResetResult UavEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const int n = cfg_.n_agents;
  std::uniform_real_distribution<double> coord(0.0, cfg_.grid_side);

  std::vector<Point> pos(n);
  bool placed = false;
  for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
    for (auto& p : pos) p = Point(coord(rng_), coord(rng_));
    placed = true;
    for (int a = 0; a < n && placed; ++a)
      for (int b = a + 1; b < n && placed; ++b)
        if ((pos[a] - pos[b]).norm() < cfg_.collision_dist) placed = false;
  }
  if (!placed) throw ConfigError("env: could not place agents with the collision separation after 1000 retries");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = cfg_.target_spawn_radius * std::sqrt(unit(rng_));
  const double phi = 2.0 * std::numbers::pi * unit(rng_);

  world_ = WorldState{};
  world_.agent_pos = pos;
  world_.agent_pos_prev = pos;
  world_.target_pos = center() + r * Point(std::cos(phi), std::sin(phi));
  world_.target_pos_prev = world_.target_pos;
  world_.target_heading = 2.0 * std::numbers::pi * unit(rng_);
  world_.slot_index = 0;
  has_reset_ = true;

  ResetResult out;
  out.observations.resize(n);
  for (int a = 0; a < n; ++a) out.observations[a] = build_observation(a);
  prev_observations_ = out.observations;
  out.state = build_state();
  return out;
}

Point UavEnv::target_motion(const EnvConfig& cfg, const Point& pos, double& heading, Rng& rng) {
  const Point c(cfg.grid_side / 2, cfg.grid_side / 2);
  const double step = cfg.target_speed * cfg.slot_duration;
  const double jitter = cfg.heading_jitter_deg * std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> turn(-jitter, jitter);
  heading += turn(rng);

  Point dir(std::cos(heading), std::sin(heading));
  auto inside = [&](const Point& p) { return (p - c).norm() <= cfg.target_area_radius; };
  if (!inside(pos + step * dir)) {
    const Point offset = pos - c;
    const double r = offset.norm();
    const Point radial = r > 0.0 ? Point(offset / r) : dir;
    dir = dir - 2.0 * dir.dot(radial) * radial;  // mirror about the tangent
    if (!inside(pos + step * dir)) dir = -radial;
    heading = std::atan2(dir.y(), dir.x());
  }
  heading = std::remainder(heading, 2.0 * std::numbers::pi);
  return pos + step * dir;
}

StepResult UavEnv::step(const std::vector<int>& joint_action) {
  if (!has_reset_) throw StateError("env: step before reset");
  if (done()) throw StateError("env: step after episode end");
  const int n = cfg_.n_agents;
  if (int(joint_action.size()) != n)
    throw ShapeError("env: expected " + std::to_string(n) + " actions, got " + std::to_string(joint_action.size()));

  world_.agent_pos_prev = world_.agent_pos;
  world_.target_pos_prev = world_.target_pos;
  const double stride = cfg_.uav_speed * cfg_.slot_duration;
  for (int a = 0; a < n; ++a) {
    Point next = world_.agent_pos[a] + stride * action_direction(joint_action[a]);
    world_.agent_pos[a] = next.cwiseMax(0.0).cwiseMin(cfg_.grid_side);
  }
  world_.target_pos = target_motion(cfg_, world_.target_pos, world_.target_heading, rng_);
  ++world_.slot_index;

  StepResult out;
  out.info = score_slot(cfg_, world_.agent_pos, world_.agent_pos_prev, world_.target_pos, world_.target_pos_prev);
  // Per agent, then per ordered colliding pair, so the sum recomputes
  // bit-exactly from positions.
  for (double r : out.info.coverage_reward) out.reward += r;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (out.info.collision(a, b)) out.reward -= 0.5;
  out.done = done();
  out.observations.resize(n);
  for (int a = 0; a < n; ++a) out.observations[a] = build_observation(a);
  out.state = build_state();
  prev_observations_ = out.observations;
  return out;
}

Observation UavEnv::build_observation(int agent) const {
  const int n = cfg_.n_agents;
  const double side = cfg_.grid_side, diag = cfg_.diagonal();
  Observation o = Observation::Zero(cfg_.observation_dim());

  auto own = [&](int offset, const Point& self, const Point& target) {
    o.segment<2>(offset) = self / side;
    o.segment<2>(offset + 2) = (target - self) / side;
    o(offset + 4) = (target - self).norm() / diag;
  };
  own(0, world_.agent_pos[agent], world_.target_pos);
  own(5, world_.agent_pos_prev[agent], world_.target_pos_prev);

  int block = EnvConfig::kOwnDim;
  for (int m = 0; m < n; ++m) {
    if (m == agent) continue;
    const Point rel = world_.agent_pos[m] - world_.agent_pos[agent];
    const double d = rel.norm();
    if (d <= cfg_.observe_radius) {
      o.segment<2>(block) = rel / side;
      o(block + 2) = d / diag;
      o(block + 3) = 1.0;
    }
    block += EnvConfig::kOtherDim;
  }
  return o;
}

Vector UavEnv::build_state() const {
  const int n = cfg_.n_agents, od = cfg_.observation_dim();
  Vector s(cfg_.state_dim());
  int k = 0;
  for (int a = 0; a < n; ++a, k += od) s.segment(k, od) = build_observation(a);
  s.segment<2>(k) = world_.target_pos / cfg_.grid_side;
  k += 2;
  for (int a = 0; a < n; ++a, k += od) s.segment(k, od) = prev_observations_[a];
  s.segment<2>(k) = world_.target_pos_prev / cfg_.grid_side;
  return s;
}

TrajectoryRecord make_record(std::int64_t episode, const WorldState& world, const StepInfo* info, double reward) {
  TrajectoryRecord rec;
  rec.episode = episode;
  rec.slot = world.slot_index;
  rec.agents = world.agent_pos;
  rec.target = world.target_pos;
  rec.target_distance.reserve(world.agent_pos.size());
  for (const auto& p : world.agent_pos) rec.target_distance.push_back((world.target_pos - p).norm());
  if (info) {
    rec.coverage_reward = info->coverage_reward;
    rec.collision_reward = info->collision_reward;
    rec.reward = reward;
    for (Index a = 0; a < info->collision.rows(); ++a)
      for (Index b = a + 1; b < info->collision.cols(); ++b)
        if (info->collision(a, b)) rec.collisions.push_back({int(a), int(b)});
  }
  return rec;
}

void write_record(std::ostream& os, const TrajectoryRecord& rec) {
  nlohmann::json j;
  j["episode"] = rec.episode;
  j["slot"] = rec.slot;
  auto& agents = j["agents"] = nlohmann::json::array();
  for (const auto& p : rec.agents) agents.push_back({p.x(), p.y()});
  j["target"] = {rec.target.x(), rec.target.y()};
  j["target_distance"] = rec.target_distance;
  j["coverage_reward"] = rec.coverage_reward;
  j["collision_reward"] = rec.collision_reward;
  j["reward"] = rec.reward;
  j["collisions"] = rec.collisions;
  os << j.dump() << '\n';
}

TrajectoryRecord parse_record(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  TrajectoryRecord rec;
  rec.episode = j.at("episode").get<std::int64_t>();
  rec.slot = j.at("slot").get<int>();
  for (const auto& p : j.at("agents")) rec.agents.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  rec.target = Point(j.at("target").at(0).get<double>(), j.at("target").at(1).get<double>());
  rec.target_distance = j.at("target_distance").get<std::vector<double>>();
  rec.coverage_reward = j.at("coverage_reward").get<std::vector<double>>();
  rec.collision_reward = j.at("collision_reward").get<double>();
  rec.reward = j.at("reward").get<double>();
  rec.collisions = j.at("collisions").get<std::vector<std::array<int, 2>>>();
  return rec;
}

}  // namespace gaxnet::env
