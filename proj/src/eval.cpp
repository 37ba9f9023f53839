#include "gaxnet/eval.hpp"

#include "gaxnet/nn/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gaxnet::eval {

MetricsRecord link_metrics(const RunConfig& cfg, const env::WorldState& world, const env::StepInfo& info) {
  const auto& p = cfg.channel;
  MetricsRecord r;
  r.slot = world.slot_index;
  r.agents = world.agent_pos;
  r.target = world.target_pos;
  r.target_distance = info.target_distance;
  r.serving = int(std::min_element(r.target_distance.begin(), r.target_distance.end()) - r.target_distance.begin());
  r.serving_distance = r.target_distance[std::size_t(r.serving)];
  const double s = channel::snr(r.serving_distance, p.altitude, p);
  r.snr_db = channel::linear_to_db(s);
  r.error_rate = channel::error_rate(s, channel::max_transmission_time(p), p);
  r.latency = channel::min_latency(s, cfg.requirement.target_error, p);
  r.meets = r.error_rate <= cfg.requirement.target_error && r.latency <= cfg.requirement.target_latency;
  r.collisions = info.collision_pairs;
  return r;
}

Matrix neighbor_matrix(const std::vector<std::vector<double>>& rows) {
  const int n = int(rows.size());
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (rows[std::size_t(i)].empty()) continue;
    if (int(rows[std::size_t(i)].size()) != n - 1) throw ShapeError("neighbor_matrix: row needs N-1 entries");
    for (int j = 0; j < n - 1; ++j) m(i, neighbor_agent(i, j)) = rows[std::size_t(i)][std::size_t(j)];
  }
  return m;
}

namespace {

void accumulate(const std::vector<Matrix>& slots, double& sum, Symmetry& out) {
  for (std::size_t t = 1; t < slots.size(); ++t) {
    const Matrix& now = slots[t];
    const Matrix& prev = slots[t - 1];
    for (Index n = 0; n < now.rows(); ++n)
      for (Index m = 0; m < now.cols(); ++m) {
        if (n == m) continue;
        const double d = now(n, m) - prev(m, n);
        sum += d * d;
        out.max_diff = std::max(out.max_diff, std::abs(d));
        ++out.terms;
      }
  }
}

}  // namespace

Symmetry symmetry_mse(const std::vector<Matrix>& per_slot) {
  return symmetry_mse(std::vector<std::vector<Matrix>>{per_slot});
}

Symmetry symmetry_mse(const std::vector<std::vector<Matrix>>& episodes) {
  Symmetry out;
  double sum = 0.0;
  for (const auto& ep : episodes) accumulate(ep, sum, out);
  out.mse = out.terms ? sum / double(out.terms) : 0.0;
  return out;
}

EvalSummary evaluate(const RunConfig& cfg, const std::vector<policy::Actor>& actors, int episodes,
                     std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("evaluate: episodes must be positive");
  const policy::ExchangeMode mode = cfg.baseline ? policy::ExchangeMode::kNone : cfg.exchange;
  env::UavEnv env(cfg.env);
  nn::Rng rng(seed);

  EvalSummary s;
  s.episodes = episodes;
  std::vector<std::vector<Matrix>> sr_slots;
  double latency_sum = 0.0, reward_sum = 0.0;
  int finite = 0, meeting = 0;
  for (int e = 0; e < episodes; ++e) {
    EpisodeTrace tr = run_episode(env, actors, mode, 0.0, rng, seed + std::uint64_t(e));
    reward_sum += tr.total_reward();
    auto& mats = sr_slots.emplace_back();
    for (std::size_t t = 0; t < tr.infos.size(); ++t) {
      MetricsRecord r = link_metrics(cfg, tr.worlds[t + 1], tr.infos[t]);
      r.episode = e;
      std::vector<std::vector<double>> sr_rows, att_rows;
      for (const auto& d : tr.decisions[t]) {
        sr_rows.push_back(d.sr);
        att_rows.push_back(d.attention);
      }
      r.sr = neighbor_matrix(sr_rows);
      r.attention = neighbor_matrix(att_rows);
      mats.push_back(r.sr);

      ++s.slots;
      s.collision_events += r.collisions;
      meeting += r.meets;
      if (std::isfinite(r.latency)) {
        latency_sum += r.latency;
        s.max_latency = std::max(s.max_latency, r.latency);
        ++finite;
      } else {
        ++s.saturated_slots;
      }
      s.records.push_back(std::move(r));
    }
    s.traces.push_back(std::move(tr));
  }
  s.mean_latency = finite ? latency_sum / finite : 0.0;
  s.fraction_meeting = double(meeting) / double(s.slots);
  s.mean_episode_reward = reward_sum / episodes;
  s.symmetry = symmetry_mse(sr_slots);
  return s;
}

std::vector<policy::Actor> load_actors(const RunConfig& cfg, const std::string& checkpoint) {
  const nn::Checkpoint ck = nn::load_checkpoint(checkpoint);
  const std::string want = config_hash(cfg);
  if (ck.manifest.config_hash != want)
    throw VersionError("checkpoint " + checkpoint + " was trained with config " + ck.manifest.config_hash +
                       ", current config is " + want);
  nn::Rng rng(0);
  auto actors = make_actors(cfg.actor_config(), rng);
  for (auto& a : actors) nn::restore(a.params(), ck);
  return actors;
}

io::CsvTable metrics_table(const EvalSummary& s, int n_agents) {
  io::CsvTable t;
  t.header = {"episode", "slot"};
  for (int n = 0; n < n_agents; ++n) {
    t.header.push_back("x_" + std::to_string(n));
    t.header.push_back("y_" + std::to_string(n));
  }
  t.header.insert(t.header.end(), {"target_x", "target_y"});
  for (int n = 0; n < n_agents; ++n) t.header.push_back("d_" + std::to_string(n));
  t.header.insert(t.header.end(),
                  {"serving", "serving_d_m", "snr_db", "error_rate", "latency_s", "meets", "collisions"});
  const auto f = io::format_double;
  for (const auto& r : s.records) {
    io::CsvRow row{std::to_string(r.episode), std::to_string(r.slot)};
    for (const auto& p : r.agents) {
      row.push_back(f(p.x()));
      row.push_back(f(p.y()));
    }
    row.push_back(f(r.target.x()));
    row.push_back(f(r.target.y()));
    for (double d : r.target_distance) row.push_back(f(d));
    row.insert(row.end(), {std::to_string(r.serving), f(r.serving_distance), f(r.snr_db), f(r.error_rate),
                           f(r.latency), r.meets ? "1" : "0", std::to_string(r.collisions)});
    t.rows.push_back(std::move(row));
  }
  return t;
}

io::CsvTable attention_table(const EvalSummary& s) {
  io::CsvTable t;
  t.header = {"episode", "slot", "from", "to", "sr_weight", "raw_weight"};
  for (const auto& r : s.records)
    for (Index n = 0; n < r.sr.rows(); ++n)
      for (Index m = 0; m < r.sr.cols(); ++m) {
        if (n == m) continue;
        t.rows.push_back({std::to_string(r.episode), std::to_string(r.slot), std::to_string(n), std::to_string(m),
                          io::format_double(r.sr(n, m)), io::format_double(r.attention(n, m))});
      }
  return t;
}

EvalSummary run_eval(const RunConfig& cfg, const std::string& checkpoint, int episodes, std::uint64_t seed,
                     const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto actors = load_actors(cfg, checkpoint);
  EvalSummary s = evaluate(cfg, actors, episodes, seed);

  io::ensure_dir(out_dir);
  io::write_file(out_dir / "metrics.csv", io::to_csv(metrics_table(s, cfg.env.n_agents)));
  io::write_file(out_dir / "attention.csv", io::to_csv(attention_table(s)));
  std::ostringstream traj;
  for (std::size_t e = 0; e < s.traces.size(); ++e) {
    const EpisodeTrace& tr = s.traces[e];
    env::write_record(traj, env::make_record(std::int64_t(e), tr.worlds[0], nullptr, 0.0));
    for (std::size_t t = 0; t < tr.infos.size(); ++t)
      env::write_record(traj, env::make_record(std::int64_t(e), tr.worlds[t + 1], &tr.infos[t], tr.rewards[t]));
  }
  io::write_file(out_dir / "trajectory.jsonl", traj.str());

  nlohmann::json j;
  j["mode"] = cfg.mode_name();
  j["config_hash"] = config_hash(cfg);
  j["seed"] = seed;
  j["episodes"] = s.episodes;
  j["slots"] = s.slots;
  j["collision_events"] = s.collision_events;
  j["mean_latency_s"] = s.mean_latency;
  j["max_latency_s"] = s.max_latency;
  j["saturated_slots"] = s.saturated_slots;
  j["fraction_meeting"] = s.fraction_meeting;
  j["mean_episode_reward"] = s.mean_episode_reward;
  j["symmetry_mse"] = s.symmetry.mse;
  j["symmetry_max_diff"] = s.symmetry.max_diff;
  j["target_error"] = cfg.requirement.target_error;
  j["target_latency_s"] = cfg.requirement.target_latency;
  io::write_file(out_dir / "summary.json", j.dump(2) + "\n");
  return s;
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) return {};
  if (count == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[std::size_t(i)] = lo + (hi - lo) * double(i) / double(count - 1);
  return v;
}

io::CsvTable channel_table(const channel::ChannelParams& p, const channel::UrllcRequirement& req,
                           const std::vector<double>& distances, const std::vector<double>& latencies) {
  io::CsvTable t;
  t.header = {"d_m", "latency_s", "error_rate"};
  auto row = [&](double d, double lat) {
    const double e = channel::error_rate(channel::snr(d, p.altitude, p), lat, p);
    t.rows.push_back({io::format_double(d), io::format_double(lat), io::format_double(e)});
  };
  for (double d : distances)
    for (double lat : latencies) row(d, lat);
  const double t_max = channel::max_transmission_time(p);
  const double range = channel::urllc_range(req.target_error, t_max, p);
  row(range, t_max);
  row(range, req.target_latency);
  return t;
}

}  // namespace gaxnet::eval
