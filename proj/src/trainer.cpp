#include "gaxnet/trainer.hpp"

#include "gaxnet/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

namespace gaxnet::train {
namespace {

using policy::ExchangeMode;

policy::ExchangeMode effective_mode(const RunConfig& cfg) {
  return cfg.baseline ? ExchangeMode::kNone : cfg.exchange;
}

Matrix message(const policy::ActorOutput& o, ExchangeMode mode) {
  switch (mode) {
    case ExchangeMode::kSemantic: return o.sr;
    case ExchangeMode::kRaw: return o.attention;
    case ExchangeMode::kNone: break;
  }
  return Matrix::Zero(o.sr.rows(), o.sr.cols());
}

// All agents over all slots of a batch, one column per episode, with the
// inbox of slot t rebuilt from the neighbours' slot t-1 outputs.
struct Unroll {
  std::vector<std::vector<policy::ActorOutput>> out;   // [t][n]
  std::vector<std::vector<policy::ActorCache>> cache;  // [t][n], when requested
  std::vector<std::vector<Matrix>> mask;               // [t][n] observable flags
};

Unroll unroll(const std::vector<policy::Actor>& actors, ExchangeMode mode, const std::vector<const Episode*>& batch,
              bool keep_cache) {
  const int n = int(actors.size()), k = n - 1;
  const int slots = batch.front()->slots();
  const Index b = Index(batch.size());
  const policy::ActorConfig& acfg = actors.front().config();

  Unroll u;
  u.out.resize(slots);
  if (keep_cache) u.cache.assign(slots, std::vector<policy::ActorCache>(n));
  u.mask.assign(slots, std::vector<Matrix>(n));
  std::vector<Matrix> hidden(n, Matrix::Zero(acfg.head_hidden, b)), pair(n, Matrix::Zero(k, b));
  std::vector<const env::Observation*> obs(std::size_t(b), nullptr);

  for (int t = 0; t < slots; ++t) {
    u.out[t].reserve(n);
    for (int m = 0; m < n; ++m) {
      for (Index c = 0; c < b; ++c) obs[std::size_t(c)] = &batch[std::size_t(c)]->observations[t][m];
      policy::ActorInput in = policy::make_input(acfg, obs);
      if (acfg.attention) {
        Matrix raw = Matrix::Zero(k, b);
        if (t > 0 && mode != ExchangeMode::kNone)
          for (int j = 0; j < k; ++j) {
            const int s = neighbor_agent(m, j);
            raw.row(j) = message(u.out[t - 1][s], mode).row(neighbor_slot(s, m));
          }
        u.mask[t][m] = policy::observable_mask(acfg, in);
        in.inbox = policy::gate_inbox(raw, u.mask[t][m], t);
      }
      u.out[t].push_back(actors[m].forward(in, hidden[m], pair[m], keep_cache ? &u.cache[t][m] : nullptr));
      hidden[m] = u.out[t][m].agent_hidden;
      pair[m] = u.out[t][m].pair_hidden;
    }
  }
  return u;
}

void check_batch(const std::vector<const Episode*>& batch, int n_agents) {
  if (batch.empty()) throw ShapeError("td_loss: empty batch");
  const int slots = batch.front()->slots();
  for (const Episode* ep : batch) {
    if (ep->slots() != slots || int(ep->observations.size()) != slots + 1 || int(ep->states.size()) != slots + 1 ||
        int(ep->actions.size()) != slots || int(ep->done.size()) != slots)
      throw ShapeError("td_loss: episodes must share one slot count");
    for (const auto& a : ep->actions)
      if (int(a.size()) != n_agents) throw ShapeError("td_loss: joint action has wrong size");
  }
}

void write_trajectory(std::ostream& os, std::int64_t episode, const EpisodeTrace& tr) {
  env::write_record(os, env::make_record(episode, tr.worlds[0], nullptr, 0.0));
  for (std::size_t t = 0; t < tr.infos.size(); ++t)
    env::write_record(os, env::make_record(episode, tr.worlds[t + 1], &tr.infos[t], tr.rewards[t]));
}

}  // namespace

Episode Episode::from_trace(const EpisodeTrace& tr) {
  return {tr.observations, tr.states, tr.actions, tr.rewards, tr.done};
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("replay: capacity must be positive");
}

void ReplayBuffer::push(Episode ep) {
  if (int(episodes_.size()) == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(ep));
}

std::vector<const Episode*> ReplayBuffer::sample(int count, nn::Rng& rng) const {
  if (count < 1 || count > size())
    throw StateError("replay: cannot sample " + std::to_string(count) + " episodes from " + std::to_string(size()));
  std::vector<int> idx(episodes_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const Episode*> out;
  out.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, size() - 1);
    std::swap(idx[std::size_t(i)], idx[std::size_t(pick(rng))]);
    out.push_back(&episodes_[std::size_t(idx[std::size_t(i)])]);
  }
  return out;
}

double epsilon_schedule(const TrainConfig& cfg, int iteration) {
  if (iteration < 0) throw std::invalid_argument("epsilon_schedule: negative iteration");
  if (cfg.anneal_steps <= 0 || iteration >= cfg.anneal_steps) return cfg.epsilon_floor;
  const double frac = double(iteration) / double(cfg.anneal_steps);
  return cfg.epsilon_start + frac * (cfg.epsilon_floor - cfg.epsilon_start);
}

qmix::MixerConfig mixer_config(const RunConfig& cfg) {
  return {cfg.env.n_agents, cfg.env.state_dim(), cfg.mixing_dim};
}

Learner::Learner(const RunConfig& cfg, nn::Rng& rng)
    : actors(make_actors(cfg.actor_config(), rng)),
      target_actors(actors),
      mixer(mixer_config(cfg), rng),
      target_mixer(mixer),
      cfg_(cfg) {}

void Learner::zero_grad() {
  for (auto* s : stores()) s->zero_grad();
}

std::vector<nn::ParamStore*> Learner::stores() {
  std::vector<nn::ParamStore*> out;
  for (auto& a : actors) out.push_back(&a.params());
  out.push_back(&mixer.params());
  return out;
}

std::vector<const nn::ParamStore*> Learner::stores() const {
  auto out = actor_stores();
  out.push_back(&mixer.params());
  return out;
}

std::vector<const nn::ParamStore*> Learner::actor_stores() const {
  std::vector<const nn::ParamStore*> out;
  for (const auto& a : actors) out.push_back(&a.params());
  return out;
}

void Learner::update_target() {
  for (std::size_t n = 0; n < actors.size(); ++n) target_actors[n].params().copy_values_from(actors[n].params());
  target_mixer.params().copy_values_from(mixer.params());
}

double Learner::td_loss(const std::vector<const Episode*>& batch, bool accumulate) {
  const int n = int(actors.size());
  check_batch(batch, n);
  const int slots = batch.front()->slots();
  const Index b = Index(batch.size());
  const int k = n - 1;
  const ExchangeMode mode = effective_mode(cfg_);
  const policy::ActorConfig& acfg = actors.front().config();

  Unroll online = unroll(actors, mode, batch, accumulate);
  Unroll target = unroll(target_actors, mode, batch, false);

  // Chosen-action utilities and state, columns ordered (slot, episode).
  const int sdim = mixer.config().state_dim;
  Matrix u(n, slots * b), s(sdim, slots * b);
  for (int t = 0; t < slots; ++t)
    for (Index c = 0; c < b; ++c) {
      const Episode& ep = *batch[std::size_t(c)];
      s.col(t * b + c) = ep.states[t];
      for (int m = 0; m < n; ++m) u(m, t * b + c) = online.out[t][m].q(ep.actions[t][m], c);
    }

  // Bootstrapped targets from the next slot's greedy utilities.
  Matrix y(1, slots * b);
  if (slots > 1) {
    const Index cols = (slots - 1) * b;
    Matrix u_next(n, cols), s_next(sdim, cols);
    for (int t = 0; t + 1 < slots; ++t)
      for (Index c = 0; c < b; ++c) {
        s_next.col(t * b + c) = batch[std::size_t(c)]->states[t + 1];
        for (int m = 0; m < n; ++m) u_next(m, t * b + c) = target.out[t + 1][m].q.col(c).maxCoeff();
      }
    const Matrix q_next = target_mixer.mix(u_next, s_next);
    for (int t = 0; t + 1 < slots; ++t)
      for (Index c = 0; c < b; ++c) {
        const Episode& ep = *batch[std::size_t(c)];
        y(0, t * b + c) = ep.rewards[t] + (ep.done[t] ? 0.0 : cfg_.train.gamma * q_next(0, t * b + c));
      }
  }
  for (Index c = 0; c < b; ++c) {
    const Episode& ep = *batch[std::size_t(c)];
    if (!ep.done[slots - 1]) throw StateError("td_loss: episode does not end in a terminal slot");
    y(0, (slots - 1) * b + c) = ep.rewards[slots - 1];
  }

  qmix::MixerCache mcache;
  const Matrix q_tot = mixer.mix(u, s, accumulate ? &mcache : nullptr);
  const Matrix delta = q_tot - y;
  const double loss = delta.squaredNorm();
  if (!accumulate) return loss;

  const Matrix du = mixer.backward(mcache, 2.0 * delta);

  // Back through time. The inbox gradient of agent m at slot t is routed
  // to whichever output the sender broadcast at slot t-1.
  const bool cross = acfg.attention && mode != ExchangeMode::kNone;
  std::vector<Matrix> dhidden(n), dpair(n), dmsg_next(n);
  for (int t = slots - 1; t >= 0; --t) {
    std::vector<Matrix> dmsg_now(n);
    if (cross && t > 0) dmsg_now.assign(n, Matrix::Zero(k, b));
    for (int m = 0; m < n; ++m) {
      policy::ActorUpstream up;
      up.dq = Matrix::Zero(acfg.n_actions, b);
      for (Index c = 0; c < b; ++c) up.dq(batch[std::size_t(c)]->actions[t][m], c) = du(m, t * b + c);
      (mode == ExchangeMode::kRaw ? up.dattention : up.dsr) = dmsg_next[m];
      up.dagent_hidden = dhidden[m];
      up.dpair_hidden = dpair[m];
      policy::ActorInputGrad g = actors[m].backward(online.cache[t][m], up);
      dhidden[m] = std::move(g.dagent_hidden);
      dpair[m] = std::move(g.dpair_hidden);
      if (cross && t > 0) {
        const Matrix draw = g.dinbox.cwiseProduct(online.mask[t][m]);
        for (int j = 0; j < k; ++j) {
          const int sender = neighbor_agent(m, j);
          dmsg_now[sender].row(neighbor_slot(sender, m)) += draw.row(j);
        }
      }
    }
    dmsg_next = std::move(dmsg_now);
  }
  return loss;
}

double Learner::td_update(const std::vector<const Episode*>& batch) {
  zero_grad();
  const double loss = td_loss(batch, true);
  if (!std::isfinite(loss)) throw NumericError("td_update: non-finite loss");
  auto all = stores();
  if (cfg_.train.grad_clip > 0.0) {
    double sq = 0.0;
    for (auto* s : all) sq += s->grad_squared_norm();
    const double norm = std::sqrt(sq);
    if (norm > cfg_.train.grad_clip)
      for (auto* s : all) s->scale_grad(cfg_.train.grad_clip / norm);
  }
  nn::AdamConfig adam;
  adam.learning_rate = cfg_.learning_rate();
  for (auto* s : all) s->adam_step(adam);
  return loss;
}

double moving_average_tail(const std::vector<IterationLog>& log, int window) {
  if (log.empty() || window < 1) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t w = std::min(log.size(), std::size_t(window));
  double sum = 0.0;
  for (std::size_t i = log.size() - w; i < log.size(); ++i) sum += log[i].episode_reward;
  return sum / double(w);
}

nn::CheckpointManifest make_manifest(const RunConfig& cfg, std::int64_t iteration) {
  return {cfg.train.seed, config_hash(cfg), iteration, cfg.mode_name()};
}

TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const TrainConfig& tc = cfg.train;
  const bool write = !out_dir.empty();
  std::ofstream csv, traj;
  if (write) {
    io::ensure_dir(out_dir);
    csv.open(out_dir / "train.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "train.csv").string());
    csv << "iteration,epsilon,loss,episode_reward,collisions,in_range\n";
    if (tc.log_trajectory) traj.open(out_dir / "trajectory.jsonl", std::ios::binary | std::ios::trunc);
  }

  nn::Rng rng(tc.seed);
  Learner learner(cfg, rng);
  env::UavEnv env(cfg.env);
  ReplayBuffer replay(tc.replay_capacity);
  const ExchangeMode mode = effective_mode(cfg);

  TrainResult result;
  result.log.reserve(std::size_t(tc.iterations));
  auto save = [&](const std::filesystem::path& path, std::int64_t iteration) {
    nn::save_checkpoint(path.string(), make_manifest(cfg, iteration), std::as_const(learner).stores());
  };

  for (int it = 0; it < tc.iterations; ++it) {
    IterationLog row;
    row.iteration = it;
    row.epsilon = epsilon_schedule(tc, it);
    const std::uint64_t env_seed = rng();
    EpisodeTrace trace = run_episode(env, learner.actors, mode, row.epsilon, rng, env_seed);
    row.episode_reward = trace.total_reward();
    row.collisions = trace.collision_pairs();
    row.in_range = trace.in_range_count();
    if (traj.is_open()) write_trajectory(traj, it, trace);
    replay.push(Episode::from_trace(trace));

    row.loss = std::numeric_limits<double>::quiet_NaN();
    if (replay.size() >= tc.batch_size) {
      try {
        row.loss = learner.td_update(replay.sample(tc.batch_size, rng));
      } catch (const NumericError& e) {
        if (write) save(out_dir / "diagnostic_checkpoint.json", it);
        throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(it));
      }
    }
    if ((it + 1) % tc.target_update_period == 0) learner.update_target();

    if (write) {
      csv << it << ',' << io::format_double(row.epsilon) << ','
          << (std::isnan(row.loss) ? std::string() : io::format_double(row.loss)) << ','
          << io::format_double(row.episode_reward) << ',' << row.collisions << ',' << row.in_range << '\n';
      if (tc.checkpoint_period > 0 && (it + 1) % tc.checkpoint_period == 0)
        save(out_dir / ("checkpoint_" + std::to_string(it + 1) + ".json"), it + 1);
    }
    result.log.push_back(row);
  }

  if (write) {
    result.final_checkpoint = out_dir / "checkpoint.json";
    save(result.final_checkpoint, tc.iterations);
    nlohmann::json m;
    m["code_version"] = "gaxnet 0.1.0";
    m["mode"] = cfg.mode_name();
    m["seed"] = tc.seed;
    m["config_hash"] = config_hash(cfg);
    m["config"] = to_text(cfg);
    m["iterations"] = tc.iterations;
    m["final_checkpoint"] = "checkpoint.json";
    m["final_moving_average_reward"] = moving_average_tail(result.log, 100);
    m["decisions"] = {{"attention_normalization", cfg.normalize_attention ? "softmax" : "raw"},
                      {"exchange", to_string(mode)},
                      {"gamma", tc.gamma},
                      {"epsilon_schedule", "linear-then-floor"},
                      {"target_update", "hard copy every " + std::to_string(tc.target_update_period)},
                      {"replay", "whole episodes, uniform, capacity " + std::to_string(tc.replay_capacity)},
                      {"updates_per_episode", 1},
                      {"loss", "sum of squared TD errors"},
                      {"message_gradient", mode == ExchangeMode::kNone ? "none" : "through exchanged messages"},
                      {"serving_uav", "nearest"}};
    io::write_file(out_dir / "run_manifest.json", m.dump(2) + "\n");
  }
  result.actors = learner.actors;
  return result;
}

}  // namespace gaxnet::train
