#include "checks.hpp"

#include "gaxnet/env.hpp"
#include "gaxnet/mixer.hpp"
#include "gaxnet/nn/ops.hpp"
#include "gaxnet/trainer.hpp"

#include <cmath>
#include <sstream>

namespace checks {

using namespace gaxnet;
using policy::ActorConfig;

namespace {

double project(const Matrix& y, const Matrix& c) { return (y.array() * c.array()).sum(); }

policy::ActorInput random_input(const ActorConfig& cfg, Index b, std::mt19937_64& rng) {
  policy::ActorInput in;
  in.own = fd::random_matrix(cfg.obs_dim, b, rng);
  for (int j = 0; j < cfg.neighbors(); ++j) in.other.push_back(fd::random_matrix(cfg.other_dim, b, rng));
  in.inbox = fd::random_matrix(cfg.neighbors(), b, rng, 0.5).array() + 0.5;
  return in;
}

double dist(const env::Point& a, const env::Point& b) {
  const double dx = a.x() - b.x(), dy = a.y() - b.y();
  return std::sqrt(dx * dx + dy * dy);
}

// Written from the reward definition, independently of score_slot.
double brute_force_reward(const std::vector<env::Point>& now, const std::vector<env::Point>& before,
                          const env::Point& target, const env::Point& target_before) {
  double r = 0.0;
  const std::size_t n = now.size();
  for (std::size_t a = 0; a < n; ++a) {
    const double d = dist(target, now[a]);
    const double d0 = dist(target_before, before[a]);
    r += d < 938.0 ? 1.0 : (d < d0 ? 0.05 : -0.01);
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && dist(now[a], now[b]) < 563.0) r -= 0.5;
  return r;
}

}  // namespace

fd::Report ops_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  fd::Report rep;
  {
    nn::ParamStore store;
    auto layer = nn::make_affine(store, "fc", 22, 64, rng);
    Matrix x = fd::random_matrix(22, 3, rng);
    const Matrix c = fd::random_matrix(64, 3, rng);
    auto loss = [&] { return project(nn::affine(layer, x), c); };
    const Matrix dx = nn::affine_backward(layer, x, c);
    fd::check_store(rep, store, loss, 100, rng);
    fd::check(rep, "affine.x", x, dx, loss, 0, rng);
  }
  {
    Matrix x = fd::random_matrix(7, 4, rng, 2.0);
    const Matrix c = fd::random_matrix(7, 4, rng);
    using Fn = Matrix (*)(const Matrix&);
    using Bk = Matrix (*)(const Matrix&, const Matrix&);
    const std::vector<std::tuple<const char*, Fn, Bk>> ops = {
        {"sigmoid", &nn::sigmoid<double>, &nn::sigmoid_backward<double>},
        {"tanh", &nn::tanh<double>, &nn::tanh_backward<double>},
        {"elu", &nn::elu<double>, &nn::elu_backward<double>},
        {"softmax", &nn::softmax<double>, &nn::softmax_backward<double>},
    };
    for (const auto& [name, f, b] : ops) {
      auto loss = [&, f = f] { return project(f(x), c); };
      fd::check(rep, name, x, b(f(x), c), loss, 0, rng);
    }
    // relu away from its kink
    Matrix xr = x;
    for (Index i = 0; i < xr.size(); ++i)
      if (std::abs(xr.data()[i]) < 0.01) xr.data()[i] = 0.5;
    auto relu_loss = [&] { return project(nn::relu<double>(xr), c); };
    fd::check(rep, "relu", xr, nn::relu_backward<double>(nn::relu<double>(xr), c), relu_loss, 0, rng);
  }
  for (auto [in, hid] : {std::pair{64, 64}, std::pair{2, 1}}) {
    nn::ParamStore store;
    auto cell = nn::make_gru(store, "gru", in, hid, rng);
    Matrix x = fd::random_matrix(in, 3, rng);
    Matrix h = fd::random_matrix(hid, 3, rng, 0.5);
    const Matrix c = fd::random_matrix(hid, 3, rng);
    auto loss = [&] { return project(nn::gru_cell(cell, x, h), c); };
    nn::GruCache<double> cache;
    nn::gru_cell(cell, x, h, &cache);
    auto g = nn::gru_cell_backward(cell, cache, c);
    fd::check_store(rep, store, loss, 100, rng);
    fd::check(rep, "gru.x", x, g.dx, loss, 0, rng);
    fd::check(rep, "gru.h", h, g.dh, loss, 0, rng);
  }
  for (bool normalize : {true, false}) {
    Matrix q = fd::random_matrix(32, 3, rng);
    std::vector<Matrix> keys, values;
    for (int j = 0; j < 3; ++j) {
      keys.push_back(fd::random_matrix(32, 3, rng));
      values.push_back(fd::random_matrix(32, 3, rng));
    }
    const Matrix cw = fd::random_matrix(3, 3, rng), cm = fd::random_matrix(32, 3, rng);
    auto loss = [&] {
      auto r = nn::scaled_dot<double>(q, keys, values, std::sqrt(32.0), normalize);
      return project(r.weights, cw) + project(r.mixed, cm);
    };
    nn::ScaledDotCache<double> cache;
    nn::scaled_dot<double>(q, keys, values, std::sqrt(32.0), normalize, &cache);
    auto g = nn::scaled_dot_backward<double>(cache, cw, cm);
    fd::check(rep, "attn.q", q, g.dq, loss, 0, rng);
    for (int j = 0; j < 3; ++j) {
      fd::check(rep, "attn.k", keys[j], g.dkeys[j], loss, 0, rng);
      fd::check(rep, "attn.v", values[j], g.dvalues[j], loss, 0, rng);
    }
  }
  return rep;
}

fd::Report actor_gradients(const ActorConfig& cfg, std::uint64_t seed, int per_param) {
  std::mt19937_64 rng(seed);
  policy::Actor actor(cfg, "agent0", rng);
  const Index b = 3;
  const int k = cfg.neighbors();
  policy::ActorInput in = random_input(cfg, b, rng);
  Matrix h = fd::random_matrix(cfg.head_hidden, b, rng, 0.5);
  Matrix ph = fd::random_matrix(k, b, rng, 0.5);

  policy::ActorUpstream up;
  up.dq = fd::random_matrix(cfg.n_actions, b, rng);
  up.dagent_hidden = fd::random_matrix(cfg.head_hidden, b, rng);
  if (cfg.attention) {
    up.dsr = fd::random_matrix(k, b, rng);
    up.dattention = fd::random_matrix(k, b, rng);
    up.dpair_hidden = fd::random_matrix(k, b, rng);
  }
  auto loss = [&] {
    policy::ActorOutput o = actor.forward(in, h, ph);
    double l = project(o.q, up.dq) + project(o.agent_hidden, up.dagent_hidden);
    if (cfg.attention)
      l += project(o.sr, up.dsr) + project(o.attention, up.dattention) + project(o.pair_hidden, up.dpair_hidden);
    return l;
  };

  policy::ActorCache cache;
  actor.forward(in, h, ph, &cache);
  actor.params().zero_grad();
  policy::ActorInputGrad g = actor.backward(cache, up);

  fd::Report rep;
  fd::check_store(rep, actor.params(), loss, per_param, rng);
  fd::check(rep, "own", in.own, g.down, loss, 0, rng);
  fd::check(rep, "agent_hidden", h, g.dagent_hidden, loss, 0, rng);
  if (cfg.attention) {
    for (int j = 0; j < k; ++j) fd::check(rep, "other", in.other[j], g.dother[j], loss, 0, rng);
    fd::check(rep, "inbox", in.inbox, g.dinbox, loss, 0, rng);
    fd::check(rep, "pair_hidden", ph, g.dpair_hidden, loss, 0, rng);
  }
  return rep;
}

fd::Report mixer_gradients(std::uint64_t seed, int per_param) {
  std::mt19937_64 rng(seed);
  qmix::Mixer mixer({4, 180, 32}, rng);
  const Index b = 3;
  Matrix u = fd::random_matrix(4, b, rng, 2.0);
  const Matrix c = fd::random_matrix(1, b, rng);
  // State entries are bounded by 1, so one step moves each kink input by
  // at most kStep.
  auto clear_of_kinks = [&](const Matrix& st) {
    qmix::MixerCache probe;
    mixer.mix(u, st, &probe);
    const auto& p = mixer.params();
    const Matrix relu_in =
        (p.at("mixer/hyper_b2_in/weight").value * st).colwise() + p.at("mixer/hyper_b2_in/bias").value.col(0);
    const double margin = 5 * fd::kStep;
    return probe.w1_raw.cwiseAbs().minCoeff() > margin && probe.w2_raw.cwiseAbs().minCoeff() > margin &&
           relu_in.cwiseAbs().minCoeff() > margin;
  };
  Matrix s = fd::random_matrix(180, b, rng);
  while (!clear_of_kinks(s)) s = fd::random_matrix(180, b, rng);

  auto loss = [&] { return project(mixer.mix(u, s), c); };
  qmix::MixerCache cache;
  mixer.mix(u, s, &cache);
  mixer.params().zero_grad();
  const Matrix du = mixer.backward(cache, c);
  fd::Report rep;
  fd::check_store(rep, mixer.params(), loss, per_param, rng);
  fd::check(rep, "u", u, du, loss, 0, rng);
  return rep;
}

fd::Report chain_gradients(const RunConfig& cfg, std::uint64_t seed, int per_param) {
  nn::Rng rng(seed);
  train::Learner learner(cfg, rng);
  // Make the target differ from the online network.
  for (auto* s : learner.stores())
    s->for_each([&](const std::string&, nn::Param<double>& p) { p.value.array() *= 1.1; });

  env::UavEnv env(cfg.env);
  const auto mode = cfg.baseline ? policy::ExchangeMode::kNone : cfg.exchange;
  std::vector<train::Episode> eps;
  for (std::uint64_t i = 0; i < 2; ++i)
    eps.push_back(train::Episode::from_trace(run_episode(env, learner.actors, mode, 0.5, rng, seed + i)));
  std::vector<const train::Episode*> batch;
  for (const auto& e : eps) batch.push_back(&e);

  learner.zero_grad();
  learner.td_loss(batch, true);
  std::mt19937_64 pick(seed);
  fd::Report rep;
  auto loss = [&] { return learner.td_loss(batch, false); };
  for (auto* s : learner.stores()) fd::check_store(rep, *s, loss, per_param, pick);
  return rep;
}

int mixer_monotonicity_violations(int trials) {
  int violations = 0;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(1000 + std::uint64_t(trial));
    qmix::Mixer mixer({4, 180, 32}, rng);
    const Matrix s = fd::random_matrix(180, 1, rng, 2.0);
    const Matrix u = fd::random_matrix(4, 1, rng, 5.0);
    const double base = mixer.mix(u, s)(0, 0);
    std::uniform_real_distribution<double> bump(1e-3, 3.0);
    bool bad = false;
    for (int a = 0; a < 4; ++a) {
      Matrix up = u;
      up(a, 0) += bump(rng);
      if (mixer.mix(up, s)(0, 0) < base) bad = true;
    }
    qmix::MixerCache cache;
    mixer.mix(u, s, &cache);
    if ((mixer.backward(cache, Matrix::Ones(1, 1)).array() < 0.0).any()) bad = true;
    violations += bad;
  }
  return violations;
}

std::string random_play_log(std::uint64_t seed, int episodes) {
  env::UavEnv env(env::EnvConfig{});
  env::Rng policy(seed * 7919 + 1);
  std::uniform_int_distribution<int> pick(0, env::kNumActions - 1);
  std::ostringstream log;
  for (int e = 0; e < episodes; ++e) {
    env.reset(seed + std::uint64_t(e));
    env::write_record(log, env::make_record(e, env.world(), nullptr, 0.0));
    while (!env.done()) {
      std::vector<int> joint(4);
      for (auto& a : joint) a = pick(policy);
      auto res = env.step(joint);
      env::write_record(log, env::make_record(e, env.world(), &res.info, res.reward));
    }
  }
  return log.str();
}

RewardAudit audit_rewards(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line;
  env::TrajectoryRecord prev;
  RewardAudit audit;
  while (std::getline(in, line)) {
    env::TrajectoryRecord rec = env::parse_record(line);
    if (rec.slot > 0) {
      ++audit.checked;
      if (brute_force_reward(rec.agents, prev.agents, rec.target, prev.target) != rec.reward) ++audit.mismatches;
    }
    prev = rec;
  }
  return audit;
}

}  // namespace checks
