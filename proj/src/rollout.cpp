#include "gaxnet/rollout.hpp"

namespace gaxnet {

double EpisodeTrace::total_reward() const {
  double s = 0.0;
  for (double r : rewards) s += r;
  return s;
}

int EpisodeTrace::collision_pairs() const {
  int c = 0;
  for (const auto& i : infos) c += i.collision_pairs;
  return c;
}

int EpisodeTrace::in_range_count() const {
  int c = 0;
  for (const auto& i : infos)
    for (bool b : i.in_range) c += b;
  return c;
}

std::vector<policy::Actor> make_actors(const policy::ActorConfig& cfg, nn::Rng& rng) {
  std::vector<policy::Actor> actors;
  actors.reserve(std::size_t(cfg.n_agents));
  for (int n = 0; n < cfg.n_agents; ++n) actors.emplace_back(cfg, "agent" + std::to_string(n), rng);
  return actors;
}

EpisodeTrace run_episode(env::UavEnv& env, const std::vector<policy::Actor>& actors, policy::ExchangeMode mode,
                         double epsilon, nn::Rng& rng, std::uint64_t env_seed) {
  const int n = env.config().n_agents;
  if (int(actors.size()) != n) throw ShapeError("run_episode: need one actor per agent");
  const int k = n - 1;

  EpisodeTrace tr;
  tr.env_seed = env_seed;
  auto reset = env.reset(env_seed);
  tr.observations.push_back(std::move(reset.observations));
  tr.states.push_back(std::move(reset.state));
  tr.worlds.push_back(env.world());

  std::vector<policy::ActorState> states;
  for (const auto& a : actors) states.push_back(policy::ActorState::zeros(a.config(), 1));
  std::vector<std::vector<double>> sent(n, std::vector<double>(k, 0.0));

  while (!env.done()) {
    std::vector<policy::Actor::Decision> decisions;
    std::vector<int> joint(n);
    for (int m = 0; m < n; ++m) {
      std::vector<double> inbox(k);
      for (int j = 0; j < k; ++j) {
        const int s = neighbor_agent(m, j);
        inbox[j] = sent[s].empty() ? 0.0 : sent[s][neighbor_slot(s, m)];
      }
      decisions.push_back(actors[m].act(tr.observations.back()[m], inbox, states[m], epsilon, rng, mode));
      joint[m] = decisions.back().action;
    }
    for (int m = 0; m < n; ++m) sent[m] = decisions[m].outgoing;

    auto step = env.step(joint);
    tr.actions.push_back(joint);
    tr.rewards.push_back(step.reward);
    tr.done.push_back(step.done);
    tr.decisions.push_back(std::move(decisions));
    tr.infos.push_back(std::move(step.info));
    tr.observations.push_back(std::move(step.observations));
    tr.states.push_back(std::move(step.state));
    tr.worlds.push_back(env.world());
  }
  return tr;
}

}  // namespace gaxnet
