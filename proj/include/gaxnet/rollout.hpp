#pragma once

// Decentralized execution of one episode: every agent acts on its own
// observation plus the messages its neighbours sent in the previous slot.

#include "gaxnet/env.hpp"
#include "gaxnet/policy.hpp"

#include <cstdint>
#include <vector>

namespace gaxnet {

struct EpisodeTrace {
  std::uint64_t env_seed = 0;
  std::vector<std::vector<env::Observation>> observations;  // T+1 x N
  std::vector<Vector> states;                               // T+1
  std::vector<std::vector<int>> actions;                    // T x N
  std::vector<double> rewards;                              // T
  std::vector<bool> done;                                   // T
  std::vector<std::vector<policy::Actor::Decision>> decisions;  // T x N
  std::vector<env::StepInfo> infos;                         // T
  std::vector<env::WorldState> worlds;                      // T+1, worlds[0] after reset

  double total_reward() const;
  int collision_pairs() const;
  int in_range_count() const;  // agent-slots inside the URLLC range
};

/// Position of `receiver` in `sender`'s neighbour list (ascending index, self skipped).
inline int neighbor_slot(int sender, int receiver) { return receiver < sender ? receiver : receiver - 1; }
/// Agent index behind neighbour slot `j` of agent `self`.
inline int neighbor_agent(int self, int j) { return j < self ? j : j + 1; }

/// One independent actor per agent, prefixed "agent<n>", initialized in agent order.
std::vector<policy::Actor> make_actors(const policy::ActorConfig& cfg, nn::Rng& rng);

/// Resets `env` with `env_seed` and plays one episode. Each agent draws
/// its epsilon coin from `rng` in agent order every slot.
EpisodeTrace run_episode(env::UavEnv& env, const std::vector<policy::Actor>& actors, policy::ExchangeMode mode,
                         double epsilon, nn::Rng& rng, std::uint64_t env_seed);

}  // namespace gaxnet
