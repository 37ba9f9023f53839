#pragma once

// Checks shared by the unit tests and the acceptance binary.

#include "fd.hpp"

#include "gaxnet/config.hpp"
#include "gaxnet/policy.hpp"

#include <cstdint>
#include <string>

namespace checks {

/// Every differentiable op at production widths.
fd::Report ops_gradients(std::uint64_t seed);
/// One actor step, all outputs against parameters and every input.
fd::Report actor_gradients(const gaxnet::policy::ActorConfig& cfg, std::uint64_t seed, int per_param);
/// Mixer output against parameters and utilities, with the state resampled
/// until no |.| or relu input lies within a few finite-difference steps of zero.
fd::Report mixer_gradients(std::uint64_t seed, int per_param);
/// TD loss of a short batch through observations, actors and mixer.
fd::Report chain_gradients(const gaxnet::RunConfig& cfg, std::uint64_t seed, int per_param);

/// Trials in which raising one utility lowered Q_tot or dQ_tot/du < 0.
int mixer_monotonicity_violations(int trials);

/// Random-policy episodes logged as trajectory JSONL.
std::string random_play_log(std::uint64_t seed, int episodes);
struct RewardAudit {
  int checked = 0;
  int mismatches = 0;
};
/// Recomputes every logged reward from positions alone.
RewardAudit audit_rewards(const std::string& jsonl);

}  // namespace checks
