#pragma once

// Centralized training: whole-episode replay, a monotonic mixer over the
// per-agent utilities and a squared TD loss against periodically copied
// target networks. Gradients flow back through time and, in semantic
// exchange mode, across agents through the exchanged SRs.

#include "gaxnet/config.hpp"
#include "gaxnet/mixer.hpp"
#include "gaxnet/nn/checkpoint.hpp"
#include "gaxnet/policy.hpp"
#include "gaxnet/rollout.hpp"

#include <deque>
#include <filesystem>
#include <vector>

namespace gaxnet::train {

/// What replay keeps of an episode. Hidden and SR state start at zero, so
/// storing episodes whole is enough to rebuild every recurrence.
struct Episode {
  std::vector<std::vector<env::Observation>> observations;  // T+1 x N
  std::vector<Vector> states;                               // T+1
  std::vector<std::vector<int>> actions;                    // T x N
  std::vector<double> rewards;                              // T
  std::vector<bool> done;                                   // T

  int slots() const { return int(rewards.size()); }
  static Episode from_trace(const EpisodeTrace& tr);
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void push(Episode ep);  // evicts the oldest episode when full
  /// `count` distinct episodes, uniformly. Throws StateError when underfull.
  std::vector<const Episode*> sample(int count, nn::Rng& rng) const;

  int size() const { return int(episodes_.size()); }
  int capacity() const { return capacity_; }
  const Episode& at(int i) const { return episodes_.at(std::size_t(i)); }

 private:
  int capacity_;
  std::deque<Episode> episodes_;
};

/// Linear from epsilon_start to epsilon_floor over anneal_steps, then flat.
double epsilon_schedule(const TrainConfig& cfg, int iteration);

qmix::MixerConfig mixer_config(const RunConfig& cfg);

class Learner {
 public:
  Learner(const RunConfig& cfg, nn::Rng& rng);

  /// Sum of squared TD errors over every episode and slot of the batch.
  /// With `accumulate` the parameter gradients are added to the online
  /// stores (not zeroed first).
  double td_loss(const std::vector<const Episode*>& batch, bool accumulate);
  /// td_loss with gradients, optional global-norm clipping, one optimizer step.
  double td_update(const std::vector<const Episode*>& batch);
  void update_target();
  void zero_grad();

  /// Online stores, actors first.
  std::vector<nn::ParamStore*> stores();
  std::vector<const nn::ParamStore*> stores() const;
  std::vector<const nn::ParamStore*> actor_stores() const;

  std::vector<policy::Actor> actors, target_actors;
  qmix::Mixer mixer, target_mixer;

 private:
  RunConfig cfg_;
};

struct IterationLog {
  int iteration = 0;
  double epsilon = 0.0;
  double loss = 0.0;  // NaN before the first update
  double episode_reward = 0.0;
  int collisions = 0;
  int in_range = 0;
};

struct TrainResult {
  std::vector<IterationLog> log;
  std::vector<policy::Actor> actors;
  std::filesystem::path final_checkpoint;  // empty when nothing was written
};

/// Moving average of the last `window` episode rewards (fewer at the start).
double moving_average_tail(const std::vector<IterationLog>& log, int window);

/// Runs the full loop. With a non-empty out_dir writes train.csv,
/// trajectory.jsonl (if enabled), checkpoints and run_manifest.json.
TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir);

nn::CheckpointManifest make_manifest(const RunConfig& cfg, std::int64_t iteration);

}  // namespace gaxnet::train
