#pragma once

#include "gaxnet/channel.hpp"
#include "gaxnet/env.hpp"
#include "gaxnet/policy.hpp"

#include <cstdint>
#include <string>

namespace gaxnet {

struct TrainConfig {
  int iterations = 5000;
  int batch_size = 64;
  double lr_gaxnet = 8e-4;
  double lr_qmix = 1e-4;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_floor = 0.3;
  int anneal_steps = 1000;
  int target_update_period = 200;
  int replay_capacity = 5000;
  int checkpoint_period = 1000;
  double grad_clip = 0.0;  // global L2 norm; 0 disables
  std::uint64_t seed = 1;
  bool log_trajectory = true;

  void validate() const;
};

struct RunConfig {
  env::EnvConfig env;
  channel::ChannelParams channel;
  channel::UrllcRequirement requirement;
  int embed_dim = 64;
  int attention_dim = 32;
  int head_hidden = 64;
  int mixing_dim = 32;
  bool normalize_attention = true;
  bool baseline = false;  // QMIX mode: no attention, no exchange
  policy::ExchangeMode exchange = policy::ExchangeMode::kSemantic;
  TrainConfig train;

  void validate() const;
  policy::ActorConfig actor_config() const;
  double learning_rate() const { return baseline ? train.lr_qmix : train.lr_gaxnet; }
  std::string mode_name() const;
};

/// Flat `key = value` text; `#` starts a comment. Unknown keys and
/// malformed values raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical text listing every key, suitable for parse_config.
std::string to_text(const RunConfig& cfg);
/// FNV-1a over the keys that shape the model and environment (not the
/// training schedule or seed), as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

std::string to_string(policy::ExchangeMode mode);
policy::ExchangeMode parse_exchange_mode(const std::string& s);

}  // namespace gaxnet
