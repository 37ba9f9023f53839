#include "gaxnet/config.hpp"

#include "gaxnet/io.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace gaxnet {
namespace {

struct Field {
  std::string key;
  bool shapes_model;  // included in config_hash
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

template <typename T>
Field real(const std::string& key, bool shapes, T RunConfig::*outer, double T::*member) {
  return {key, shapes, [=](const RunConfig& c) { return io::format_double(c.*outer.*member); },
          [=](RunConfig& c, const std::string& v) { c.*outer.*member = to_double(key, v); }};
}

const std::vector<Field>& fields() {
  using env::EnvConfig;
  using channel::ChannelParams;
  using channel::UrllcRequirement;
  static const std::vector<Field> table = {
      // Environment.
      real(std::string("grid_side"), true, &RunConfig::env, &EnvConfig::grid_side),
      {"n_agents", true, [](const RunConfig& c) { return std::to_string(c.env.n_agents); },
       [](RunConfig& c, const std::string& v) { c.env.n_agents = int(to_int("n_agents", v)); }},
      real(std::string("uav_speed"), true, &RunConfig::env, &EnvConfig::uav_speed),
      real(std::string("target_speed"), true, &RunConfig::env, &EnvConfig::target_speed),
      real(std::string("urllc_range"), true, &RunConfig::env, &EnvConfig::urllc_range),
      real(std::string("collision_dist"), true, &RunConfig::env, &EnvConfig::collision_dist),
      real(std::string("slot_duration"), true, &RunConfig::env, &EnvConfig::slot_duration),
      {"steps_per_episode", true, [](const RunConfig& c) { return std::to_string(c.env.steps_per_episode); },
       [](RunConfig& c, const std::string& v) { c.env.steps_per_episode = int(to_int("steps_per_episode", v)); }},
      real(std::string("observe_radius"), true, &RunConfig::env, &EnvConfig::observe_radius),
      real(std::string("target_area_radius"), true, &RunConfig::env, &EnvConfig::target_area_radius),
      real(std::string("target_spawn_radius"), true, &RunConfig::env, &EnvConfig::target_spawn_radius),
      real(std::string("heading_jitter_deg"), true, &RunConfig::env, &EnvConfig::heading_jitter_deg),
      // Channel.
      real(std::string("alpha"), true, &RunConfig::channel, &ChannelParams::alpha),
      real(std::string("beta"), true, &RunConfig::channel, &ChannelParams::beta),
      real(std::string("eta_los"), true, &RunConfig::channel, &ChannelParams::eta_los),
      real(std::string("eta_nlos"), true, &RunConfig::channel, &ChannelParams::eta_nlos),
      real(std::string("carrier_freq"), true, &RunConfig::channel, &ChannelParams::carrier_freq),
      real(std::string("light_speed"), true, &RunConfig::channel, &ChannelParams::light_speed),
      real(std::string("tx_power_dbm"), true, &RunConfig::channel, &ChannelParams::tx_power),
      real(std::string("noise_power_dbm"), true, &RunConfig::channel, &ChannelParams::noise_power),
      real(std::string("bandwidth"), true, &RunConfig::channel, &ChannelParams::bandwidth),
      real(std::string("payload_bits"), true, &RunConfig::channel, &ChannelParams::payload_bits),
      real(std::string("altitude"), true, &RunConfig::channel, &ChannelParams::altitude),
      real(std::string("target_error"), true, &RunConfig::requirement, &UrllcRequirement::target_error),
      real(std::string("target_latency"), true, &RunConfig::requirement, &UrllcRequirement::target_latency),
      // Model.
      {"embed_dim", true, [](const RunConfig& c) { return std::to_string(c.embed_dim); },
       [](RunConfig& c, const std::string& v) { c.embed_dim = int(to_int("embed_dim", v)); }},
      {"attention_dim", true, [](const RunConfig& c) { return std::to_string(c.attention_dim); },
       [](RunConfig& c, const std::string& v) { c.attention_dim = int(to_int("attention_dim", v)); }},
      {"head_hidden", true, [](const RunConfig& c) { return std::to_string(c.head_hidden); },
       [](RunConfig& c, const std::string& v) { c.head_hidden = int(to_int("head_hidden", v)); }},
      {"mixing_dim", true, [](const RunConfig& c) { return std::to_string(c.mixing_dim); },
       [](RunConfig& c, const std::string& v) { c.mixing_dim = int(to_int("mixing_dim", v)); }},
      {"normalize_attention", true, [](const RunConfig& c) { return bool_text(c.normalize_attention); },
       [](RunConfig& c, const std::string& v) { c.normalize_attention = to_bool("normalize_attention", v); }},
      {"baseline", true, [](const RunConfig& c) { return bool_text(c.baseline); },
       [](RunConfig& c, const std::string& v) { c.baseline = to_bool("baseline", v); }},
      {"exchange", true, [](const RunConfig& c) { return to_string(c.exchange); },
       [](RunConfig& c, const std::string& v) { c.exchange = parse_exchange_mode(v); }},
      // Training schedule.
      {"iterations", false, [](const RunConfig& c) { return std::to_string(c.train.iterations); },
       [](RunConfig& c, const std::string& v) { c.train.iterations = int(to_int("iterations", v)); }},
      {"batch_size", false, [](const RunConfig& c) { return std::to_string(c.train.batch_size); },
       [](RunConfig& c, const std::string& v) { c.train.batch_size = int(to_int("batch_size", v)); }},
      real(std::string("lr_gaxnet"), false, &RunConfig::train, &TrainConfig::lr_gaxnet),
      real(std::string("lr_qmix"), false, &RunConfig::train, &TrainConfig::lr_qmix),
      real(std::string("gamma"), false, &RunConfig::train, &TrainConfig::gamma),
      real(std::string("epsilon_start"), false, &RunConfig::train, &TrainConfig::epsilon_start),
      real(std::string("epsilon_floor"), false, &RunConfig::train, &TrainConfig::epsilon_floor),
      {"anneal_steps", false, [](const RunConfig& c) { return std::to_string(c.train.anneal_steps); },
       [](RunConfig& c, const std::string& v) { c.train.anneal_steps = int(to_int("anneal_steps", v)); }},
      {"target_update_period", false, [](const RunConfig& c) { return std::to_string(c.train.target_update_period); },
       [](RunConfig& c, const std::string& v) {
         c.train.target_update_period = int(to_int("target_update_period", v));
       }},
      {"replay_capacity", false, [](const RunConfig& c) { return std::to_string(c.train.replay_capacity); },
       [](RunConfig& c, const std::string& v) { c.train.replay_capacity = int(to_int("replay_capacity", v)); }},
      {"checkpoint_period", false, [](const RunConfig& c) { return std::to_string(c.train.checkpoint_period); },
       [](RunConfig& c, const std::string& v) { c.train.checkpoint_period = int(to_int("checkpoint_period", v)); }},
      real(std::string("grad_clip"), false, &RunConfig::train, &TrainConfig::grad_clip),
      {"seed", false, [](const RunConfig& c) { return std::to_string(c.train.seed); },
       [](RunConfig& c, const std::string& v) { c.train.seed = std::uint64_t(to_int("seed", v)); }},
      {"log_trajectory", false, [](const RunConfig& c) { return bool_text(c.train.log_trajectory); },
       [](RunConfig& c, const std::string& v) { c.train.log_trajectory = to_bool("log_trajectory", v); }},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("train: iterations must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("train: gamma must be in [0, 1)");
  if (!(lr_gaxnet > 0.0) || !(lr_qmix > 0.0)) throw ConfigError("train: learning rates must be > 0");
  if (anneal_steps < 0) throw ConfigError("train: anneal_steps must be >= 0");
  if (target_update_period < 1) throw ConfigError("train: target_update_period must be >= 1");
  if (replay_capacity < batch_size) throw ConfigError("train: replay_capacity must be >= batch_size");
  if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0 && epsilon_start >= 0.0 && epsilon_start <= 1.0))
    throw ConfigError("train: epsilon values must be in [0, 1]");
}

void RunConfig::validate() const {
  env.validate();
  channel.validate();
  requirement.validate();
  actor_config().validate();
  if (mixing_dim < 1) throw ConfigError("mixing_dim must be >= 1");
  train.validate();
}

policy::ActorConfig RunConfig::actor_config() const {
  policy::ActorConfig a;
  a.n_agents = env.n_agents;
  a.obs_dim = env.observation_dim();
  a.embed_dim = embed_dim;
  a.attention_dim = attention_dim;
  a.head_hidden = head_hidden;
  a.attention = !baseline;
  a.normalize_attention = normalize_attention;
  return a;
}

std::string RunConfig::mode_name() const {
  if (baseline) return "qmix";
  switch (exchange) {
    case policy::ExchangeMode::kSemantic: return "gaxnet";
    case policy::ExchangeMode::kRaw: return "gaxnet-raw";
    case policy::ExchangeMode::kNone: return "gaxnet-noexchange";
  }
  return "gaxnet";
}

std::string to_string(policy::ExchangeMode mode) {
  switch (mode) {
    case policy::ExchangeMode::kSemantic: return "semantic";
    case policy::ExchangeMode::kRaw: return "raw";
    case policy::ExchangeMode::kNone: return "none";
  }
  return "semantic";
}

policy::ExchangeMode parse_exchange_mode(const std::string& s) {
  if (s == "semantic") return policy::ExchangeMode::kSemantic;
  if (s == "raw") return policy::ExchangeMode::kRaw;
  if (s == "none") return policy::ExchangeMode::kNone;
  throw ConfigError("config: exchange must be semantic, raw or none (got '" + s + "')");
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.key] = &f;

  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    auto it = index.find(key);
    if (it == index.end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config: duplicate key '" + key + "'");
    it->second->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(io::read_file(path)); }

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  std::string shaped;
  for (const auto& f : fields())
    if (f.shapes_model) shaped += f.key + "=" + f.get(cfg) + "\n";
  return io::fnv1a_hex(shaped);
}

}  // namespace gaxnet
