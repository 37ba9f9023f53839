// gaxnet: train, evaluate and inspect the channel from the command line.

#include "gaxnet/channel.hpp"
#include "gaxnet/config.hpp"
#include "gaxnet/eval.hpp"
#include "gaxnet/io.hpp"
#include "gaxnet/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

using namespace gaxnet;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool baseline = false;
  bool no_exchange = false;
  bool exchange_raw = false;
};

void add_common(CLI::App* cmd, Common& c, bool mode_flags) {
  cmd->add_option("--config", c.config, "key = value config file (defaults when omitted)");
  cmd->add_option("--seed", c.seed, "override the run seed");
  cmd->add_option("--out-dir", c.out_dir, "output directory");
  if (mode_flags) {
    cmd->add_flag("--baseline", c.baseline, "QMIX baseline: no attention, no exchange");
    auto* none = cmd->add_flag("--no-exchange", c.no_exchange, "keep attention, never deliver SR messages");
    auto* raw = cmd->add_flag("--exchange-raw", c.exchange_raw, "exchange raw attention weights instead of SRs");
    none->excludes(raw);
  }
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) cfg.train.seed = *c.seed;
  if (c.baseline) cfg.baseline = true;
  if (c.no_exchange) cfg.exchange = policy::ExchangeMode::kNone;
  if (c.exchange_raw) cfg.exchange = policy::ExchangeMode::kRaw;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAXNet multi-UAV URLLC tracking"};
  app.require_subcommand(1);

  Common train_opts;
  auto* train_cmd = app.add_subcommand("train", "train actors and mixer");
  add_common(train_cmd, train_opts, true);
  std::optional<int> iterations;
  train_cmd->add_option("--iterations", iterations, "override the iteration budget");

  Common eval_opts;
  std::string checkpoint;
  int episodes = 20;
  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  add_common(eval_cmd, eval_opts, true);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--episodes", episodes, "evaluation episodes");

  Common sym_opts;
  std::string sym_checkpoint;
  int sym_episodes = 20;
  auto* sym_cmd = app.add_subcommand("symmetry", "lagged SR symmetry of a checkpoint");
  add_common(sym_cmd, sym_opts, true);
  sym_cmd->add_option("--checkpoint", sym_checkpoint, "checkpoint file")->required();
  sym_cmd->add_option("--episodes", sym_episodes, "evaluation episodes");

  Common table_opts;
  int n_dist = 76, n_lat = 20;
  double d_max = 3750.0, t_lo = 5e-6, t_hi = 100e-6;
  auto* table_cmd = app.add_subcommand("channel-table", "error rate over distance x latency");
  add_common(table_cmd, table_opts, false);
  table_cmd->add_option("--distances", n_dist, "distance grid points on [0, --max-distance]");
  table_cmd->add_option("--max-distance", d_max, "metres");
  table_cmd->add_option("--latencies", n_lat, "latency grid points");
  table_cmd->add_option("--min-latency", t_lo, "seconds");
  table_cmd->add_option("--max-latency", t_hi, "seconds");

  Common cal_opts;
  double h_lo = 10.0, h_hi = 2000.0, target_range = 938.0;
  auto* cal_cmd = app.add_subcommand("calibrate-altitude", "altitude putting the URLLC range at a target");
  add_common(cal_cmd, cal_opts, false);
  cal_cmd->add_option("--target-range", target_range, "metres");
  cal_cmd->add_option("--min-altitude", h_lo, "bracket low end, metres");
  cal_cmd->add_option("--max-altitude", h_hi, "bracket high end, metres");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      RunConfig cfg = resolve(train_opts);
      if (iterations) cfg.train.iterations = *iterations;
      auto res = train::train(cfg, train_opts.out_dir);
      std::printf("mode=%s iterations=%d final_moving_average=%.6f checkpoint=%s\n", cfg.mode_name().c_str(),
                  cfg.train.iterations, train::moving_average_tail(res.log, 100), res.final_checkpoint.c_str());
    } else if (*eval_cmd) {
      const RunConfig cfg = resolve(eval_opts);
      auto s = eval::run_eval(cfg, checkpoint, episodes, cfg.train.seed, eval_opts.out_dir);
      std::printf("slots=%d collisions=%d fraction_meeting=%.6f mean_latency_s=%.9g symmetry_mse=%.6g\n", s.slots,
                  s.collision_events, s.fraction_meeting, s.mean_latency, s.symmetry.mse);
    } else if (*sym_cmd) {
      const RunConfig cfg = resolve(sym_opts);
      auto s = eval::evaluate(cfg, eval::load_actors(cfg, sym_checkpoint), sym_episodes, cfg.train.seed);
      nlohmann::json j{{"mode", cfg.mode_name()},
                       {"episodes", sym_episodes},
                       {"symmetry_mse", s.symmetry.mse},
                       {"symmetry_max_diff", s.symmetry.max_diff},
                       {"terms", s.symmetry.terms}};
      io::ensure_dir(sym_opts.out_dir);
      io::write_file(std::filesystem::path(sym_opts.out_dir) / "symmetry.json", j.dump(2) + "\n");
      std::printf("symmetry_mse=%.17g max_diff=%.17g\n", s.symmetry.mse, s.symmetry.max_diff);
    } else if (*table_cmd) {
      const RunConfig cfg = resolve(table_opts);
      auto t = eval::channel_table(cfg.channel, cfg.requirement, eval::linspace(0.0, d_max, n_dist),
                                   eval::linspace(t_lo, t_hi, n_lat));
      io::ensure_dir(table_opts.out_dir);
      io::write_file(std::filesystem::path(table_opts.out_dir) / "channel_table.csv", io::to_csv(t));
      std::printf("rows=%zu\n", t.rows.size());
    } else if (*cal_cmd) {
      const RunConfig cfg = resolve(cal_opts);
      const double dur = channel::max_transmission_time(cfg.channel);
      auto c = channel::calibrate_altitude(target_range, cfg.requirement.target_error, dur, cfg.channel, h_lo, h_hi);
      std::printf("altitude_m=%.17g range_m=%.17g achieved=%s\n", c.altitude, c.range, c.achieved ? "true" : "false");
      return c.achieved ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gaxnet: %s\n", e.what());
    return 2;
  }
  return 0;
}
