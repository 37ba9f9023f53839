#include "gaxnet/channel.hpp"

#include "gaxnet/types.hpp"

#include <boost/math/tools/roots.hpp>

#include <cstdint>
#include <numbers>
#include <string>

namespace gaxnet::channel {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::domain_error(std::string(what) + " must be finite");
}

// Runs boost's bisection with a relative-width stopping rule and returns
// the bracket [lo, hi] with f(lo) and f(hi) on opposite sides of zero.
template <typename F>
std::pair<double, double> bisect_bracket(F f, double lo, double hi, double rel_tol) {
  std::uintmax_t max_iter = 400;
  auto tol = [rel_tol](double a, double b) {
    return std::abs(b - a) <= rel_tol * std::max(std::abs(a), std::abs(b));
  };
  return boost::math::tools::bisect(f, lo, hi, tol, max_iter);
}

}  // namespace

void ChannelParams::validate() const {
  if (!(bandwidth > 0.0) || !(payload_bits > 0.0) || !(carrier_freq > 0.0) || !(altitude > 0.0) ||
      !(light_speed > 0.0)) {
    throw ConfigError("channel: bandwidth, payload_bits, carrier_freq, light_speed and altitude must be > 0");
  }
  if (eta_nlos < eta_los) throw ConfigError("channel: eta_nlos must be >= eta_los");
}

void UrllcRequirement::validate() const {
  if (!(target_error > 0.0 && target_error < 0.5)) throw ConfigError("requirement: target_error must be in (0, 0.5)");
  if (!(target_latency > 0.0)) throw ConfigError("requirement: target_latency must be > 0");
}

double max_transmission_time(const ChannelParams& p) { return p.payload_bits / p.bandwidth; }

double path_loss(double distance, double altitude, const ChannelParams& p) {
  require_finite(distance, "distance");
  require_finite(altitude, "altitude");
  if (distance < 0.0) throw std::domain_error("distance must be >= 0");
  if (!(altitude > 0.0)) throw std::domain_error("altitude must be > 0");

  const double elevation_deg = 180.0 / std::numbers::pi * std::atan2(altitude, distance);
  const double los_term =
      (p.eta_los - p.eta_nlos) / (1.0 + p.alpha * std::exp(-p.beta * (elevation_deg - p.alpha)));
  const double free_space = 10.0 * std::log10(altitude * altitude + distance * distance) +
                            20.0 * std::log10(4.0 * std::numbers::pi * p.carrier_freq / p.light_speed);
  return los_term + free_space + p.eta_nlos;
}

double snr(double distance, double altitude, const ChannelParams& p) {
  return db_to_linear(p.tx_power - p.noise_power) * std::pow(10.0, -path_loss(distance, altitude, p) / 10.0);
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_function_inv(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw std::domain_error("q_function_inv: probability must be in (0, 1)");
  std::uintmax_t max_iter = 200;
  auto [lo, hi] = boost::math::tools::bisect([prob](double x) { return q_function(x) - prob; }, -40.0, 40.0,
                                             [](double a, double b) { return std::abs(b - a) < 1e-10; }, max_iter);
  return 0.5 * (lo + hi);
}

double dispersion_argument(double snr_linear, double duration, const ChannelParams& p) {
  require_finite(snr_linear, "snr");
  require_finite(duration, "duration");
  if (!(snr_linear > 0.0)) throw std::domain_error("error_rate: snr must be > 0");
  if (!(duration > 0.0)) throw std::domain_error("error_rate: duration must be > 0");
  const double dispersion = 1.0 - std::pow(1.0 + snr_linear, -2.0);
  const double rate_nats = p.payload_bits * std::numbers::ln2 / (p.bandwidth * duration);
  return std::sqrt(p.bandwidth * duration / dispersion) * (std::log1p(snr_linear) - rate_nats);
}

double error_rate(double snr_linear, double duration, const ChannelParams& p) {
  return q_function(dispersion_argument(snr_linear, duration, p));
}

double achievable_throughput(double snr_linear, double eps0, const ChannelParams& p) {
  require_finite(snr_linear, "snr");
  if (!(snr_linear > 0.0)) throw std::domain_error("achievable_throughput: snr must be > 0");
  if (!(eps0 > 0.0 && eps0 <= 0.5)) throw std::domain_error("achievable_throughput: eps0 must be in (0, 0.5]");
  // Q^-1(0.5) is exactly zero; skip the solver's 1e-10 residual there.
  const double q_inv = eps0 == 0.5 ? 0.0 : q_function_inv(eps0);
  return std::log1p(snr_linear) - (1.0 - std::pow(1.0 + snr_linear, -2.0)) / p.payload_bits * q_inv;
}

double required_snr(double eps0, double duration, const ChannelParams& p) {
  if (!(eps0 > 0.0 && eps0 < 0.5)) throw std::domain_error("required_snr: eps0 must be in (0, 0.5)");
  constexpr double lo = 1e-6, hi = 1e9;
  auto excess = [&](double s) { return error_rate(s, duration, p) - eps0; };
  if (excess(lo) <= 0.0) return lo;
  if (excess(hi) > 0.0) throw SolverError("required_snr: requirement not met even at SNR = 1e9");
  return bisect_bracket(excess, lo, hi, 1e-15).second;
}

double path_loss_threshold(double eps0, double duration, const ChannelParams& p) {
  return (p.tx_power - p.noise_power) - linear_to_db(required_snr(eps0, duration, p));
}

double urllc_range(double eps0, double duration, const ChannelParams& p, double max_distance) {
  if (!(eps0 > 0.0 && eps0 < 0.5)) throw std::domain_error("urllc_range: eps0 must be in (0, 0.5)");
  // Bisect on the error rate itself (not the dB threshold) so the returned
  // distance meets eps0 exactly as error_rate() evaluates it.
  auto excess = [&](double d) { return error_rate(snr(d, p.altitude, p), duration, p) - eps0; };
  if (excess(0.0) > 0.0) throw SolverError("urllc_range: requirement unreachable directly below the UAV");
  if (excess(max_distance) < 0.0) {
    throw SolverError("urllc_range: requirement still met at the search bound " + std::to_string(max_distance) + " m");
  }
  // The low end still meets the requirement.
  return bisect_bracket(excess, 0.0, max_distance, 1e-13).first;
}

double min_latency(double snr_linear, double eps0, const ChannelParams& p) {
  if (!(eps0 > 0.0 && eps0 < 0.5)) throw std::domain_error("min_latency: eps0 must be in (0, 0.5)");
  constexpr double lo = 1e-9, hi = 1.0;
  auto excess = [&](double t) { return error_rate(snr_linear, t, p) - eps0; };
  if (excess(hi) > 0.0) return kLatencySaturated;
  if (excess(lo) <= 0.0) return lo;
  return bisect_bracket(excess, lo, hi, 1e-12).second;
}

AltitudeCalibration calibrate_altitude(double target_range, double eps0, double duration, const ChannelParams& p,
                                       double altitude_lo, double altitude_hi, double max_distance,
                                       double tolerance) {
  if (!(altitude_lo > 0.0 && altitude_hi > altitude_lo)) throw std::domain_error("calibrate_altitude: bad bracket");
  const double threshold = path_loss_threshold(eps0, duration, p);
  // d*(h) == target exactly when PL(target, h) sits on the threshold, since
  // PL is strictly increasing in d.
  auto excess = [&](double h) { return path_loss(target_range, h, p) - threshold; };

  auto range_at = [&](double h) {
    ChannelParams at = p;
    at.altitude = h;
    return urllc_range(eps0, duration, at, max_distance);
  };

  AltitudeCalibration out;
  const double g_lo = excess(altitude_lo);
  const double g_hi = excess(altitude_hi);
  if ((g_lo <= 0.0) != (g_hi <= 0.0)) {
    auto [lo, hi] = bisect_bracket(excess, altitude_lo, altitude_hi, 1e-14);
    out.altitude = 0.5 * (lo + hi);
    out.range = range_at(out.altitude);
    out.achieved = std::abs(out.range - target_range) <= tolerance;
    return out;
  }

  double best_gap = std::numeric_limits<double>::infinity();
  for (double h = altitude_lo; h <= altitude_hi; h += 1.0) {
    double d;
    try {
      d = range_at(h);
    } catch (const SolverError&) {
      continue;
    }
    if (std::abs(d - target_range) < best_gap) {
      best_gap = std::abs(d - target_range);
      out.altitude = h;
      out.range = d;
    }
  }
  if (!std::isfinite(best_gap)) throw SolverError("calibrate_altitude: no altitude in the bracket yields a finite range");
  out.achieved = best_gap <= tolerance;
  return out;
}

}  // namespace gaxnet::channel
