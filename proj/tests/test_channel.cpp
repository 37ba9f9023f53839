#include "gaxnet/channel.hpp"
#include "gaxnet/types.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace gaxnet;
using namespace gaxnet::channel;

namespace {

// Reference values from tests/oracle/channel_oracle.py (mpmath, 60 digits).
constexpr double kQInv1e7 = 5.1993375821928169;
constexpr double kPl0At100 = 79.46885671894284;
constexpr double kPl500At200 = 105.06328552652583;
constexpr double kPl938AtDefault = 143.42589589255956;
constexpr double kSnr938AtDefault = 1.4368466201684369;
constexpr double kRequiredSnrTmax = 1.4368466201684421;
constexpr double kRangeTmaxDefault = 937.99999995607257;
constexpr double kLatency938Default = 2.8800000000000074e-5;
constexpr double kRangeTmaxAt10 = 18567.573423508972;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("max transmission time is payload over bandwidth") {
  ChannelParams p;
  CHECK(max_transmission_time(p) == 576.0 / 20e6);
  CHECK(max_transmission_time(p) == doctest::Approx(28.8e-6).epsilon(1e-15));
}

TEST_CASE("q function and its inverse") {
  CHECK(q_function(0.0) == 0.5);
  CHECK(q_function(-3.0) + q_function(3.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rel(q_function_inv(1e-7), kQInv1e7) < 1e-10);
  // Independent closed form: Q^-1(p) = sqrt(2) erfc^-1(2p).
  for (double p : {0.4, 0.1, 1e-3, 1e-7, 1e-12})
    CHECK(std::abs(q_function_inv(p) - std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p)) < 1e-9);

  double worst = 0.0;
  for (int i = 0; i <= 600; ++i) {
    const double x = i * 0.01;
    worst = std::max(worst, std::abs(q_function_inv(q_function(x)) - x));
  }
  CHECK(worst < 1e-6);
  CHECK_THROWS_AS(q_function_inv(0.0), std::domain_error);
  CHECK_THROWS_AS(q_function_inv(1.0), std::domain_error);
}

TEST_CASE("path loss and snr against the high-precision oracle") {
  ChannelParams p;
  CHECK(rel(path_loss(0.0, 100.0, p), kPl0At100) < 1e-13);
  CHECK(rel(path_loss(500.0, 200.0, p), kPl500At200) < 1e-13);
  CHECK(rel(path_loss(938.0, p.altitude, p), kPl938AtDefault) < 1e-13);
  CHECK(rel(snr(938.0, p.altitude, p), kSnr938AtDefault) < 1e-11);
  CHECK_THROWS_AS(path_loss(-1.0, 100.0, p), std::domain_error);
  CHECK_THROWS_AS(path_loss(1.0, 0.0, p), std::domain_error);

  // Monotone in distance at fixed altitude.
  double prev = path_loss(0.0, 500.0, p);
  for (double d = 10.0; d < 5000.0; d += 10.0) {
    const double cur = path_loss(d, 500.0, p);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("error rate shape") {
  ChannelParams p;
  const double t = max_transmission_time(p);
  CHECK(error_rate(1.0, t, p) > error_rate(2.0, t, p));
  CHECK(error_rate(1.0, t, p) > error_rate(1.0, 2 * t, p));
  CHECK_THROWS_AS(error_rate(0.0, t, p), std::domain_error);
  CHECK_THROWS_AS(error_rate(1.0, 0.0, p), std::domain_error);
}

TEST_CASE("throughput at the operating point carries exactly the payload") {
  ChannelParams p;
  const double t = max_transmission_time(p);
  const double s = required_snr(1e-7, t, p);
  // W T nats-per-use budget equals L_B ln 2 when R_s = L_B / T.
  const double dispersion = 1.0 - std::pow(1.0 + s, -2.0);
  const double expected = std::log1p(s) - std::sqrt(dispersion / (p.bandwidth * t)) * q_function_inv(1e-7);
  CHECK(rel(expected, p.payload_bits * std::numbers::ln2 / (p.bandwidth * t)) < 1e-8);
  CHECK(achievable_throughput(s, 0.5, p) == doctest::Approx(std::log1p(s)).epsilon(1e-15));
}

TEST_CASE("inverse solvers compose") {
  ChannelParams p;
  const double t = max_transmission_time(p);
  const double s = required_snr(1e-7, t, p);
  CHECK(rel(s, kRequiredSnrTmax) < 1e-9);
  CHECK(rel(error_rate(s, t, p), 1e-7) < 1e-6);

  const double d = urllc_range(1e-7, t, p);
  CHECK(rel(d, kRangeTmaxDefault) < 1e-9);
  CHECK(std::abs(d - 938.0) <= 1.0);
  CHECK(rel(path_loss(d, p.altitude, p), path_loss_threshold(1e-7, t, p)) < 1e-12);
  CHECK(rel(error_rate(snr(d, p.altitude, p), t, p), 1e-7) < 1e-6);
  CHECK(rel(min_latency(snr(d, p.altitude, p), 1e-7, p), t) < 1e-6);

  const double lat = min_latency(snr(938.0, p.altitude, p), 1e-7, p);
  CHECK(rel(lat, kLatency938Default) < 1e-9);
  CHECK(lat <= 39e-6);

  // Beyond the range the requirement fails, inside it holds.
  CHECK(error_rate(snr(d + 1.0, p.altitude, p), t, p) > 1e-7);
  CHECK(error_rate(snr(d - 1.0, p.altitude, p), t, p) < 1e-7);
}

TEST_CASE("latency saturates when the link is hopeless") {
  ChannelParams p;
  CHECK(min_latency(1e-9, 1e-7, p) == kLatencySaturated);
  CHECK_THROWS_AS(required_snr(0.7, 1e-5, p), std::domain_error);
}

TEST_CASE("range solver reports an unbracketed requirement") {
  ChannelParams p;
  p.altitude = 10.0;
  CHECK_THROWS_AS(urllc_range(1e-7, max_transmission_time(p), p), SolverError);
  CHECK(rel(urllc_range(1e-7, max_transmission_time(p), p, 1e5), kRangeTmaxAt10) < 1e-9);
}

TEST_CASE("altitude calibration") {
  ChannelParams p;
  const double t = max_transmission_time(p);
  auto wide = calibrate_altitude(938.0, 1e-7, t, p, 10.0, 400000.0);
  CHECK(wide.achieved);
  CHECK(std::abs(wide.range - 938.0) <= 1.0);
  CHECK(rel(wide.altitude, p.altitude) < 1e-9);
}
