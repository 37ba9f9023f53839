#pragma once

// Air-to-ground URLLC link budget: mean path loss with elevation-dependent
// LoS probability, SNR, finite-blocklength error rate and the inverse
// solvers that turn an (error, latency) requirement into a coverage radius.

#include <cmath>
#include <limits>

namespace gaxnet::channel {

struct ChannelParams {
  double alpha = 9.61;
  double beta = 0.16;
  double eta_los = 1.0;   // dB
  double eta_nlos = 20.0; // dB
  double carrier_freq = 2e9;
  double light_speed = 299792458.0;
  double tx_power = 46.0;     // dBm
  double noise_power = -99.0; // dBm
  double bandwidth = 20e6;
  double payload_bits = 576.0;
  // Effective altitude that puts the URLLC range at 938 m for
  // (1e-7, L_B/W). Produced by `gaxnet calibrate-altitude`; see README.
  double altitude = 157704.08751095791;

  void validate() const;
};

struct UrllcRequirement {
  double target_error = 1e-7;
  double target_latency = 39e-6;

  void validate() const;
};

inline constexpr double kLatencySaturated = std::numeric_limits<double>::infinity();

/// Power ratio conversions; all dB quantities in the library go through these.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// L_B / W, the airtime of one payload at one symbol per hertz.
double max_transmission_time(const ChannelParams& p);

double path_loss(double distance, double altitude, const ChannelParams& p);
double snr(double distance, double altitude, const ChannelParams& p);

double q_function(double x);
/// Bracketed bisection on [-40, 40] until the bracket is below 1e-10.
double q_function_inv(double prob);

/// Normal-approximation argument f(SNR) for a transmission of `duration`
/// seconds carrying payload_bits, i.e. rate term L_B*ln2/(W*T) nats/use.
double dispersion_argument(double snr_linear, double duration, const ChannelParams& p);
double error_rate(double snr_linear, double duration, const ChannelParams& p);
double achievable_throughput(double snr_linear, double eps0, const ChannelParams& p);

/// Smallest SNR with error_rate <= eps0. Throws SolverError when
/// [1e-6, 1e9] does not bracket the requirement.
double required_snr(double eps0, double duration, const ChannelParams& p);

/// Largest path loss that still meets the requirement.
double path_loss_threshold(double eps0, double duration, const ChannelParams& p);

/// Distance d* at which the path loss reaches the threshold, searched on
/// [0, max_distance]. Throws SolverError if the threshold is exceeded at
/// d = 0 or not reached by max_distance.
double urllc_range(double eps0, double duration, const ChannelParams& p,
                   double max_distance = 3750.0 * std::sqrt(2.0));

/// Shortest transmission duration meeting eps0, or kLatencySaturated if
/// even one second is not enough.
double min_latency(double snr_linear, double eps0, const ChannelParams& p);

struct AltitudeCalibration {
  double altitude = 0.0;
  double range = 0.0;   // d* at `altitude`
  bool achieved = false; // |range - target| <= tolerance
};

/// Solves for the altitude with urllc_range == target_range inside
/// [altitude_lo, altitude_hi]. When the bracket holds no solution the
/// closest achievable altitude (by a 1 m scan) is returned with
/// achieved == false. Ranges are searched out to `max_distance`.
AltitudeCalibration calibrate_altitude(double target_range, double eps0, double duration,
                                       const ChannelParams& p, double altitude_lo,
                                       double altitude_hi, double max_distance = 1e7,
                                       double tolerance = 1.0);

}  // namespace gaxnet::channel
