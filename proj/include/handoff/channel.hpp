#pragma once

// Synthetic RSSI channel: log-distance mean curve, additive Gaussian
// fading, optional close-range blinding notch, threshold loss model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace handoff {

inline constexpr int kRssiMin = 0;
inline constexpr int kRssiMax = 70;

enum class Direction { downlink, uplink };

inline const char* to_string(Direction d) {
  return d == Direction::downlink ? "downlink" : "uplink";
}

struct ChannelConfig {
  int peak_rssi = 45;               // mean RSSI at zero distance
  double pathloss_exponent = 2.0;   // decay steepness, > 0
  double range_m = 100.0;           // distance at which the mean hits rssi_floor
  double fading_stddev = 0.0;       // Gaussian sigma, RSSI units
  bool blinding_enabled = false;
  double blinding_radius_m = 0.0;
  int blinding_depth = 0;
  int rssi_floor = 0;
  int loss_knee = 26;               // no loss at or above this RSSI
  double loss_max = 0.4;            // loss probability at rssi_floor
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(0 <= rssi_floor && rssi_floor < loss_knee && loss_knee < peak_rssi &&
          peak_rssi <= kRssiMax))
      throw std::invalid_argument(
          "channel: need 0 <= rssi_floor < loss_knee < peak_rssi <= 70");
    if (loss_max < 0.0 || loss_max > 1.0)
      throw std::invalid_argument("channel.loss_max: must be in [0,1]");
    if (fading_stddev < 0.0)
      throw std::invalid_argument("channel.fading_stddev: must be >= 0");
    if (range_m <= 0.0)
      throw std::invalid_argument("channel.range_m: must be > 0");
    if (pathloss_exponent <= 0.0)
      throw std::invalid_argument("channel.pathloss_exponent: must be > 0");
    if (blinding_enabled && blinding_radius_m < 0.0)
      throw std::invalid_argument("channel.blinding_radius_m: must be >= 0");
  }
};

struct RssiSample {
  std::int64_t tick = 0;
  std::string node_id;
  int raw_rssi = 0;
  bool delivered = true;
  Direction direction = Direction::downlink;
};

// Mean RSSI over distance: log-distance decay
//   mean(d) = peak - 10 * n * log10(1 + d/d0)
// with the reference distance d0 calibrated so the mean reaches
// rssi_floor exactly at range_m. The exponent shapes the knee.
inline double mean_rssi(const ChannelConfig& cfg, double distance_m) {
  double d = std::abs(distance_m);
  double span = static_cast<double>(cfg.peak_rssi - cfg.rssi_floor);
  double d0 = cfg.range_m /
              (std::pow(10.0, span / (10.0 * cfg.pathloss_exponent)) - 1.0);
  double drop = 10.0 * cfg.pathloss_exponent * std::log10(1.0 + d / d0);
  double mean = cfg.peak_rssi - drop;
  if (cfg.blinding_enabled && d < cfg.blinding_radius_m)
    mean -= cfg.blinding_depth;
  return std::max(mean, static_cast<double>(cfg.rssi_floor));
}

// One fading-perturbed integer RSSI draw, clamped to the 0..70 scale.
template <typename Rng>
int sample_rssi(const ChannelConfig& cfg, double distance_m, Rng& rng) {
  double mean = mean_rssi(cfg, distance_m);
  if (cfg.fading_stddev > 0.0) {
    std::normal_distribution<double> fade(0.0, cfg.fading_stddev);
    mean += fade(rng);
  }
  long r = std::lround(mean);
  return static_cast<int>(std::clamp(r, static_cast<long>(kRssiMin),
                                     static_cast<long>(kRssiMax)));
}

// Per-packet loss probability: zero at/above the knee, linear ramp to
// loss_max at rssi_floor.
inline double loss_probability(const ChannelConfig& cfg, int raw_rssi) {
  if (raw_rssi >= cfg.loss_knee) return 0.0;
  double ramp = cfg.loss_max *
                static_cast<double>(cfg.loss_knee - raw_rssi) /
                static_cast<double>(cfg.loss_knee - cfg.rssi_floor);
  return std::clamp(ramp, 0.0, cfg.loss_max);
}

// Full per-packet draw: RSSI plus a Bernoulli delivery outcome.
template <typename Rng>
RssiSample sample_packet(const ChannelConfig& cfg, double distance_m,
                         std::int64_t tick, const std::string& node_id,
                         Direction dir, Rng& rng) {
  RssiSample s;
  s.tick = tick;
  s.node_id = node_id;
  s.direction = dir;
  s.raw_rssi = sample_rssi(cfg, distance_m, rng);
  double p = loss_probability(cfg, s.raw_rssi);
  if (p > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    s.delivered = u(rng) >= p;
  } else {
    s.delivered = true;
  }
  return s;
}

}  // namespace handoff
