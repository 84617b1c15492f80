#pragma once

// Integer EWMA with stability shift: alpha = 1/2^s, accumulator kept in
// fixed point so the filter runs without floating-point arithmetic.

#include <cstdint>
#include <stdexcept>

#include "handoff/channel.hpp"

namespace handoff {

struct FilterConfig {
  int stability_shift = 6;   // s; alpha = 1/2^s
  int fraction_bits = 16;    // fixed-point precision of the accumulator
  std::int64_t staleness_ticks = 0;  // 0 = filters never go stale

  void validate() const {
    if (stability_shift < 0)
      throw std::invalid_argument("filter.stability_shift: must be >= 0");
    if (fraction_bits < stability_shift)
      throw std::invalid_argument(
          "filter.fraction_bits: must be >= stability_shift");
    if (fraction_bits > 40)
      throw std::invalid_argument("filter.fraction_bits: too large");
    if (staleness_ticks < 0)
      throw std::invalid_argument("filter.staleness_ticks: must be >= 0");
  }
};

class EwmaFilter {
 public:
  bool initialized() const { return initialized_; }
  std::int64_t last_update_tick() const { return last_tick_; }

  bool stale(std::int64_t now, const FilterConfig& cfg) const {
    return initialized_ && cfg.staleness_ticks > 0 &&
           now - last_tick_ > cfg.staleness_ticks;
  }

  void reset() {
    initialized_ = false;
    acc_ = 0;
    last_tick_ = 0;
  }

  // First sample seeds the accumulator exactly; afterwards
  //   acc += round((raw_fixed - acc) / 2^s)
  // with round-to-nearest on the shift so truncation bias stays bounded.
  void update(int raw_rssi, std::int64_t tick, const FilterConfig& cfg) {
    if (raw_rssi < kRssiMin || raw_rssi > kRssiMax)
      throw std::out_of_range("EwmaFilter::update: raw_rssi outside [0,70]");
    if (initialized_ && tick < last_tick_)
      throw std::invalid_argument("EwmaFilter::update: tick went backwards");
    if (stale(tick, cfg)) reset();

    const std::int64_t raw_fixed = static_cast<std::int64_t>(raw_rssi)
                                   << cfg.fraction_bits;
    if (!initialized_) {
      acc_ = raw_fixed;
      initialized_ = true;
    } else {
      const int s = cfg.stability_shift;
      std::int64_t diff = raw_fixed - acc_;
      if (s == 0) {
        acc_ = raw_fixed;
      } else {
        acc_ += (diff + (std::int64_t{1} << (s - 1))) >> s;
      }
    }
    last_tick_ = tick;
  }

  double smoothed(const FilterConfig& cfg) const {
    if (!initialized_)
      throw std::logic_error("EwmaFilter::smoothed: no samples yet");
    return static_cast<double>(acc_) /
           static_cast<double>(std::int64_t{1} << cfg.fraction_bits);
  }

  std::int64_t raw_accumulator() const { return acc_; }

 private:
  std::int64_t acc_ = 0;
  bool initialized_ = false;
  std::int64_t last_tick_ = 0;
};

}  // namespace handoff
