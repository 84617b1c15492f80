#pragma once

// Dual-hysteresis handoff trigger: lambda_good above the beta threshold,
// lambda_bad plus a packet-loss gate below, next node taken from a
// precomputed route plan.

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace handoff {

struct TriggerConfig {
  double beta = 25.0;
  double lambda_good = 6.0;
  double lambda_bad = 3.0;
  double loss_gate_pl = 0.5;
  std::int64_t decision_period_ticks = 100;
  std::int64_t probe_period_ticks = 250;
  int loss_window = 32;

  void validate() const {
    if (!(lambda_bad < lambda_good))
      throw std::invalid_argument("trigger: lambda_bad must be < lambda_good");
    if (loss_gate_pl < 0.0 || loss_gate_pl > 1.0)
      throw std::invalid_argument("trigger.loss_gate_pl: must be in [0,1]");
    if (beta < 0.0 || beta > 70.0)
      throw std::invalid_argument("trigger.beta: must be in [0,70]");
    if (decision_period_ticks <= 0)
      throw std::invalid_argument("trigger.decision_period_ticks: must be > 0");
    if (probe_period_ticks <= 0)
      throw std::invalid_argument("trigger.probe_period_ticks: must be > 0");
    if (loss_window <= 0)
      throw std::invalid_argument("trigger.loss_window: must be > 0");
  }
};

enum class Region { good, bad };

enum class Reason {
  good_margin_met,
  bad_margin_and_loss_ok,
  margin_not_met,
  loss_gate_blocked,
  next_unmeasured,
};

inline const char* to_string(Region r) {
  return r == Region::good ? "good" : "bad";
}

inline const char* to_string(Reason r) {
  switch (r) {
    case Reason::good_margin_met: return "good_margin_met";
    case Reason::bad_margin_and_loss_ok: return "bad_margin_and_loss_ok";
    case Reason::margin_not_met: return "margin_not_met";
    case Reason::loss_gate_blocked: return "loss_gate_blocked";
    case Reason::next_unmeasured: return "next_unmeasured";
  }
  return "?";
}

struct TriggerDecision {
  std::int64_t tick = 0;
  bool fired = false;
  Region region = Region::good;
  double rssi_curr = 0.0;
  std::optional<double> rssi_next;
  std::optional<double> next_loss;
  Reason reason = Reason::margin_not_met;
};

// The triggering rule. In the good region (curr >= beta) the next node
// must lead by lambda_good; in the bad region lambda_bad suffices but
// the next link's measured loss must stay under loss_gate_pl. Missing
// next-link measurements never fire.
inline TriggerDecision evaluate(const TriggerConfig& cfg, double rssi_curr,
                                std::optional<double> rssi_next,
                                std::optional<double> next_loss,
                                std::int64_t tick) {
  TriggerDecision d;
  d.tick = tick;
  d.rssi_curr = rssi_curr;
  d.rssi_next = rssi_next;
  d.next_loss = next_loss;
  d.region = rssi_curr >= cfg.beta ? Region::good : Region::bad;

  if (d.region == Region::good) {
    if (!rssi_next) {
      d.reason = Reason::next_unmeasured;
    } else if (*rssi_next >= rssi_curr + cfg.lambda_good) {
      d.fired = true;
      d.reason = Reason::good_margin_met;
    } else {
      d.reason = Reason::margin_not_met;
    }
  } else {
    if (!rssi_next || !next_loss) {
      d.reason = Reason::next_unmeasured;
    } else if (*rssi_next >= rssi_curr + cfg.lambda_bad) {
      if (*next_loss < cfg.loss_gate_pl) {
        d.fired = true;
        d.reason = Reason::bad_margin_and_loss_ok;
      } else {
        d.reason = Reason::loss_gate_blocked;
      }
    } else {
      d.reason = Reason::margin_not_met;
    }
  }
  return d;
}

// Ordered list of fixed nodes along the route; replaces channel scanning.
class NodePlan {
 public:
  NodePlan() = default;
  explicit NodePlan(std::vector<std::string> nodes)
      : nodes_(std::move(nodes)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (std::size_t j = i + 1; j < nodes_.size(); ++j)
        if (nodes_[i] == nodes_[j])
          throw std::invalid_argument("route: duplicate node id " + nodes_[i]);
    if (nodes_.empty())
      throw std::invalid_argument("route: empty node plan");
  }

  const std::vector<std::string>& nodes() const { return nodes_; }
  std::size_t current_index() const { return index_; }
  const std::string& current() const { return nodes_[index_]; }

  std::optional<std::string> next() const {
    if (index_ + 1 < nodes_.size()) return nodes_[index_ + 1];
    return std::nullopt;
  }

  void advance() {
    if (index_ + 1 >= nodes_.size())
      throw std::out_of_range("NodePlan::advance: end of route");
    ++index_;
  }

 private:
  std::vector<std::string> nodes_;
  std::size_t index_ = 0;
};

// Sliding-window packet-loss fraction over the last loss_window delivery
// outcomes. Unavailable until at least half a window has been observed.
class LossEstimator {
 public:
  explicit LossEstimator(int window = 32) : window_(window) {
    if (window <= 0) throw std::invalid_argument("LossEstimator: window <= 0");
  }

  void record(bool delivered) {
    outcomes_.push_back(delivered);
    if (!delivered) ++failures_;
    if (static_cast<int>(outcomes_.size()) > window_) {
      if (!outcomes_.front()) --failures_;
      outcomes_.pop_front();
    }
  }

  bool available() const {
    return 2 * static_cast<int>(outcomes_.size()) >= window_;
  }

  std::optional<double> fraction() const {
    if (!available()) return std::nullopt;
    return static_cast<double>(failures_) /
           static_cast<double>(outcomes_.size());
  }

  int samples() const { return static_cast<int>(outcomes_.size()); }

 private:
  int window_;
  int failures_ = 0;
  std::deque<bool> outcomes_;
};

}  // namespace handoff
