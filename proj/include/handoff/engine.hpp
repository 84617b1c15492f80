#pragma once

// Link monitor (per-node EWMA filter + loss estimator) and the handoff
// engine that runs the trigger at the decision period, schedules probing
// traffic toward the next planned node, and advances the route plan.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "handoff/channel.hpp"
#include "handoff/ewma.hpp"
#include "handoff/trigger.hpp"

namespace handoff {

// Per-link measurement state fed by every observed packet, data or probe.
class LinkMonitor {
 public:
  LinkMonitor(FilterConfig filter_cfg, int loss_window)
      : filter_cfg_(filter_cfg), loss_window_(loss_window) {}

  void ingest(const RssiSample& s) {
    auto& link = links_.try_emplace(s.node_id, loss_window_).first->second;
    link.filter.update(s.raw_rssi, s.tick, filter_cfg_);
    link.loss.record(s.delivered);
    link.last_sample_tick = s.tick;
    link.seen = true;
  }

  std::optional<double> smoothed(const std::string& node,
                                 std::int64_t now) const {
    auto it = links_.find(node);
    if (it == links_.end()) return std::nullopt;
    const auto& f = it->second.filter;
    if (!f.initialized() || f.stale(now, filter_cfg_)) return std::nullopt;
    return f.smoothed(filter_cfg_);
  }

  std::optional<double> loss_fraction(const std::string& node) const {
    auto it = links_.find(node);
    if (it == links_.end()) return std::nullopt;
    return it->second.loss.fraction();
  }

  // Tick of the last sample from `node`, if any ever arrived.
  std::optional<std::int64_t> last_sample_tick(const std::string& node) const {
    auto it = links_.find(node);
    if (it == links_.end() || !it->second.seen) return std::nullopt;
    return it->second.last_sample_tick;
  }

  const FilterConfig& filter_config() const { return filter_cfg_; }

 private:
  struct Link {
    explicit Link(int loss_window) : loss(loss_window) {}
    EwmaFilter filter;
    LossEstimator loss;
    std::int64_t last_sample_tick = 0;
    bool seen = false;
  };

  FilterConfig filter_cfg_;
  int loss_window_;
  std::map<std::string, Link> links_;
};

struct ProbeDirective {
  std::string target_node;
  int count = 1;
};

struct HandoffCommand {
  std::string old_node;
  std::string new_node;
  std::int64_t tick = 0;
};

struct DecisionRecord {
  TriggerDecision decision;
  std::string current_node;
  std::optional<std::string> next_node;
};

class HandoffEngine {
 public:
  HandoffEngine(TriggerConfig cfg, NodePlan plan)
      : cfg_(cfg), plan_(std::move(plan)) {}

  const NodePlan& plan() const { return plan_; }
  const TriggerConfig& config() const { return cfg_; }
  const std::string& attached_node() const { return plan_.current(); }

  // One probe toward the next planned node per probing period, but only
  // while that node has been silent for at least a full period.
  std::vector<ProbeDirective> probe_schedule(const LinkMonitor& monitor,
                                             std::int64_t tick) const {
    std::vector<ProbeDirective> probes;
    auto next = plan_.next();
    if (!next) return probes;
    if (tick % cfg_.probe_period_ticks != 0) return probes;
    auto last = monitor.last_sample_tick(*next);
    if (!last || tick - *last >= cfg_.probe_period_ticks)
      probes.push_back({*next, 1});
    return probes;
  }

  // Runs the trigger on the smoothed link state. Returns the decision
  // taken (if one was evaluated) and the handoff command when it fired.
  struct CycleResult {
    std::optional<DecisionRecord> record;
    std::optional<HandoffCommand> command;
  };

  CycleResult decision_cycle(const LinkMonitor& monitor, std::int64_t tick) {
    CycleResult result;
    if (tick % cfg_.decision_period_ticks != 0) return result;
    // One-interval refractory window after each handoff.
    if (handed_off_ && tick - last_handoff_tick_ < cfg_.decision_period_ticks)
      return result;

    auto curr = monitor.smoothed(plan_.current(), tick);
    if (!curr) return result;  // nothing measured yet on the serving link

    auto next_id = plan_.next();
    std::optional<double> next_rssi, next_loss;
    if (next_id) {
      next_rssi = monitor.smoothed(*next_id, tick);
      next_loss = monitor.loss_fraction(*next_id);
    }

    TriggerDecision d = evaluate(cfg_, *curr, next_rssi, next_loss, tick);
    result.record = DecisionRecord{d, plan_.current(), next_id};

    if (d.fired) {
      HandoffCommand cmd{plan_.current(), *next_id, tick};
      plan_.advance();
      last_handoff_tick_ = tick;
      handed_off_ = true;
      result.command = cmd;
    }
    return result;
  }

 private:
  TriggerConfig cfg_;
  NodePlan plan_;
  std::int64_t last_handoff_tick_ = 0;
  bool handed_off_ = false;
};

}  // namespace handoff
