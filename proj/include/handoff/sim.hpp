#pragma once

// Deterministic fixed-step simulation: a mobile node traverses a linear
// route past fixed nodes, bidirectional traffic feeds the link monitor,
// the handoff engine fires label-switched path rewrites, and every event
// lands in a replayable trace.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "handoff/channel.hpp"
#include "handoff/engine.hpp"
#include "handoff/ewma.hpp"
#include "handoff/mpls.hpp"
#include "handoff/trigger.hpp"

namespace handoff {

// Temporary extra attenuation on one link (deep-fade injection).
struct FadeWindow {
  std::string node;
  double start_s = 0.0;
  double end_s = 0.0;
  double depth = 0.0;
};

struct FixedNode {
  std::string id;
  double position_m = 0.0;
  ChannelConfig channel;
};

struct Scenario {
  std::vector<FixedNode> fixed_nodes;
  double route_length_m = 0.0;
  double mobile_speed_mps = 1.0;
  int tick_hz = 1000;
  int traffic_pps = 75;
  int handoff_exec_delay_ms = 20;
  double duration_s = 0.0;  // 0 = derived from route length and speed
  std::uint64_t seed = 1;
  double traffic_rate_mbps = 6.0;  // trace metadata only
  std::vector<FadeWindow> fades;

  double duration() const {
    if (duration_s > 0.0) return duration_s;
    return route_length_m / mobile_speed_mps;
  }

  std::int64_t total_ticks() const {
    return static_cast<std::int64_t>(std::llround(duration() * tick_hz));
  }

  void validate() const {
    if (fixed_nodes.empty())
      throw std::invalid_argument("scenario.fixed_nodes: none defined");
    for (std::size_t i = 0; i < fixed_nodes.size(); ++i) {
      fixed_nodes[i].channel.validate();
      if (i > 0 && fixed_nodes[i].position_m <= fixed_nodes[i - 1].position_m)
        throw std::invalid_argument(
            "scenario.fixed_nodes: positions must be strictly increasing");
      for (std::size_t j = i + 1; j < fixed_nodes.size(); ++j)
        if (fixed_nodes[i].id == fixed_nodes[j].id)
          throw std::invalid_argument("scenario.fixed_nodes: duplicate id " +
                                      fixed_nodes[i].id);
    }
    if (tick_hz <= 0)
      throw std::invalid_argument("scenario.tick_hz: must be > 0");
    if (traffic_pps <= 0 || traffic_pps > tick_hz)
      throw std::invalid_argument(
          "scenario.traffic_pps: must be in (0, tick_hz]");
    if (route_length_m <= 0.0)
      throw std::invalid_argument("scenario.route_length_m: must be > 0");
    if (mobile_speed_mps < 0.0)
      throw std::invalid_argument("scenario.mobile_speed_mps: must be >= 0");
    if (mobile_speed_mps == 0.0 && duration_s <= 0.0)
      throw std::invalid_argument(
          "scenario: zero speed requires an explicit duration_s");
    if (handoff_exec_delay_ms < 0)
      throw std::invalid_argument(
          "scenario.handoff_exec_delay_ms: must be >= 0");
  }

  const FixedNode& node(const std::string& id) const {
    for (const auto& n : fixed_nodes)
      if (n.id == id) return n;
    throw std::invalid_argument("scenario: unknown node id " + id);
  }
};

enum class EventKind {
  sample,
  decision,
  handoff_start,
  handoff_complete,
  packet_tx,
  packet_drop,
  probe,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::sample: return "sample";
    case EventKind::decision: return "decision";
    case EventKind::handoff_start: return "handoff_start";
    case EventKind::handoff_complete: return "handoff_complete";
    case EventKind::packet_tx: return "packet_tx";
    case EventKind::packet_drop: return "packet_drop";
    case EventKind::probe: return "probe";
  }
  return "?";
}

struct SampleRecord {
  std::int64_t tick = 0;
  std::string node;
  Direction direction = Direction::downlink;
  int raw_rssi = 0;
  bool delivered = true;
  double smoothed_after = 0.0;  // filter output right after this sample
  bool probe = false;
};

struct GenericEvent {
  std::int64_t tick = 0;
  EventKind kind = EventKind::sample;
  std::string detail;
};

enum class SimMode { baseline, handoff };

struct TraceMeta {
  SimMode mode = SimMode::handoff;
  int tick_hz = 1000;
  std::uint64_t seed = 1;
  double duration_s = 0.0;
  double traffic_rate_mbps = 6.0;
  std::string initial_attachment;
};

struct SimTrace {
  TraceMeta meta;
  std::vector<SampleRecord> samples;
  std::vector<DecisionRecord> decisions;
  std::vector<HandoffCommand> handoffs;
  std::vector<GenericEvent> events;
  // Service-traffic accounting on the serving link only.
  std::int64_t offered_data_packets = 0;
  std::int64_t lost_data_packets = 0;

  double data_loss_fraction() const {
    return offered_data_packets == 0
               ? 0.0
               : static_cast<double>(lost_data_packets) /
                     static_cast<double>(offered_data_packets);
  }
};

// Per-second per-link aggregate recomputed from the raw sample list.
struct WindowStats {
  std::int64_t second = 0;
  std::string node;
  int samples = 0;
  int lost = 0;
  double mean_raw = 0.0;
  double mean_smoothed = 0.0;

  double loss_fraction() const {
    return samples == 0 ? 0.0 : static_cast<double>(lost) / samples;
  }
};

inline std::vector<WindowStats> aggregate(const SimTrace& trace) {
  std::map<std::pair<std::int64_t, std::string>, WindowStats> acc;
  for (const auto& s : trace.samples) {
    std::int64_t sec = s.tick / trace.meta.tick_hz;
    auto& w = acc[{sec, s.node}];
    w.second = sec;
    w.node = s.node;
    ++w.samples;
    if (!s.delivered) ++w.lost;
    w.mean_raw += s.raw_rssi;
    w.mean_smoothed += s.smoothed_after;
  }
  std::vector<WindowStats> out;
  out.reserve(acc.size());
  for (auto& [key, w] : acc) {
    w.mean_raw /= w.samples;
    w.mean_smoothed /= w.samples;
    out.push_back(std::move(w));
  }
  return out;
}

namespace detail {

inline double fade_depth_at(const Scenario& sc, const std::string& node,
                            std::int64_t tick) {
  double t = static_cast<double>(tick) / sc.tick_hz;
  double depth = 0.0;
  for (const auto& f : sc.fades)
    if (f.node == node && t >= f.start_s && t < f.end_s) depth += f.depth;
  return depth;
}

// Channel draw with optional injected fade applied to the mean.
template <typename Rng>
RssiSample draw_sample(const Scenario& sc, const FixedNode& node,
                       double mobile_pos, std::int64_t tick, Direction dir,
                       Rng& rng) {
  const ChannelConfig& cfg = node.channel;
  double mean = mean_rssi(cfg, mobile_pos - node.position_m);
  mean -= fade_depth_at(sc, node.id, tick);
  if (cfg.fading_stddev > 0.0) {
    std::normal_distribution<double> fade(0.0, cfg.fading_stddev);
    mean += fade(rng);
  }
  RssiSample s;
  s.tick = tick;
  s.node_id = node.id;
  s.direction = dir;
  s.raw_rssi = static_cast<int>(
      std::clamp(std::lround(mean), static_cast<long>(kRssiMin),
                 static_cast<long>(kRssiMax)));
  double p = loss_probability(cfg, s.raw_rssi);
  if (p > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    s.delivered = u(rng) >= p;
  } else {
    s.delivered = true;
  }
  return s;
}

inline std::string decision_detail(const DecisionRecord& r) {
  std::ostringstream os;
  os << "curr=" << r.current_node
     << ";next=" << (r.next_node ? *r.next_node : std::string("-"))
     << ";rssi_curr=" << r.decision.rssi_curr << ";rssi_next=";
  if (r.decision.rssi_next) os << *r.decision.rssi_next; else os << "-";
  os << ";next_loss=";
  if (r.decision.next_loss) os << *r.decision.next_loss; else os << "-";
  os << ";region=" << to_string(r.decision.region)
     << ";fired=" << (r.decision.fired ? 1 : 0)
     << ";reason=" << to_string(r.decision.reason);
  return os.str();
}

// Default single-entry LSP for the mobile node's service traffic.
inline mpls::ForwardingTables mobile_tables(const std::string& first_hop) {
  mpls::ForwardingTables t;
  mpls::Fec fec;
  fec.dst_port = 7;  // the simulator's service flow
  fec.proto = 17;
  t.ftn.emplace_back(fec, 0);
  t.nhlfe.push_back({mpls::LabelOp::push, 100, first_hop, "mobile"});
  return t;
}

inline constexpr mpls::FiveTuple kServiceTuple{0x0a000001, 0x0a0000fe, 40000,
                                               7, 17};

}  // namespace detail

struct RunOptions {
  SimMode mode = SimMode::handoff;
  // Baseline attachment; empty = first node of the route.
  std::string baseline_attach;
  // Optional pre-built forwarding tables for the mobile node; when empty
  // a single-LSP default is synthesized.
  std::optional<mpls::ForwardingTables> mobile_tables;
};

inline SimTrace run(const Scenario& sc, const TriggerConfig& trigger,
                    const FilterConfig& filter,
                    const std::vector<std::string>& route,
                    const RunOptions& opt = {}) {
  sc.validate();
  trigger.validate();
  filter.validate();
  NodePlan plan(route);
  for (const auto& id : route) sc.node(id);  // cross-reference check

  const bool engine_on = opt.mode == SimMode::handoff;
  std::string baseline_attach =
      opt.baseline_attach.empty() ? route.front() : opt.baseline_attach;
  sc.node(baseline_attach);

  SimTrace trace;
  trace.meta.mode = opt.mode;
  trace.meta.tick_hz = sc.tick_hz;
  trace.meta.seed = sc.seed;
  trace.meta.duration_s = sc.duration();
  trace.meta.traffic_rate_mbps = sc.traffic_rate_mbps;
  trace.meta.initial_attachment = engine_on ? route.front() : baseline_attach;

  LinkMonitor monitor(filter, trigger.loss_window);
  HandoffEngine engine(trigger, plan);
  mpls::Forwarder fwd(opt.mobile_tables
                          ? *opt.mobile_tables
                          : detail::mobile_tables(trace.meta.initial_attachment));

  std::mt19937_64 rng(sc.seed);
  const std::int64_t total = sc.total_ticks();
  const std::int64_t delay_ticks =
      static_cast<std::int64_t>(sc.handoff_exec_delay_ms) * sc.tick_hz / 1000;

  int pps_acc = 0;
  std::int64_t suppress_end = -1;    // last suppressed tick
  std::int64_t pending_complete = -1;

  auto ingest = [&](const RssiSample& s, bool probe) {
    monitor.ingest(s);
    SampleRecord rec{s.tick, s.node_id, s.direction, s.raw_rssi, s.delivered,
                     *monitor.smoothed(s.node_id, s.tick), probe};
    trace.samples.push_back(std::move(rec));
  };

  for (std::int64_t tick = 0; tick < total; ++tick) {
    const double pos =
        std::min(sc.mobile_speed_mps * tick / sc.tick_hz, sc.route_length_m);

    if (pending_complete == tick) {
      trace.events.push_back({tick, EventKind::handoff_complete,
                              "attached=" + engine.attached_node()});
      pending_complete = -1;
    }
    const bool suppressed = tick <= suppress_end;

    // Service traffic at traffic_pps, bidirectional.
    pps_acc += sc.traffic_pps;
    if (pps_acc >= sc.tick_hz) {
      pps_acc -= sc.tick_hz;
      if (suppressed) {
        // Offered load dropped on the floor during handoff execution.
        trace.offered_data_packets += 2;
        trace.lost_data_packets += 2;
        trace.events.push_back(
            {tick, EventKind::packet_drop, "cause=handoff_exec"});
        trace.events.push_back(
            {tick, EventKind::packet_drop, "cause=handoff_exec"});
      } else {
        // The forwarding plane picks the serving node.
        mpls::Packet pkt;
        pkt.tuple = detail::kServiceTuple;
        auto res = fwd.ingress(pkt);
        std::string serving = res.verdict == mpls::Verdict::forwarded
                                  ? res.next_hop
                                  : (engine_on ? engine.attached_node()
                                               : baseline_attach);
        if (engine_on) {
          for (Direction dir : {Direction::downlink, Direction::uplink}) {
            auto s = detail::draw_sample(sc, sc.node(serving), pos, tick, dir,
                                         rng);
            trace.events.push_back({tick, EventKind::packet_tx,
                                    "node=" + serving + ";dir=" +
                                        to_string(dir)});
            ++trace.offered_data_packets;
            if (!s.delivered) {
              ++trace.lost_data_packets;
              trace.events.push_back(
                  {tick, EventKind::packet_drop, "node=" + serving});
            }
            ingest(s, false);
          }
        } else {
          // Baseline: monitor traffic toward every fixed node.
          for (const auto& node : sc.fixed_nodes) {
            for (Direction dir : {Direction::downlink, Direction::uplink}) {
              auto s = detail::draw_sample(sc, node, pos, tick, dir, rng);
              trace.events.push_back({tick, EventKind::packet_tx,
                                      "node=" + node.id + ";dir=" +
                                          to_string(dir)});
              if (node.id == baseline_attach) {
                ++trace.offered_data_packets;
                if (!s.delivered) ++trace.lost_data_packets;
              }
              if (!s.delivered)
                trace.events.push_back(
                    {tick, EventKind::packet_drop, "node=" + node.id});
              ingest(s, false);
            }
          }
        }
      }
    }

    if (!engine_on) continue;

    // Probing traffic toward the next planned node.
    if (!suppressed) {
      for (const auto& probe : engine.probe_schedule(monitor, tick)) {
        const auto& node = sc.node(probe.target_node);
        for (int i = 0; i < probe.count; ++i) {
          trace.events.push_back(
              {tick, EventKind::probe, "node=" + probe.target_node});
          for (Direction dir : {Direction::downlink, Direction::uplink}) {
            auto s = detail::draw_sample(sc, node, pos, tick, dir, rng);
            ingest(s, true);
          }
        }
      }
    }

    // Decision cycle.
    if (!suppressed) {
      auto res = engine.decision_cycle(monitor, tick);
      if (res.record) {
        trace.events.push_back({tick, EventKind::decision,
                                detail::decision_detail(*res.record)});
        trace.decisions.push_back(std::move(*res.record));
      }
      if (res.command) {
        trace.handoffs.push_back(*res.command);
        trace.events.push_back({tick, EventKind::handoff_start,
                                "old=" + res.command->old_node +
                                    ";new=" + res.command->new_node});
        fwd.rewire_lsp("mobile", res.command->old_node,
                       res.command->new_node);
        suppress_end = tick + delay_ticks;
        pending_complete = tick + delay_ticks;
      }
    }
  }
  return trace;
}

inline SimTrace run_baseline(const Scenario& sc, const TriggerConfig& trigger,
                             const FilterConfig& filter,
                             const std::vector<std::string>& route,
                             const std::string& attach_node = {}) {
  RunOptions opt;
  opt.mode = SimMode::baseline;
  opt.baseline_attach = attach_node;
  return run(sc, trigger, filter, route, opt);
}

struct CompareSummary {
  double baseline_loss = 0.0;
  double handoff_loss = 0.0;
  int handoff_count = 0;
  std::vector<std::int64_t> interruption_ticks;
  double baseline_mean_serving_rssi = 0.0;
  double handoff_mean_serving_rssi = 0.0;
};

// Serving-link mean smoothed RSSI over the whole run. In handoff mode
// the serving link follows the attachment sequence.
inline double mean_serving_rssi(const SimTrace& trace) {
  std::string serving = trace.meta.initial_attachment;
  std::size_t next_handoff = 0;
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto& s : trace.samples) {
    while (next_handoff < trace.handoffs.size() &&
           trace.handoffs[next_handoff].tick <= s.tick) {
      serving = trace.handoffs[next_handoff].new_node;
      ++next_handoff;
    }
    if (s.node == serving && !s.probe) {
      sum += s.smoothed_after;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

inline CompareSummary compare(const SimTrace& baseline,
                              const SimTrace& handoff) {
  if (baseline.meta.seed != handoff.meta.seed ||
      baseline.meta.tick_hz != handoff.meta.tick_hz ||
      baseline.meta.duration_s != handoff.meta.duration_s)
    throw std::invalid_argument("compare: traces from different scenarios");
  CompareSummary s;
  s.baseline_loss = baseline.data_loss_fraction();
  s.handoff_loss = handoff.data_loss_fraction();
  s.handoff_count = static_cast<int>(handoff.handoffs.size());
  std::map<std::int64_t, std::int64_t> starts;
  for (const auto& e : handoff.events) {
    if (e.kind == EventKind::handoff_start) starts[e.tick] = -1;
    if (e.kind == EventKind::handoff_complete) {
      auto it = starts.rbegin();
      if (it != starts.rend() && it->second < 0) it->second = e.tick;
    }
  }
  for (const auto& [start, complete] : starts)
    if (complete >= 0) s.interruption_ticks.push_back(complete - start);
  s.baseline_mean_serving_rssi = mean_serving_rssi(baseline);
  s.handoff_mean_serving_rssi = mean_serving_rssi(handoff);
  return s;
}

}  // namespace handoff
