#pragma once

// Config file loading (JSON, keys mirroring the documented parameter
// tables), CSV trace emission for figure regeneration, and offline
// replay of recorded RSSI traces through the filter and trigger.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "handoff/engine.hpp"
#include "handoff/sim.hpp"

namespace handoff {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LspConfig {
  std::string id;
  mpls::ForwardingTables tables;
};

struct RunConfig {
  Scenario scenario;
  TriggerConfig trigger;
  FilterConfig filter;
  std::vector<std::string> route;
  std::optional<mpls::ForwardingTables> mobile_tables;
  SimMode mode = SimMode::handoff;
  std::string output_dir = "out";
};

namespace config_detail {

using nlohmann::json;

template <typename T>
void get_if(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

inline ChannelConfig parse_channel(const json& j, ChannelConfig base,
                                   const std::string& path) {
  get_if(j, "peak_rssi", base.peak_rssi, path);
  get_if(j, "pathloss_exponent", base.pathloss_exponent, path);
  get_if(j, "range_m", base.range_m, path);
  get_if(j, "fading_stddev", base.fading_stddev, path);
  get_if(j, "blinding_enabled", base.blinding_enabled, path);
  get_if(j, "blinding_radius_m", base.blinding_radius_m, path);
  get_if(j, "blinding_depth", base.blinding_depth, path);
  get_if(j, "rssi_floor", base.rssi_floor, path);
  get_if(j, "loss_knee", base.loss_knee, path);
  get_if(j, "loss_max", base.loss_max, path);
  get_if(j, "rng_seed", base.rng_seed, path);
  return base;
}

inline mpls::LabelOp parse_op(const std::string& s, const std::string& path) {
  if (s == "push") return mpls::LabelOp::push;
  if (s == "pop") return mpls::LabelOp::pop;
  if (s == "swap") return mpls::LabelOp::swap;
  throw ConfigError(path + ".op: expected push|pop|swap, got '" + s + "'");
}

}  // namespace config_detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using config_detail::get_if;
  RunConfig cfg;

  if (j.contains("mode")) {
    std::string m = j.at("mode").get<std::string>();
    if (m == "baseline") cfg.mode = SimMode::baseline;
    else if (m == "handoff") cfg.mode = SimMode::handoff;
    else throw ConfigError("mode: expected baseline|handoff, got '" + m + "'");
  }
  get_if(j, "output_dir", cfg.output_dir, "");

  if (!j.contains("scenario")) throw ConfigError("scenario: section missing");
  const auto& sj = j.at("scenario");
  Scenario& sc = cfg.scenario;
  get_if(sj, "route_length_m", sc.route_length_m, "scenario");
  get_if(sj, "mobile_speed_mps", sc.mobile_speed_mps, "scenario");
  get_if(sj, "tick_hz", sc.tick_hz, "scenario");
  get_if(sj, "traffic_pps", sc.traffic_pps, "scenario");
  get_if(sj, "handoff_exec_delay_ms", sc.handoff_exec_delay_ms, "scenario");
  get_if(sj, "duration_s", sc.duration_s, "scenario");
  get_if(sj, "seed", sc.seed, "scenario");
  get_if(sj, "traffic_rate_mbps", sc.traffic_rate_mbps, "scenario");

  ChannelConfig channel_defaults;
  if (sj.contains("channel"))
    channel_defaults = config_detail::parse_channel(
        sj.at("channel"), channel_defaults, "scenario.channel");

  if (!sj.contains("fixed_nodes"))
    throw ConfigError("scenario.fixed_nodes: section missing");
  for (const auto& nj : sj.at("fixed_nodes")) {
    FixedNode n;
    n.channel = channel_defaults;
    if (!nj.contains("id")) throw ConfigError("scenario.fixed_nodes[].id: missing");
    n.id = nj.at("id").get<std::string>();
    get_if(nj, "position_m", n.position_m, "scenario.fixed_nodes[]");
    if (nj.contains("channel"))
      n.channel = config_detail::parse_channel(
          nj.at("channel"), n.channel, "scenario.fixed_nodes[].channel");
    sc.fixed_nodes.push_back(std::move(n));
  }
  if (sj.contains("fades")) {
    for (const auto& fj : sj.at("fades")) {
      FadeWindow f;
      get_if(fj, "node", f.node, "scenario.fades[]");
      get_if(fj, "start_s", f.start_s, "scenario.fades[]");
      get_if(fj, "end_s", f.end_s, "scenario.fades[]");
      get_if(fj, "depth", f.depth, "scenario.fades[]");
      sc.fades.push_back(std::move(f));
    }
  }

  if (j.contains("trigger")) {
    const auto& tj = j.at("trigger");
    TriggerConfig& t = cfg.trigger;
    get_if(tj, "beta", t.beta, "trigger");
    get_if(tj, "lambda_good", t.lambda_good, "trigger");
    get_if(tj, "lambda_bad", t.lambda_bad, "trigger");
    get_if(tj, "loss_gate_pl", t.loss_gate_pl, "trigger");
    get_if(tj, "loss_window", t.loss_window, "trigger");
    std::int64_t decision_period_ms = 100, probe_period_ms = 250;
    get_if(tj, "decision_period_ms", decision_period_ms, "trigger");
    get_if(tj, "probe_period_ms", probe_period_ms, "trigger");
    t.decision_period_ticks = decision_period_ms * sc.tick_hz / 1000;
    t.probe_period_ticks = probe_period_ms * sc.tick_hz / 1000;
  } else {
    cfg.trigger.decision_period_ticks = 100LL * sc.tick_hz / 1000;
    cfg.trigger.probe_period_ticks = 250LL * sc.tick_hz / 1000;
  }

  if (j.contains("filter")) {
    const auto& fj = j.at("filter");
    get_if(fj, "stability_shift", cfg.filter.stability_shift, "filter");
    get_if(fj, "fraction_bits", cfg.filter.fraction_bits, "filter");
    get_if(fj, "staleness_ticks", cfg.filter.staleness_ticks, "filter");
  }

  if (!j.contains("route")) throw ConfigError("route: section missing");
  cfg.route = j.at("route").get<std::vector<std::string>>();

  if (j.contains("lsps")) {
    mpls::ForwardingTables tables;
    for (const auto& lj : j.at("lsps")) {
      std::string lsp_id = lj.at("id").get<std::string>();
      for (const auto& ej : lj.at("entries")) {
        mpls::NhlfeEntry e;
        e.lsp_id = lsp_id;
        e.op = config_detail::parse_op(ej.at("op").get<std::string>(),
                                       "lsps[].entries[]");
        if (ej.contains("out_label"))
          e.out_label = ej.at("out_label").get<std::uint32_t>();
        get_if(ej, "next_hop", e.next_hop, "lsps[].entries[]");
        e.validate();
        if (ej.contains("in_label"))
          tables.ilm[ej.at("in_label").get<std::uint32_t>()] =
              tables.nhlfe.size();
        tables.nhlfe.push_back(std::move(e));
      }
    }
    if (!tables.nhlfe.empty()) {
      mpls::Fec fec;
      fec.dst_port = 7;
      fec.proto = 17;
      tables.ftn.emplace_back(fec, 0);
      cfg.mobile_tables = std::move(tables);
    }
  }

  // Cross-reference and invariant validation, reported with key paths.
  try {
    sc.validate();
    cfg.trigger.validate();
    cfg.filter.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.route.empty()) throw ConfigError("route: must list at least one node");
  for (const auto& id : cfg.route) {
    bool found = false;
    for (const auto& n : sc.fixed_nodes) found |= n.id == id;
    if (!found)
      throw ConfigError("route: node '" + id +
                        "' not present in scenario.fixed_nodes");
  }
  if (cfg.mobile_tables) {
    for (const auto& e : cfg.mobile_tables->nhlfe) {
      if (e.next_hop.empty()) continue;
      bool found = false;
      for (const auto& n : sc.fixed_nodes) found |= n.id == e.next_hop;
      if (!found)
        throw ConfigError("lsps: next_hop '" + e.next_hop +
                          "' not present in scenario.fixed_nodes");
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

// --- CSV emission -----------------------------------------------------

namespace csv_detail {

// Locale-independent fixed-decimal formatting.
inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace csv_detail

inline void emit_csv(const SimTrace& trace,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream f(dir / "samples.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write samples.csv");
    f << "tick,node,direction,raw_rssi,delivered\n";
    for (const auto& s : trace.samples)
      f << s.tick << ',' << s.node << ',' << to_string(s.direction) << ','
        << s.raw_rssi << ',' << (s.delivered ? 1 : 0) << '\n';
  }
  {
    std::ofstream f(dir / "smoothed.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write smoothed.csv");
    f << "tick,node,smoothed_rssi\n";
    for (const auto& s : trace.samples)
      f << s.tick << ',' << s.node << ','
        << csv_detail::fixed(s.smoothed_after) << '\n';
  }
  {
    std::ofstream f(dir / "events.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write events.csv");
    f << "tick,kind,detail\n";
    for (const auto& e : trace.events)
      f << e.tick << ',' << to_string(e.kind) << ',' << e.detail << '\n';
  }
}

// --- Recorded-trace replay ---------------------------------------------

struct RecordedRow {
  double timestamp_s = 0.0;
  std::string node_id;
  Direction direction = Direction::downlink;
  int raw_rssi = 0;
  bool delivered = true;
};

struct RecordedTrace {
  std::vector<RecordedRow> rows;
};

// Accepts either recorded traces (timestamp,...) or the simulator's own
// samples.csv (tick,...); ticks are converted at tick_hz.
inline RecordedTrace load_recorded_trace(const std::filesystem::path& path,
                                         int tick_hz = 1000) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty trace file");
  bool tick_based = line.rfind("tick,", 0) == 0;
  if (!tick_based && line.rfind("timestamp,", 0) != 0)
    throw ConfigError("trace header must start with timestamp, or tick,");

  RecordedTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string time_s, node, dir, rssi, delivered;
    if (!std::getline(ls, time_s, ',') || !std::getline(ls, node, ',') ||
        !std::getline(ls, dir, ',') || !std::getline(ls, rssi, ',') ||
        !std::getline(ls, delivered, ','))
      throw ConfigError("trace line " + std::to_string(lineno) +
                        ": expected 5 columns");
    RecordedRow r;
    r.timestamp_s = tick_based ? std::stod(time_s) / tick_hz
                               : std::stod(time_s);
    r.node_id = node;
    if (dir == "downlink") r.direction = Direction::downlink;
    else if (dir == "uplink") r.direction = Direction::uplink;
    else throw ConfigError("trace line " + std::to_string(lineno) +
                           ": bad direction '" + dir + "'");
    r.raw_rssi = std::stoi(rssi);
    if (r.raw_rssi < kRssiMin || r.raw_rssi > kRssiMax)
      throw ConfigError("trace line " + std::to_string(lineno) +
                        ": raw_rssi outside [0,70]");
    r.delivered = delivered == "1" || delivered == "true";
    if (!trace.rows.empty() &&
        r.timestamp_s < trace.rows.back().timestamp_s)
      throw ConfigError("trace line " + std::to_string(lineno) +
                        ": timestamps must be non-decreasing");
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

// Runs the filter and trigger over a recorded sample stream as if live.
// No channel model and no forwarding plane; decisions advance the plan.
inline SimTrace replay(const RecordedTrace& recorded,
                       const TriggerConfig& trigger,
                       const FilterConfig& filter,
                       const std::vector<std::string>& route,
                       int tick_hz = 1000) {
  trigger.validate();
  filter.validate();
  NodePlan plan(route);
  for (const auto& r : recorded.rows) {
    bool found = false;
    for (const auto& id : plan.nodes()) found |= id == r.node_id;
    if (!found)
      throw ConfigError("replay: trace node '" + r.node_id +
                        "' not in the route plan");
  }

  SimTrace trace;
  trace.meta.mode = SimMode::handoff;
  trace.meta.tick_hz = tick_hz;
  trace.meta.initial_attachment = plan.current();

  LinkMonitor monitor(filter, trigger.loss_window);
  HandoffEngine engine(trigger, plan);

  std::int64_t last_tick =
      recorded.rows.empty()
          ? 0
          : static_cast<std::int64_t>(
                std::llround(recorded.rows.back().timestamp_s * tick_hz));
  trace.meta.duration_s = static_cast<double>(last_tick + 1) / tick_hz;

  std::size_t row = 0;
  for (std::int64_t tick = 0; tick <= last_tick; ++tick) {
    while (row < recorded.rows.size() &&
           static_cast<std::int64_t>(std::llround(
               recorded.rows[row].timestamp_s * tick_hz)) == tick) {
      const auto& r = recorded.rows[row];
      RssiSample s{tick, r.node_id, r.raw_rssi, r.delivered, r.direction};
      monitor.ingest(s);
      trace.samples.push_back({tick, r.node_id, r.direction, r.raw_rssi,
                               r.delivered,
                               *monitor.smoothed(r.node_id, tick), false});
      ++row;
    }
    auto res = engine.decision_cycle(monitor, tick);
    if (res.record) {
      trace.events.push_back(
          {tick, EventKind::decision, detail::decision_detail(*res.record)});
      trace.decisions.push_back(std::move(*res.record));
    }
    if (res.command) {
      trace.handoffs.push_back(*res.command);
      trace.events.push_back({tick, EventKind::handoff_start,
                              "old=" + res.command->old_node +
                                  ";new=" + res.command->new_node});
    }
  }
  return trace;
}

}  // namespace handoff
