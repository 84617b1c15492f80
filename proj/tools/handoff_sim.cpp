// CLI driver: run simulations, replay recorded traces, sweep parameters.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "handoff/sim.hpp"
#include "handoff/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw handoff::ConfigError("cannot open config file " + path);
  json j;
  in >> j;
  return j;
}

handoff::SimTrace run_from_config(const handoff::RunConfig& cfg) {
  handoff::RunOptions opt;
  opt.mode = cfg.mode;
  opt.mobile_tables = cfg.mobile_tables;
  return handoff::run(cfg.scenario, cfg.trigger, cfg.filter, cfg.route, opt);
}

void print_summary(const handoff::SimTrace& trace) {
  std::cout << "ticks: " << trace.meta.duration_s * trace.meta.tick_hz
            << "  samples: " << trace.samples.size()
            << "  handoffs: " << trace.handoffs.size()
            << "  data loss: " << trace.data_loss_fraction() << "\n";
  for (const auto& h : trace.handoffs)
    std::cout << "  handoff @tick " << h.tick << ": " << h.old_node << " -> "
              << h.new_node << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"802.11 mass-transit handoff simulator"};
  app.require_subcommand(1);

  std::string config_path, trace_path, out_dir, mode_override, sweep_key;
  std::optional<std::uint64_t> seed_override;
  std::vector<std::string> sweep_values;

  auto* run_cmd = app.add_subcommand("run", "run a simulation from a config");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--mode", mode_override, "baseline|handoff");
  run_cmd->add_option("--seed", seed_override, "override scenario seed");
  run_cmd->add_option("--out", out_dir, "output directory for CSV traces");

  auto* replay_cmd =
      app.add_subcommand("replay", "replay a recorded RSSI trace");
  replay_cmd->add_option("config", config_path, "config file")->required();
  replay_cmd->add_option("trace", trace_path, "recorded trace CSV")
      ->required();
  replay_cmd->add_option("--out", out_dir, "output directory for CSV traces");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "run once per value of a config key");
  sweep_cmd->add_option("config", config_path, "config file")->required();
  sweep_cmd->add_option("--param", sweep_key, "dotted config key")->required();
  sweep_cmd->add_option("--values", sweep_values, "values to sweep")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--out", out_dir, "output directory root");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      json j = load_json(config_path);
      if (!mode_override.empty()) j["mode"] = mode_override;
      if (seed_override) j["scenario"]["seed"] = *seed_override;
      auto cfg = handoff::parse_config(j);
      auto trace = run_from_config(cfg);
      print_summary(trace);
      handoff::emit_csv(trace, out_dir.empty() ? cfg.output_dir : out_dir);
    } else if (replay_cmd->parsed()) {
      auto cfg = handoff::load_config(config_path);
      auto recorded =
          handoff::load_recorded_trace(trace_path, cfg.scenario.tick_hz);
      auto trace = handoff::replay(recorded, cfg.trigger, cfg.filter,
                                   cfg.route, cfg.scenario.tick_hz);
      print_summary(trace);
      handoff::emit_csv(trace, out_dir.empty() ? cfg.output_dir : out_dir);
    } else if (sweep_cmd->parsed()) {
      json base = load_json(config_path);
      std::string pointer = "/" + sweep_key;
      for (auto& c : pointer)
        if (c == '.') c = '/';
      fs::path root = out_dir.empty() ? "sweep" : out_dir;
      for (const auto& value : sweep_values) {
        json j = base;
        // Numeric values stay numeric in the config tree.
        try {
          std::size_t pos = 0;
          double num = std::stod(value, &pos);
          if (pos == value.size())
            j[json::json_pointer(pointer)] = num;
          else
            j[json::json_pointer(pointer)] = value;
        } catch (const std::invalid_argument&) {
          j[json::json_pointer(pointer)] = value;
        }
        auto cfg = handoff::parse_config(j);
        auto trace = run_from_config(cfg);
        std::cout << sweep_key << "=" << value << "  ";
        print_summary(trace);
        handoff::emit_csv(trace, root / value);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
