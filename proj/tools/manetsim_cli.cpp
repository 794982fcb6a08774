// Command-line front end: run one scenario or the full comparison sweep.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "manetsim/manetsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

std::string metric_or_dash(const std::optional<double>& v) {
  return v ? manetsim::format_double(*v) : std::string("-");
}

void print_summary(const manetsim::SweepCell& cell) {
  std::cout << "protocol=" << manetsim::protocol_name(cell.protocol)
            << " sources=" << cell.sources << " seed=" << cell.seed
            << " pdf=" << metric_or_dash(cell.metrics.pdf)
            << " avg_delay_s=" << metric_or_dash(cell.metrics.avg_delay)
            << " nrl=" << metric_or_dash(cell.metrics.nrl)
            << " originated=" << cell.metrics.originated
            << " delivered=" << cell.metrics.delivered
            << " control_tx=" << cell.metrics.control_tx << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic MANET routing simulator (DSR / AODV / EMP)"};

  std::string config_path;
  std::string out_dir = ".";
  std::string protocol_override;
  std::optional<std::uint32_t> sources_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> duration_override;
  std::string trace_path;
  std::string sonnet_path;
  bool do_sweep = false;

  app.add_option("--config", config_path, "Scenario config file (key = value lines)")
      ->required();
  app.add_option("--protocol", protocol_override, "Override protocol: dsr, aodv or emp");
  app.add_option("--sources", sources_override, "Override CBR source count");
  app.add_option("--seed", seed_override, "Override master seed");
  app.add_option("--duration", duration_override, "Override run duration (seconds)");
  app.add_option("--out", out_dir, "Output directory (default: current)");
  app.add_flag("--sweep", do_sweep,
               "Run the comparison experiment: all protocols, sources 10,20,30,40, seeds 1-10");
  app.add_option("--dump-trace", trace_path, "Write the packet log, one record per line");
  app.add_option("--dump-sonnet", sonnet_path, "Write final enquiry tables (EMP runs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    manetsim::ScenarioConfig cfg = manetsim::load_config(config_path);
    if (!protocol_override.empty()) cfg.protocol = manetsim::parse_protocol(protocol_override);
    if (sources_override) cfg.source_count = *sources_override;
    if (seed_override) cfg.master_seed = *seed_override;
    if (duration_override) cfg.duration = *duration_override;
    cfg.validate();

    std::filesystem::create_directories(out_dir);
    const auto out = [&](const std::string& name) {
      return std::filesystem::path(out_dir) / name;
    };

    if (do_sweep) {
      manetsim::SweepOptions opt;
      const auto cells = manetsim::run_sweep(cfg, opt);
      manetsim::write_file(out("results.csv"), manetsim::results_to_csv(cells));
      for (const auto& [name, body] : manetsim::plotdata_files(cells))
        manetsim::write_file(out(name), body);
      std::cout << "wrote " << cells.size() << " runs to " << out("results.csv").string()
                << " plus plot series\n\nseed means (+/- population stddev):\n";
      for (manetsim::ProtocolKind p : opt.protocols) {
        for (std::uint32_t s : opt.sources) {
          const auto pdf = manetsim::aggregate(cells, p, s, manetsim::Metric::Pdf);
          const auto dly = manetsim::aggregate(cells, p, s, manetsim::Metric::AvgDelay);
          const auto nrl = manetsim::aggregate(cells, p, s, manetsim::Metric::Nrl);
          std::printf("  %-4s sources=%-2u  pdf %.4f+/-%.4f  delay %6.2f+/-%.2f ms  "
                      "nrl %.3f+/-%.3f\n",
                      manetsim::protocol_name(p), s, pdf.mean, pdf.stddev, dly.mean * 1e3,
                      dly.stddev * 1e3, nrl.mean, nrl.stddev);
        }
      }
      return kExitOk;
    }

    manetsim::Simulation sim(cfg);
    const manetsim::RunStats stats = sim.run();
    manetsim::SweepCell cell{cfg.protocol, cfg.source_count, cfg.master_seed, stats.metrics};
    manetsim::write_file(out("results.csv"), manetsim::results_to_csv({cell}));
    if (!trace_path.empty())
      manetsim::write_file(trace_path, manetsim::dump_trace(sim.log().records()));
    if (!sonnet_path.empty())
      manetsim::write_file(sonnet_path, manetsim::dump_sonnet_tables(sim));
    print_summary(cell);
    return kExitOk;
  } catch (const manetsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}
