#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "mbms/config.hpp"
#include "mbms/engine.hpp"
#include "mbms/harq.hpp"
#include "mbms/metrics.hpp"

namespace {

enum Exit { kOk = 0, kError = 1, kConfig = 2, kInvariant = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MBMS system-level simulator"};
  std::string mode;
  int users = -1;
  long long seed = -1;
  long duration = -1;
  std::string config_file;
  std::string out_dir = "out";
  std::vector<std::string> settings;
  bool with_baseline = false;

  app.add_option("--mode", mode, "Transmission mode")
      ->check(CLI::IsMember({"ptp", "ptm-fixed", "ptm-adaptive", "ptm-adaptive-mincqi",
                             "ptm-nack-oriented"}));
  app.add_option("--users-per-cell", users, "Average MBMS users per cell")->check(CLI::Range(1, 200));
  app.add_option("--seed", seed, "Master seed")->check(CLI::NonNegativeNumber);
  app.add_option("--duration-ttis", duration, "Measured TTIs after warm-up")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory for CSV files");
  app.add_option("--set", settings, "Extra key=value override (repeatable)");
  app.add_flag("--with-baseline", with_baseline,
               "Also run matched ptm-adaptive/ptp/ptm-fixed references and fill ratios and gains");
  CLI11_PARSE(app, argc, argv);

  try {
    mbms::SimulationConfig cfg =
        config_file.empty() ? mbms::SimulationConfig{} : mbms::load_config(config_file);
    for (const std::string& kv : settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw mbms::ConfigError("--set expects key=value, got '" + kv + "'");
      mbms::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!mode.empty()) cfg.mode = mbms::mode_from_string(mode);
    if (users > 0) cfg.users_per_cell = users;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (duration >= 0) cfg.duration_ttis = duration;
    mbms::validate(cfg);

    std::vector<mbms::RunResult> runs;
    runs.push_back(mbms::run_simulation(cfg));
    if (with_baseline) {
      auto reference = [&](mbms::Mode m) {
        mbms::SimulationConfig ref = cfg;
        ref.mode = m;
        ref.collect_worst_user_samples = false;
        return mbms::run_simulation(ref).metrics;
      };
      const auto adaptive = cfg.mode == mbms::Mode::PtmAdaptive ? runs[0].metrics
                                                                 : reference(mbms::Mode::PtmAdaptive);
      const auto ptp = cfg.mode == mbms::Mode::Ptp ? runs[0].metrics : reference(mbms::Mode::Ptp);
      const auto fixed =
          cfg.mode == mbms::Mode::PtmFixed ? runs[0].metrics : reference(mbms::Mode::PtmFixed);
      mbms::attach_baseline(runs[0].metrics, &adaptive, &ptp, &fixed);
    }
    mbms::export_csv(runs, out_dir);

    const mbms::MetricsRecord& m = runs[0].metrics;
    std::cout << "mode=" << mbms::to_string(m.mode) << " users_per_cell=" << m.users_per_cell
              << " seed=" << m.seed << " sessions=" << m.sessions
              << " usr=" << mbms::format_number(m.usr)
              << " watts_per_group=" << mbms::format_number(m.power_per_group_w)
              << " avg_harq_attempts=" << mbms::format_number(m.avg_harq_attempts)
              << " transmit_rate_kbps=" << mbms::format_number(m.transmit_rate_kbps)
              << " load=" << mbms::format_number(m.total_load) << '\n';
    return kOk;
  } catch (const mbms::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const mbms::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
}
