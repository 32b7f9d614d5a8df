#include "agp/harness.hpp"
#include "agp/serialize.hpp"
#include "agp/verification.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Adaptive GP surrogate training interleaved with posterior sampling"};
  app.require_subcommand(1);

  std::string config_path, preset = "paper", out_dir = "out";
  std::uint64_t seed_override = 0;
  bool have_seed = false;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--preset", preset, "Scale preset: paper (as configured) or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  run->add_option("--seed", seed_override, "Override the master seed")
      ->each([&](const std::string&) { have_seed = true; });
  run->add_option("--out", out_dir, "Output directory");

  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "Write report CSVs from stored run records");
  report->add_option("--in", report_in, "Experiment output directory (or its runs/ dir)")
      ->required();
  report->add_option("--out", report_out, "Report directory")->required();

  auto* verify = app.add_subcommand("verify", "Run the oracle and property suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      agp::ExperimentConfig cfg = agp::load_config(config_path);
      if (preset == "desk") agp::apply_desk_preset(cfg);
      if (have_seed) cfg.master_seed = seed_override;
      const auto records = agp::run_experiment(cfg, out_dir);
      agp::write_reports((fs::path(out_dir) / "runs").string(),
                         (fs::path(out_dir) / "report").string());
      int failures = 0;
      for (const auto& r : records) {
        if (!r.audits_ok) {
          ++failures;
          std::cout << "[AUDIT FAIL] " << r.strategy.label() << " m" << r.measurement
                    << " r" << r.repetition << ": " << r.audit_message << "\n";
        }
      }
      std::cout << records.size() << " runs complete, " << failures
                << " audit failures; reports in " << (fs::path(out_dir) / "report").string()
                << "\n";
      return failures == 0 ? 0 : 1;
    }
    if (report->parsed()) {
      const fs::path in(report_in);
      const std::string runs_dir =
          fs::exists(in / "runs") ? (in / "runs").string() : in.string();
      agp::write_reports(runs_dir, report_out);
      std::cout << "reports written to " << report_out << "\n";
      return 0;
    }
    if (verify->parsed()) {
      int failures = 0;
      for (const auto& r : agp::run_all_checks()) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
        if (!r.pass) ++failures;
      }
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
