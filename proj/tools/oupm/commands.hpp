#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace oupm::cli {

/// Command-line options shared by all subcommands. Anything set here
/// overrides the corresponding config value.
struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> data;
  std::optional<unsigned> threads;
  bool dump_paths = false;
  bool quiet = false;
};

inline constexpr const char* kModelFileName = "model.oupm";

/// Writes synth.csv, synth_train.csv, truth.json and a ready-to-run config.json.
void cmd_synth(const Options& opts, std::ostream& log);
/// Writes model.oupm, loss_curves.csv and fit_report.json.
void cmd_fit(const Options& opts, std::ostream& log);
/// Writes summary.csv, cumulative.csv and, with dump_paths, paths.csv.
void cmd_predict(const Options& opts, std::ostream& log);
/// Writes eval_report.json, pit.csv, qq.csv, pit_histogram.csv, summary.csv
/// and cumulative.csv (with the observed running sum).
void cmd_evaluate(const Options& opts, std::ostream& log);

}  // namespace oupm::cli
