#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oupm/core.hpp"

namespace oupm::cli {

/// A CSV dataset: time_s, the named input channels, and optionally the target.
/// Columns are bound by name; extra columns are ignored.
struct Dataset {
  InputSeries inputs;
  std::optional<std::vector<double>> target_raw;
};

Dataset parse_dataset(const std::string& csv_text, const std::vector<std::string>& channels,
                      const std::string& target, bool require_target,
                      const std::string& source = "<csv>");
Dataset read_dataset(const std::filesystem::path& path, const std::vector<std::string>& channels,
                     const std::string& target, bool require_target);

/// Header time_s,<channels>,<target>[,<extra name>]; one row per sample.
/// An empty target name omits the target column.
std::string dataset_csv(const InputSeries& inputs, const std::string& target,
                        const std::vector<double>& target_raw,
                        const std::string& extra_name = {},
                        const std::vector<double>& extra = {});

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace oupm::cli
