#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oupm/synthetic.hpp"
#include "oupm/trainer.hpp"

namespace oupm::cli {

/// Run configuration, read from a JSON file. Relative paths resolve against
/// the directory holding the config file.
struct RunConfig {
  std::vector<std::string> channels;
  std::string target = "pm";
  std::optional<double> dt;
  std::vector<std::filesystem::path> train_files;
  std::vector<std::filesystem::path> validation_files;
  std::vector<std::size_t> validation_indices;
  std::optional<std::filesystem::path> test_file;
  /// Fixed target scale instead of the training-set standard deviation.
  std::optional<double> target_scale;
  double zero_floor = kDefaultZeroFloor;
  TrainConfig train;
  std::size_t paths = 10000;
  std::vector<double> quantiles = {0.005, 0.025, 0.05, 0.25, 0.75, 0.95, 0.975, 0.995};
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  SynthSpec synth;
};

/// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// JSON text that parse_config reads back to an equivalent config.
std::string config_to_json(const RunConfig& config, const std::filesystem::path& base_dir);

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace oupm::cli
