#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oupm/core.hpp"

namespace oupm {

/// A trained model: parameters plus the preprocessing they were fitted under.
struct Model {
  std::vector<std::string> channel_names;
  ModelParams params;
  PreprocessStats stats;
};

inline constexpr const char* kModelMagic = "# oupm-model";
inline constexpr int kModelFormatVersion = 1;

/// Text form: a magic header line "# oupm-model v1" followed by a JSON body.
/// Doubles are written in shortest round-trip form, so reload is bit-exact.
std::string model_to_string(const Model& model);
Model model_from_string(const std::string& text);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace oupm
