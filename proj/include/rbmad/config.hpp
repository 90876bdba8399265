#pragma once

// Flat key=value run configuration. Blank lines and '#' comments are ignored.
// Unknown keys are errors.

#include <filesystem>
#include <string>
#include <vector>

#include "rbmad/detector.hpp"

namespace rbmad {

struct RunConfig {
  DetectorConfig detector;
  int resize_h = 240;  // 0 keeps native frame size
  int resize_w = 360;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

// Sets one key; throws std::invalid_argument for unknown keys or bad values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

RunConfig parse_config(const std::string& text);
std::string emit_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

std::vector<std::string> config_keys();

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace rbmad
