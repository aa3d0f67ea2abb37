#ifndef CAPFIX_CONFIG_H_
#define CAPFIX_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "capfix/corruptor.h"
#include "capfix/neural/trainer.h"

namespace capfix {

struct GenerateSettings {
  std::filesystem::path input;
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
  SplitRatios ratios;
  int threads = 1;
};

struct TrainSettings {
  // Directory holding train.jsonl and validation.jsonl.
  std::filesystem::path data_dir;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  neural::TrainingConfig training = neural::TrainingConfig::desk();
};

// Sections [generate], [corruption] and [train] of an INI-style file.
// Relative paths resolve against the directory of the config file.
struct AppConfig {
  GenerateSettings generate;
  RuleConfig rules;
  TrainSettings train;
};

// Throws capfix::Error listing every unknown or malformed key.
AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
AppConfig load_config(const std::filesystem::path& path);

}  // namespace capfix

#endif  // CAPFIX_CONFIG_H_
