#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjprox/maxplus.hpp"
#include "hjprox/priors.hpp"
#include "hjprox/train.hpp"

namespace hjprox::cli {

enum ExitCode : int {
  kOk = 0,
  kOtherError = 1,
  kConfigError = 2,
  kNumericFailure = 3,
  kDependencyMissing = 4,
  kTrainingDiverged = 5,
};

struct ScalingBlock {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> K;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  ScalingOptions options;
};

struct ExperimentConfig {
  std::string name;
  /// The prior block as written; min_plus_two_wells depends on the dimension.
  nlohmann::json prior;
  std::vector<std::size_t> dims;
  /// One entry per dimension.
  std::vector<std::size_t> N;
  double t = 1.0;
  double a = 4.0;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 1;
  std::size_t eval_points = 5000;
  TrainConfig train;
  /// Absolute; relative paths in the file are taken from the config's folder.
  std::filesystem::path output_dir;
  std::optional<ScalingBlock> scaling;

  PriorSpec prior_for(std::size_t dim) const;
  std::size_t N_for(std::size_t dim) const;
  std::filesystem::path dim_dir(std::size_t dim) const;
};

/// Throws ConfigError on malformed input.
PriorSpec prior_from_json(const nlohmann::json& block, std::size_t dim);
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const TrainConfig& c);

/// Parses argv and runs one subcommand. Messages go to out and err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hjprox::cli
