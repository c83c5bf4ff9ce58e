#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "svf/montecarlo.hpp"
#include "svf/multiverse.hpp"
#include "svf/pipeline.hpp"

namespace svf::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kNumerical = 3;

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// A forecast study read from a JSON configuration; relative paths resolve
/// against the configuration file's directory.
struct Bundle {
    SeriesData target;
    std::vector<SeriesData> donors;
    std::vector<std::string> covariate_names;
    PipelineConfig config;
    std::optional<double> ground_truth;
    LossKind loss = LossKind::QL;
    std::size_t threads = 1;
};

Bundle load_bundle(const std::filesystem::path& config_path);
Bundle parse_bundle(const nlohmann::json& doc, const std::filesystem::path& base_dir);

mc::GridConfig parse_grid_config(const nlohmann::json& doc);
PipelineConfig parse_pipeline_config(const nlohmann::json& doc);

}  // namespace svf::cli
