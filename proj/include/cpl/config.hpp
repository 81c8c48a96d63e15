#pragma once

#include "cpl/data.hpp"
#include "cpl/model.hpp"
#include "cpl/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cpl {

enum class DataSource { SyntheticLinear, SyntheticRing, Csv };

std::string to_string(DataSource source);
DataSource parse_data_source(std::string_view name);

struct DataConfig {
    DataSource source = DataSource::SyntheticLinear;
    std::string path; // csv only
    int n_per_class = 100;
    double noise_sigma = 0.1;
    double overlap = 0.0;
    std::uint64_t seed = 0;
    SplitSpec split;
};

// Everything one command needs. Built from a flat JSON object; every key is
// optional and falls back to the defaults listed by `run_config_keys()`.
struct RunConfig {
    ProblemSpec spec;
    TrainConfig train;
    DataConfig data;
    std::string out_dir = "runs/default";
    std::string checkpoint;         // empty: <out_dir>/checkpoint.json
    std::string eval_split = "test"; // train | val | test | all
    int seeds = 1;                   // sweep/ablate repeat over seed, seed+1, ...
    std::string sweep_parameter = "s";
    std::vector<double> sweep_values; // empty: built-in grid
    std::string ablation = "upl-baseline";
    std::vector<double> ablation_values; // empty: {1, 3, 5, 7} for fixed-v0-norm

    std::filesystem::path checkpoint_path() const;
    // Cross-field checks; throws ConfigError.
    void validate() const;
};

// Documented key names, in output order.
const std::vector<std::string>& run_config_keys();

nlohmann::json to_json(const RunConfig& config);
// Rejects unknown keys and values of the wrong type.
RunConfig run_config_from_json(const nlohmann::json& flat);
RunConfig load_run_config(const std::filesystem::path& path);

// `key=value`; the value is read as JSON when it parses, as a string otherwise.
std::pair<std::string, nlohmann::json> parse_override(std::string_view text);
RunConfig apply_override(const RunConfig& config, const std::string& key, const nlohmann::json& value);
// Applies every key of `patch` before validating, so coupled keys (layout and
// loss, say) can change together.
RunConfig apply_overrides(const RunConfig& config, const nlohmann::json& patch);

// Config file (if any) plus `key=value` overrides, validated once at the end.
RunConfig build_run_config(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides);

} // namespace cpl
