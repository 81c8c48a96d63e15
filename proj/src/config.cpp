#include "cpl/config.hpp"

#include "cpl/error.hpp"

#include <fstream>
#include <set>

namespace cpl {

namespace {

using nlohmann::json;

const std::vector<std::string> kSpecKeys = {
    "classes", "input_dim", "hidden", "dim", "similarity", "scale", "layout", "v0_norm_mode",
    "v0_norm", "loss", "alpha", "smoothing", "tau_p", "tau_b", "tau_e", "tri_a", "tri_b",
    "smoothing_normalization", "init_v0_norm", "experimental"};

const std::vector<std::string> kOtherKeys = {
    "epochs", "batch_size", "lr_extractor", "lr_proxies", "weight_decay", "beta1", "beta2", "eps",
    "seed", "data_source", "data_path", "n_per_class", "noise_sigma", "overlap", "data_seed",
    "split_train", "split_val", "split_test", "split_seed", "out_dir", "checkpoint", "eval_split",
    "seeds", "sweep_parameter", "sweep_values", "ablation", "ablation_values"};

template <class T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + std::string(key) + "' has the wrong type: " + j.at(key).dump());
    }
}

std::uint64_t get_seed(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError("config key '" + std::string(key) + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

} // namespace

std::string to_string(DataSource source) {
    switch (source) {
    case DataSource::SyntheticLinear: return "synthetic-linear";
    case DataSource::SyntheticRing: return "synthetic-ring";
    case DataSource::Csv: return "csv";
    }
    return "?";
}

DataSource parse_data_source(std::string_view name) {
    if (name == "synthetic-linear") return DataSource::SyntheticLinear;
    if (name == "synthetic-ring") return DataSource::SyntheticRing;
    if (name == "csv") return DataSource::Csv;
    throw ConfigError("unknown data_source '" + std::string(name) +
                      "' (expected synthetic-linear, synthetic-ring, csv)");
}

std::filesystem::path RunConfig::checkpoint_path() const {
    if (!checkpoint.empty()) return checkpoint;
    return std::filesystem::path(out_dir) / "checkpoint.json";
}

void RunConfig::validate() const {
    spec.validate();
    train.validate();
    data.split.validate();
    if (data.source == DataSource::Csv && data.path.empty()) {
        throw ConfigError("data_source csv needs data_path");
    }
    if (data.source != DataSource::Csv) {
        if (data.n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
        if (!(data.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
        if (!(data.overlap >= 0.0 && data.overlap < 1.0)) throw ConfigError("overlap must be in [0, 1)");
        if (data.source == DataSource::SyntheticRing && spec.input_dim < 2) {
            throw ConfigError("synthetic-ring data needs input_dim >= 2");
        }
    }
    if (eval_split != "train" && eval_split != "val" && eval_split != "test" && eval_split != "all") {
        throw ConfigError("eval_split must be train, val, test or all");
    }
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k = kSpecKeys;
        k.insert(k.end(), kOtherKeys.begin(), kOtherKeys.end());
        return k;
    }();
    return keys;
}

nlohmann::json to_json(const RunConfig& c) {
    json j = to_json(c.spec);
    j["epochs"] = c.train.epochs;
    j["batch_size"] = c.train.batch_size;
    j["lr_extractor"] = c.train.lr_extractor;
    j["lr_proxies"] = c.train.lr_proxies;
    j["weight_decay"] = c.train.weight_decay;
    j["beta1"] = c.train.beta1;
    j["beta2"] = c.train.beta2;
    j["eps"] = c.train.eps;
    j["seed"] = c.train.seed;
    j["data_source"] = to_string(c.data.source);
    j["data_path"] = c.data.path;
    j["n_per_class"] = c.data.n_per_class;
    j["noise_sigma"] = c.data.noise_sigma;
    j["overlap"] = c.data.overlap;
    j["data_seed"] = c.data.seed;
    j["split_train"] = c.data.split.train;
    j["split_val"] = c.data.split.val;
    j["split_test"] = c.data.split.test;
    j["split_seed"] = c.data.split.seed;
    j["out_dir"] = c.out_dir;
    j["checkpoint"] = c.checkpoint;
    j["eval_split"] = c.eval_split;
    j["seeds"] = c.seeds;
    j["sweep_parameter"] = c.sweep_parameter;
    j["sweep_values"] = c.sweep_values;
    j["ablation"] = c.ablation;
    j["ablation_values"] = c.ablation_values;
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& flat) {
    if (!flat.is_object()) throw ConfigError("config must be a JSON object");
    const auto& keys = run_config_keys();
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : flat.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }

    RunConfig c;
    json merged = to_json(c);
    for (const auto& [key, value] : flat.items()) merged[key] = value;
    // init_v0_norm has no default; null clears it.
    if (merged.contains("init_v0_norm") && merged["init_v0_norm"].is_null()) merged.erase("init_v0_norm");

    json spec_part = json::object();
    for (const auto& k : kSpecKeys) {
        if (merged.contains(k)) spec_part[k] = merged[k];
    }
    c.spec = problem_spec_from_json(spec_part);

    c.train.epochs = get<int>(merged, "epochs");
    c.train.batch_size = get<int>(merged, "batch_size");
    c.train.lr_extractor = get<double>(merged, "lr_extractor");
    c.train.lr_proxies = get<double>(merged, "lr_proxies");
    c.train.weight_decay = get<double>(merged, "weight_decay");
    c.train.beta1 = get<double>(merged, "beta1");
    c.train.beta2 = get<double>(merged, "beta2");
    c.train.eps = get<double>(merged, "eps");
    c.train.seed = get_seed(merged, "seed");
    c.data.source = parse_data_source(get<std::string>(merged, "data_source"));
    c.data.path = get<std::string>(merged, "data_path");
    c.data.n_per_class = get<int>(merged, "n_per_class");
    c.data.noise_sigma = get<double>(merged, "noise_sigma");
    c.data.overlap = get<double>(merged, "overlap");
    c.data.seed = get_seed(merged, "data_seed");
    c.data.split.train = get<double>(merged, "split_train");
    c.data.split.val = get<double>(merged, "split_val");
    c.data.split.test = get<double>(merged, "split_test");
    c.data.split.seed = get_seed(merged, "split_seed");
    c.out_dir = get<std::string>(merged, "out_dir");
    c.checkpoint = get<std::string>(merged, "checkpoint");
    c.eval_split = get<std::string>(merged, "eval_split");
    c.seeds = get<int>(merged, "seeds");
    c.sweep_parameter = get<std::string>(merged, "sweep_parameter");
    c.sweep_values = get<std::vector<double>>(merged, "sweep_values");
    c.ablation = get<std::string>(merged, "ablation");
    c.ablation_values = get<std::vector<double>>(merged, "ablation_values");
    c.validate();
    return c;
}

namespace {

json read_config_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path.string() + " must hold a JSON object");
    return j;
}

} // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(read_config_json(path));
}

std::pair<std::string, nlohmann::json> parse_override(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(text) + "' is not of the form key=value");
    }
    const std::string key(text.substr(0, eq));
    const std::string raw(text.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    return {key, value};
}

RunConfig apply_override(const RunConfig& config, const std::string& key, const nlohmann::json& value) {
    json j = to_json(config);
    j[key] = value;
    return run_config_from_json(j);
}

RunConfig apply_overrides(const RunConfig& config, const nlohmann::json& patch) {
    json j = to_json(config);
    for (const auto& [key, value] : patch.items()) j[key] = value;
    return run_config_from_json(j);
}

RunConfig build_run_config(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides) {
    json j = file ? read_config_json(*file) : json::object();
    for (const auto& text : overrides) {
        auto [key, value] = parse_override(text);
        j[key] = value;
    }
    return run_config_from_json(j);
}

} // namespace cpl
