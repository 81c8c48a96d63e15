#include "cpl/commands.hpp"

#include "cpl/error.hpp"
#include "cpl/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace cpl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shortest form that still tells grid values apart.
std::string label_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw DataError("failed writing " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

SummaryRow summarize(std::string label, const std::vector<std::uint64_t>& seeds,
                     const std::vector<Metrics>& runs) {
    SummaryRow row;
    row.label = std::move(label);
    row.runs = static_cast<int>(runs.size());
    row.seeds = seeds;
    row.per_seed = runs;
    for (const auto& m : runs) {
        row.accuracy += m.accuracy;
        row.mae += m.mae;
    }
    row.accuracy /= static_cast<double>(runs.size());
    row.mae /= static_cast<double>(runs.size());
    return row;
}

// Trains every config under seeds seed, seed+1, ... on one shared split.
std::vector<SummaryRow> run_rows(const RunConfig& base, const std::vector<RunConfig>& configs,
                                 const std::vector<std::string>& labels) {
    RunConfig data_config = base;
    const DatasetSplits splits = build_splits(data_config);
    std::vector<SummaryRow> rows;
    for (size_t i = 0; i < configs.size(); ++i) {
        RunConfig c = configs[i];
        c.spec.input_dim = data_config.spec.input_dim;
        std::vector<std::uint64_t> seeds;
        std::vector<Metrics> runs;
        for (int s = 0; s < base.seeds; ++s) {
            const std::uint64_t seed = base.train.seed + static_cast<std::uint64_t>(s);
            seeds.push_back(seed);
            runs.push_back(run_once(c, seed, splits).test);
        }
        rows.push_back(summarize(labels[i], seeds, runs));
    }
    return rows;
}

json sweep_value(const std::string& parameter, double v) {
    if (parameter == "dim") {
        if (v != std::floor(v) || v < 1.0) throw ConfigError("dim sweep values must be positive integers");
        return static_cast<int>(v);
    }
    return v;
}

Checkpoint load_for(const RunConfig& config) {
    const fs::path path = config.checkpoint_path();
    if (!fs::exists(path)) {
        throw DataError("checkpoint " + path.string() + " not found; run `cpl train` first or set checkpoint");
    }
    return load_checkpoint(path);
}

// Dataset described by the config, checked against the checkpoint's model.
LabeledDataset eval_data(const RunConfig& config, const CplModel& model, DatasetSplits& splits) {
    RunConfig c = config;
    splits = build_splits(c);
    LabeledDataset scratch;
    const LabeledDataset& data = select_split(splits, config.eval_split, scratch);
    if (data.input_dim != model.spec().input_dim) {
        throw DataError("dataset has input dimension " + std::to_string(data.input_dim) +
                        " but the checkpoint expects " + std::to_string(model.spec().input_dim));
    }
    if (data.classes != model.spec().classes) {
        throw DataError("dataset has " + std::to_string(data.classes) + " classes but the checkpoint was trained on " +
                        std::to_string(model.spec().classes));
    }
    return data;
}

} // namespace

LabeledDataset build_dataset(RunConfig& config) {
    const auto& d = config.data;
    const auto& s = config.spec;
    switch (d.source) {
    case DataSource::SyntheticLinear:
        return gen_synthetic_linear(s.classes, d.n_per_class, s.input_dim, d.noise_sigma, d.overlap, d.seed);
    case DataSource::SyntheticRing:
        return gen_synthetic_ring(s.classes, d.n_per_class, s.input_dim, d.noise_sigma, d.seed);
    case DataSource::Csv: {
        LabeledDataset data = load_csv(d.path, s.classes);
        config.spec.input_dim = data.input_dim;
        config.spec.validate();
        return data;
    }
    }
    throw ConfigError("unknown data source");
}

DatasetSplits build_splits(RunConfig& config) { return split(build_dataset(config), config.data.split); }

const LabeledDataset& select_split(const DatasetSplits& splits, const std::string& name,
                                   LabeledDataset& scratch) {
    if (name == "train") return splits.train;
    if (name == "val") return splits.val;
    if (name == "test") return splits.test;
    if (name == "all") {
        scratch = splits.train;
        for (const auto* part : {&splits.val, &splits.test}) {
            scratch.inputs.insert(scratch.inputs.end(), part->inputs.begin(), part->inputs.end());
            scratch.labels.insert(scratch.labels.end(), part->labels.begin(), part->labels.end());
        }
        return scratch;
    }
    throw ConfigError("unknown split '" + name + "'");
}

RunOutcome run_once(const RunConfig& config, std::uint64_t seed, const DatasetSplits& splits) {
    TrainConfig tc = config.train;
    tc.seed = seed;
    CplModel model = init_model(config.spec, seed);
    RunOutcome out{train(std::move(model), splits.train, splits.val, tc), {}};
    out.test = evaluate(out.result.best, splits.test);
    return out;
}

std::string sweep_key(const std::string& parameter) {
    if (parameter == "s") return "scale";
    if (parameter == "tau_p" || parameter == "tau_b" || parameter == "alpha" || parameter == "dim") {
        return parameter;
    }
    throw ConfigError("unknown sweep parameter '" + parameter + "' (expected s, tau_p, tau_b, alpha, dim)");
}

std::vector<double> default_sweep_grid(const std::string& parameter) {
    sweep_key(parameter);
    std::vector<double> v;
    if (parameter == "s") {
        for (int i = 2; i <= 10; i += 2) v.push_back(i);
    } else if (parameter == "tau_p" || parameter == "tau_b") {
        for (int i = 7; i <= 17; i += 2) v.push_back(i / 100.0);
    } else if (parameter == "alpha") {
        for (int i = 0; i <= 12; i += 2) v.push_back(i);
    } else {
        for (int d = 1; d <= 2048; d *= 2) v.push_back(d);
    }
    return v;
}

std::vector<SummaryRow> run_sweep(const RunConfig& config, const std::string& parameter,
                                  const std::vector<double>& values) {
    const std::string key = sweep_key(parameter);
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<RunConfig> configs;
    std::vector<std::string> labels;
    for (double v : values) {
        configs.push_back(apply_override(config, key, sweep_value(parameter, v)));
        labels.push_back(label_num(v));
    }
    return run_rows(config, configs, labels);
}

std::vector<SummaryRow> run_ablation(const RunConfig& config, const std::string& ablation,
                                     const std::vector<double>& values) {
    std::vector<RunConfig> configs{config};
    std::vector<std::string> labels;
    if (ablation == "fixed-v0-norm") {
        if (config.spec.layout != LayoutType::HardLinear) {
            throw ConfigError("the fixed-v0-norm ablation needs layout hard-linear");
        }
        if (config.spec.norm_mode != NormMode::Learnable) {
            throw ConfigError("the fixed-v0-norm reference must use a learnable v0 norm");
        }
        const std::vector<double> norms = values.empty() ? std::vector<double>{1, 3, 5, 7} : values;
        labels.push_back("learnable");
        for (double n : norms) {
            configs.push_back(apply_overrides(config, {{"v0_norm_mode", "fixed"}, {"v0_norm", n}}));
            labels.push_back("fixed-v0-norm=" + label_num(n));
        }
    } else if (ablation == "neg-euclidean" || ablation == "upl-baseline") {
        if (!values.empty()) throw ConfigError("ablation_values only apply to fixed-v0-norm");
        if (ablation == "neg-euclidean") {
            if (config.spec.similarity.type == SimilarityType::NegEuclidean) {
                throw ConfigError("the neg-euclidean ablation needs a different reference similarity");
            }
            configs.push_back(apply_override(config, "similarity", "neg-euclidean"));
        } else {
            if (config.spec.loss.mode == LossMode::Upl) {
                throw ConfigError("the upl-baseline ablation needs a CPL reference, not loss=upl");
            }
            json patch{{"layout", "soft-free"}, {"loss", "upl"}};
            if (config.spec.similarity.type == SimilarityType::NegEuclidean) patch["similarity"] = "euclidean-t";
            configs.push_back(apply_overrides(config, patch));
        }
        for (const auto& c : configs) labels.push_back(c.spec.variant_name());
    } else {
        throw ConfigError("unknown ablation '" + ablation + "' (expected neg-euclidean, fixed-v0-norm, upl-baseline)");
    }
    return run_rows(config, configs, labels);
}

void write_summary_csv(const fs::path& path, const std::string& first_column, const std::vector<SummaryRow>& rows) {
    auto out = open_out(path);
    out << first_column << ",accuracy,mae\n";
    for (const auto& r : rows) out << r.label << "," << num(r.accuracy) << "," << num(r.mae) << "\n";
    finish(out, path);
}

void write_runs_csv(const fs::path& path, const std::string& first_column, const std::vector<SummaryRow>& rows) {
    auto out = open_out(path);
    out << first_column << ",seed,accuracy,mae\n";
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.per_seed.size(); ++i) {
            out << r.label << "," << r.seeds[i] << "," << num(r.per_seed[i].accuracy) << ","
                << num(r.per_seed[i].mae) << "\n";
        }
    }
    finish(out, path);
}

int cmd_train(const RunConfig& config, std::ostream& out) {
    RunConfig c = config;
    const DatasetSplits splits = build_splits(c);
    const fs::path dir = c.out_dir;
    ensure_dir(dir);
    write_text(dir / "config.json", to_json(c).dump(2) + "\n");

    const RunOutcome run = run_once(c, c.train.seed, splits);
    const fs::path ckpt = c.checkpoint_path();
    if (ckpt.has_parent_path()) ensure_dir(ckpt.parent_path());
    save_checkpoint(ckpt, run.result.best, c.train.seed, run.result.best_epoch);
    write_metric_log(dir / "metrics.csv", run.result.log);

    const fs::path summary = dir / "summary.csv";
    auto s = open_out(summary);
    s << "split,count,accuracy,mae\n";
    s << "val," << run.result.best_val.count << "," << num(run.result.best_val.accuracy) << ","
      << num(run.result.best_val.mae) << "\n";
    s << "test," << run.test.count << "," << num(run.test.accuracy) << "," << num(run.test.mae) << "\n";
    finish(s, summary);

    out << c.spec.variant_name() << ": best epoch " << run.result.best_epoch << " of " << c.train.epochs
        << ", val accuracy " << short_num(run.result.best_val.accuracy) << " MAE "
        << short_num(run.result.best_val.mae) << ", test accuracy " << short_num(run.test.accuracy) << " MAE "
        << short_num(run.test.mae) << "\n";
    if (run.result.singular_gradients > 0) {
        out << "note: " << run.result.singular_gradients
            << " feature/proxy coincidences had their neg-euclidean gradient set to zero\n";
    }
    out << "wrote " << ckpt.string() << ", " << (dir / "metrics.csv").string() << ", " << summary.string() << "\n";
    return static_cast<int>(ExitCode::Ok);
}

int cmd_eval(const RunConfig& config, std::ostream& out) {
    const Checkpoint ckpt = load_for(config);
    DatasetSplits splits;
    const LabeledDataset data = eval_data(config, ckpt.model, splits);
    const Metrics m = evaluate(ckpt.model, data);
    ensure_dir(config.out_dir);
    const fs::path path = fs::path(config.out_dir) / "eval.csv";
    auto f = open_out(path);
    f << "split,count,accuracy,mae\n";
    f << config.eval_split << "," << m.count << "," << num(m.accuracy) << "," << num(m.mae) << "\n";
    finish(f, path);
    out << ckpt.model.spec().variant_name() << " on " << config.eval_split << " (" << m.count
        << " samples): accuracy " << short_num(m.accuracy) << " MAE " << short_num(m.mae) << "\nwrote "
        << path.string() << "\n";
    return static_cast<int>(ExitCode::Ok);
}

int cmd_sweep(const RunConfig& config, std::ostream& out) {
    const std::string& p = config.sweep_parameter;
    const auto values = config.sweep_values.empty() ? default_sweep_grid(p) : config.sweep_values;
    const auto rows = run_sweep(config, p, values);
    ensure_dir(config.out_dir);
    const fs::path path = fs::path(config.out_dir) / ("sweep_" + p + ".csv");
    const fs::path runs = fs::path(config.out_dir) / ("sweep_" + p + "_runs.csv");
    write_summary_csv(path, "value", rows);
    write_runs_csv(runs, "value", rows);
    out << "sweep " << p << " for " << config.spec.variant_name() << ", " << config.seeds << " seed(s) each\n";
    for (const auto& r : rows) {
        out << "  " << p << "=" << r.label << "  accuracy " << short_num(r.accuracy) << "  MAE " << short_num(r.mae)
            << "\n";
    }
    out << "wrote " << path.string() << ", " << runs.string() << "\n";
    return static_cast<int>(ExitCode::Ok);
}

int cmd_ablate(const RunConfig& config, std::ostream& out) {
    const auto rows = run_ablation(config, config.ablation, config.ablation_values);
    ensure_dir(config.out_dir);
    const fs::path path = fs::path(config.out_dir) / ("ablate_" + config.ablation + ".csv");
    const fs::path runs = fs::path(config.out_dir) / ("ablate_" + config.ablation + "_runs.csv");
    write_summary_csv(path, "variant", rows);
    write_runs_csv(runs, "variant", rows);
    out << "ablation " << config.ablation << ", " << config.seeds << " seed(s) each\n";
    for (const auto& r : rows) {
        out << "  " << r.label << "  accuracy " << short_num(r.accuracy) << "  MAE " << short_num(r.mae) << "\n";
    }
    out << "wrote " << path.string() << ", " << runs.string() << "\n";
    return static_cast<int>(ExitCode::Ok);
}

int cmd_viz(const RunConfig& config, std::ostream& out) {
    const Checkpoint ckpt = load_for(config);
    const CplModel& model = ckpt.model;
    if (model.spec().dim != 2) {
        throw ConfigError("viz needs a checkpoint with feature dimension 2 (this one has " +
                          std::to_string(model.spec().dim) + "); train with --set dim=2");
    }
    DatasetSplits splits;
    const LabeledDataset data = eval_data(config, model, splits);
    const ProxySet proxies = model.proxies();
    const int classes = model.spec().classes;

    const fs::path dir = config.out_dir;
    ensure_dir(dir);
    const fs::path proxy_path = dir / "proxies.csv";
    auto p = open_out(proxy_path);
    p << "class,x,y\n";
    for (int k = 0; k < classes; ++k) p << k << "," << num(proxies[k][0]) << "," << num(proxies[k][1]) << "\n";
    finish(p, proxy_path);

    const fs::path feature_path = dir / "features.csv";
    auto f = open_out(feature_path);
    f << "x,y,label,predicted,correct\n";
    std::vector<ScatterPoint> points;
    size_t wrong = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        const Vector feat = model.extract(data.inputs[i]);
        const int pred = model.predict_from_feature(feat, proxies);
        points.push_back({feat[0], feat[1], data.labels[i], pred});
        wrong += pred != data.labels[i];
        f << num(feat[0]) << "," << num(feat[1]) << "," << data.labels[i] << "," << pred << ","
          << (pred == data.labels[i] ? 1 : 0) << "\n";
    }
    finish(f, feature_path);

    const fs::path svg_path = dir / "layout.svg";
    write_text(svg_path, render_layout_svg(proxies, points, classes,
                                           model.spec().variant_name() + ", " + config.eval_split + " split"));
    out << "plotted " << data.size() << " samples (" << wrong << " misclassified) and " << classes
        << " proxies\nwrote " << proxy_path.string() << ", " << feature_path.string() << ", " << svg_path.string()
        << "\n";
    return static_cast<int>(ExitCode::Ok);
}

} // namespace cpl
