#pragma once

#include "cpl/config.hpp"
#include "cpl/data.hpp"
#include "cpl/training.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cpl {

// The configured dataset. For CSV input the model's input_dim is taken from
// the file, so callers should use the returned config.
LabeledDataset build_dataset(RunConfig& config);
DatasetSplits build_splits(RunConfig& config);
const LabeledDataset& select_split(const DatasetSplits& splits, const std::string& name,
                                   LabeledDataset& scratch);

struct RunOutcome {
    TrainResult result;
    Metrics test;
};

// One training run from init seed `seed` (also the shuffle seed), scored on
// the test split.
RunOutcome run_once(const RunConfig& config, std::uint64_t seed, const DatasetSplits& splits);

struct SummaryRow {
    std::string label;
    int runs = 0;
    double accuracy = 0.0; // mean over seeds
    double mae = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<Metrics> per_seed;
};

// Config key changed by a sweep parameter: s -> scale, the rest map to
// themselves.
std::string sweep_key(const std::string& parameter);
std::vector<double> default_sweep_grid(const std::string& parameter);

// One row per value, `config.seeds` runs each on the same data.
std::vector<SummaryRow> run_sweep(const RunConfig& config, const std::string& parameter,
                                  const std::vector<double>& values);

// Reference row first, then one row per variant.
std::vector<SummaryRow> run_ablation(const RunConfig& config, const std::string& ablation,
                                     const std::vector<double>& values);

// `<first_column>,accuracy,mae` with seed means.
void write_summary_csv(const std::filesystem::path& path, const std::string& first_column,
                       const std::vector<SummaryRow>& rows);
// `<first_column>,seed,accuracy,mae`, one line per run.
void write_runs_csv(const std::filesystem::path& path, const std::string& first_column,
                    const std::vector<SummaryRow>& rows);

// Each command prints a short report to `out` and returns ExitCode::Ok;
// failures are thrown as cpl::Error.
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_eval(const RunConfig& config, std::ostream& out);
int cmd_sweep(const RunConfig& config, std::ostream& out);
int cmd_ablate(const RunConfig& config, std::ostream& out);
int cmd_viz(const RunConfig& config, std::ostream& out);

} // namespace cpl
