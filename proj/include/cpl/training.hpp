#pragma once

#include "cpl/data.hpp"
#include "cpl/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

namespace cpl {

struct TrainConfig {
    int epochs = 48;
    int batch_size = 32;
    double lr_extractor = 0.001;
    double lr_proxies = 0.01;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

// Decoupled-weight-decay Adam over a ParameterStore with one learning rate
// per parameter group.
class AdamW {
public:
    AdamW(const ParameterStore& store, const TrainConfig& config);

    // Throws NumericError naming the tensor if any gradient is NaN or infinite.
    void step(ParameterStore& store);
    long steps() const { return t_; }

private:
    TrainConfig config_;
    long t_ = 0;
    std::vector<Vector> m_;
    std::vector<Vector> v_;
};

struct Metrics {
    double accuracy = 0.0;
    double mae = 0.0;
    size_t count = 0;
};

Metrics evaluate(const CplModel& model, const LabeledDataset& data);
// Accuracy and MAE of a prediction vector against labels.
Metrics score_predictions(const std::vector<int>& predicted, const std::vector<int>& labels);

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_mae = 0.0;
};

struct TrainResult {
    CplModel best;
    int best_epoch = 0;
    Metrics best_val;
    std::vector<EpochRecord> log;
    long singular_gradients = 0; // neg-euclidean coincidences seen while training
};

using EpochObserver = std::function<void(const EpochRecord&, const CplModel&)>;

// Seeded shuffle, mini-batch AdamW, validation after every epoch; returns the
// parameters with minimum validation MAE (earliest epoch on ties).
TrainResult train(CplModel model, const LabeledDataset& train_set, const LabeledDataset& val_set,
                  const TrainConfig& config, const EpochObserver& observer = {});

// CSV `epoch,train_loss,val_accuracy,val_mae` with round-trip precision.
void write_metric_log(std::ostream& out, const std::vector<EpochRecord>& log);
void write_metric_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log);

} // namespace cpl
