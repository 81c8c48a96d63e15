#include "cpl/training.hpp"

#include "cpl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

namespace cpl {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr_extractor > 0.0) || !(lr_proxies > 0.0)) throw ConfigError("learning rates must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
}

AdamW::AdamW(const ParameterStore& store, const TrainConfig& config) : config_(config) {
    config_.validate();
    for (const auto& p : store) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamW::step(ParameterStore& store) {
    for (size_t i = 0; i < store.size(); ++i) {
        for (size_t j = 0; j < store[i].size(); ++j) {
            if (!std::isfinite(store[i].grad[j])) {
                throw NumericError("non-finite gradient in " + store[i].name + "[" +
                                   std::to_string(j) + "] at step " + std::to_string(t_ + 1));
            }
        }
    }
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < store.size(); ++i) {
        auto& p = store[i];
        const double lr = p.group == ParamGroup::Extractor ? config_.lr_extractor : config_.lr_proxies;
        const double decay = 1.0 - lr * config_.weight_decay;
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < p.size(); ++j) {
            const double g = p.grad[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            const double m_hat = m[j] / corr1;
            const double v_hat = v[j] / corr2;
            p.value[j] = p.value[j] * decay - lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

Metrics score_predictions(const std::vector<int>& predicted, const std::vector<int>& labels) {
    if (predicted.empty()) throw DataError("cannot score an empty prediction set");
    if (predicted.size() != labels.size()) throw DataError("prediction/label count mismatch");
    Metrics m;
    m.count = predicted.size();
    long correct = 0, abs_err = 0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        const int e = std::abs(predicted[i] - labels[i]);
        correct += e == 0;
        abs_err += e;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.count);
    m.mae = static_cast<double>(abs_err) / static_cast<double>(m.count);
    return m;
}

Metrics evaluate(const CplModel& model, const LabeledDataset& data) {
    if (data.empty()) throw DataError("cannot evaluate on an empty dataset");
    if (data.input_dim != model.spec().input_dim) {
        throw DataError("dataset input dimension " + std::to_string(data.input_dim) +
                        " does not match the model's " + std::to_string(model.spec().input_dim));
    }
    const ProxySet proxies = model.proxies();
    std::vector<int> predicted;
    predicted.reserve(data.size());
    for (const auto& x : data.inputs) predicted.push_back(model.predict_from_feature(model.extract(x), proxies));
    return score_predictions(predicted, data.labels);
}

TrainResult train(CplModel model, const LabeledDataset& train_set, const LabeledDataset& val_set,
                  const TrainConfig& config, const EpochObserver& observer) {
    config.validate();
    if (train_set.empty()) throw DataError("training split is empty");
    if (val_set.empty()) throw DataError("validation split is empty");
    for (const auto* d : {&train_set, &val_set}) {
        if (d->input_dim != model.spec().input_dim) {
            throw DataError("dataset input dimension does not match the model");
        }
        for (int y : d->labels) {
            if (y < 0 || y >= model.spec().classes) {
                throw DataError("label " + std::to_string(y) + " outside the model's class range");
            }
        }
    }

    AdamW optimizer(model.parameters(), config);
    std::mt19937_64 rng(config.seed);
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<SampleRef> batch;
    batch.reserve(config.batch_size);

    TrainResult result{model, 0, {}, {}, 0};
    bool have_best = false;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t stop = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (size_t i = start; i < stop; ++i) {
                batch.push_back({train_set.inputs[order[i]], train_set.labels[order[i]]});
            }
            const LossTargets targets = model.loss_targets();
            const BatchLoss bl = model.forward_backward(batch, targets);
            if (!std::isfinite(bl.value)) {
                throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
            }
            loss_sum += bl.value * static_cast<double>(batch.size());
            result.singular_gradients += bl.singular_count;
            optimizer.step(model.parameters());
            model.project();
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        const Metrics val = evaluate(model, val_set);
        rec.val_accuracy = val.accuracy;
        rec.val_mae = val.mae;
        result.log.push_back(rec);
        if (!have_best || val.mae < result.best_val.mae) {
            have_best = true;
            result.best = model;
            result.best_epoch = epoch;
            result.best_val = val;
        }
        if (observer) observer(rec, model);
    }
    return result;
}

void write_metric_log(std::ostream& out, const std::vector<EpochRecord>& log) {
    out << "epoch,train_loss,val_accuracy,val_mae\n";
    char buf[128];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_accuracy,
                      r.val_mae);
        out << buf;
    }
}

void write_metric_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metric log " + path.string());
    write_metric_log(out, log);
    if (!out) throw DataError("failed writing metric log " + path.string());
}

} // namespace cpl
