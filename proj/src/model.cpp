#include "cpl/model.hpp"

#include "cpl/error.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace cpl {

namespace {

constexpr const char* kCheckpointFormat = "cpl-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string group_name(ParamGroup g) { return g == ParamGroup::Extractor ? "extractor" : "proxies"; }

ParamGroup parse_group(const std::string& s) {
    if (s == "extractor") return ParamGroup::Extractor;
    if (s == "proxies") return ParamGroup::Proxies;
    throw DataError("checkpoint: unknown parameter group '" + s + "'");
}

void fill_xavier_normal(Parameter& p, size_t fan_in, size_t fan_out, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)));
    for (double& v : p.value) v = dist(rng);
}

char smoothing_letter(SmoothingType t) {
    switch (t) {
    case SmoothingType::Poisson: return 'P';
    case SmoothingType::Binomial: return 'B';
    case SmoothingType::Exponential: return 'E';
    case SmoothingType::Triangular: return 'T';
    }
    return '?';
}

} // namespace

size_t ParameterStore::add(std::string name, ParamGroup group, size_t rows, size_t cols) {
    Parameter p;
    p.name = std::move(name);
    p.group = group;
    p.rows = rows;
    p.cols = cols;
    p.value.assign(rows * cols, 0.0);
    p.grad.assign(rows * cols, 0.0);
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

Parameter& ParameterStore::find(std::string_view name) {
    for (auto& p : params_) {
        if (p.name == name) return p;
    }
    throw ConfigError("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterStore::find(std::string_view name) const {
    return const_cast<ParameterStore*>(this)->find(name);
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

size_t ParameterStore::scalar_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

void ProblemSpec::validate() const {
    if (classes < 2) throw ConfigError("classes must be >= 2");
    if (input_dim < 1 || hidden < 1 || dim < 1) {
        throw ConfigError("input_dim, hidden and dim must all be >= 1");
    }
    similarity.validate();
    loss.validate(layout);
    if (loss.mode == LossMode::Soft) smoothing.validate();
    if (layout == LayoutType::HardSemicircular && dim < 2) {
        throw ConfigError("the semicircular layout needs dim >= 2 to span a plane");
    }
    if (norm_mode == NormMode::Fixed) {
        if (layout != LayoutType::HardLinear) {
            throw ConfigError("fixed v0 norm only applies to the hard-linear layout");
        }
        if (!(fixed_norm > 0.0)) throw ConfigError("v0_norm must be > 0");
    }
    if (init_v0_norm) {
        if (layout != LayoutType::HardLinear) {
            throw ConfigError("init_v0_norm only applies to the hard-linear layout");
        }
        if (!(*init_v0_norm > 0.0)) throw ConfigError("init_v0_norm must be > 0");
    }
    if (experimental) return;
    const auto sim = similarity.type;
    bool named = true;
    switch (layout) {
    case LayoutType::HardLinear: named = sim != SimilarityType::Cosine; break;
    case LayoutType::HardSemicircular: named = sim == SimilarityType::Cosine; break;
    case LayoutType::SoftFree:
        named = loss.mode == LossMode::Soft || sim != SimilarityType::NegEuclidean;
        break;
    }
    if (!named) {
        throw ConfigError("layout " + to_string(layout) + " with similarity " + to_string(sim) +
                          " is not a supported CPL variant; set experimental=true to run it anyway");
    }
}

std::string ProblemSpec::variant_name() const {
    std::string head;
    if (loss.mode == LossMode::Upl) {
        head = "UPL";
    } else {
        switch (layout) {
        case LayoutType::HardLinear: head = "H-L"; break;
        case LayoutType::HardSemicircular: head = "H-S"; break;
        case LayoutType::SoftFree: head = std::string("S-") + smoothing_letter(smoothing.type); break;
        }
    }
    return head + "/" + to_string(similarity.type);
}

nlohmann::json to_json(const ProblemSpec& spec) {
    nlohmann::json j;
    j["classes"] = spec.classes;
    j["input_dim"] = spec.input_dim;
    j["hidden"] = spec.hidden;
    j["dim"] = spec.dim;
    j["similarity"] = to_string(spec.similarity.type);
    j["scale"] = spec.similarity.scale;
    j["layout"] = to_string(spec.layout);
    j["v0_norm_mode"] = spec.norm_mode == NormMode::Fixed ? "fixed" : "learnable";
    j["v0_norm"] = spec.fixed_norm;
    j["loss"] = to_string(spec.loss.mode);
    j["alpha"] = spec.loss.alpha;
    j["smoothing"] = to_string(spec.smoothing.type);
    j["tau_p"] = spec.smoothing.tau_p;
    j["tau_b"] = spec.smoothing.tau_b;
    j["tau_e"] = spec.smoothing.tau_e;
    j["tri_a"] = spec.smoothing.tri_a;
    j["tri_b"] = spec.smoothing.tri_b;
    if (spec.smoothing.normalization) {
        j["smoothing_normalization"] =
            *spec.smoothing.normalization == Normalization::Softmax ? "softmax" : "direct";
    } else {
        j["smoothing_normalization"] = "auto";
    }
    if (spec.init_v0_norm) j["init_v0_norm"] = *spec.init_v0_norm;
    j["experimental"] = spec.experimental;
    return j;
}

ProblemSpec problem_spec_from_json(const nlohmann::json& j) {
    ProblemSpec s;
    try {
        s.classes = j.at("classes").get<int>();
        s.input_dim = j.at("input_dim").get<int>();
        s.hidden = j.at("hidden").get<int>();
        s.dim = j.at("dim").get<int>();
        s.similarity.type = parse_similarity(j.at("similarity").get<std::string>());
        s.similarity.scale = j.at("scale").get<double>();
        s.layout = parse_layout(j.at("layout").get<std::string>());
        const auto mode = j.at("v0_norm_mode").get<std::string>();
        if (mode != "fixed" && mode != "learnable") {
            throw ConfigError("v0_norm_mode must be 'learnable' or 'fixed'");
        }
        s.norm_mode = mode == "fixed" ? NormMode::Fixed : NormMode::Learnable;
        s.fixed_norm = j.at("v0_norm").get<double>();
        s.loss.mode = parse_loss_mode(j.at("loss").get<std::string>());
        s.loss.alpha = j.at("alpha").get<double>();
        s.smoothing.type = parse_smoothing(j.at("smoothing").get<std::string>());
        s.smoothing.tau_p = j.at("tau_p").get<double>();
        s.smoothing.tau_b = j.at("tau_b").get<double>();
        s.smoothing.tau_e = j.at("tau_e").get<double>();
        s.smoothing.tri_a = j.at("tri_a").get<double>();
        s.smoothing.tri_b = j.at("tri_b").get<double>();
        const auto norm = j.at("smoothing_normalization").get<std::string>();
        if (norm == "softmax") {
            s.smoothing.normalization = Normalization::Softmax;
        } else if (norm == "direct") {
            s.smoothing.normalization = Normalization::Direct;
        } else if (norm != "auto") {
            throw ConfigError("smoothing_normalization must be auto, softmax or direct");
        }
        if (j.contains("init_v0_norm")) s.init_v0_norm = j.at("init_v0_norm").get<double>();
        s.experimental = j.at("experimental").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("problem spec: ") + e.what());
    }
    return s;
}

FeatureExtractor::FeatureExtractor(ParameterStore& store, int input_dim, int hidden, int dim)
    : input_dim_(input_dim), hidden_(hidden), dim_(dim) {
    w1_ = store.add("extractor.w1", ParamGroup::Extractor, hidden, input_dim);
    b1_ = store.add("extractor.b1", ParamGroup::Extractor, hidden, 1);
    w2_ = store.add("extractor.w2", ParamGroup::Extractor, dim, hidden);
    b2_ = store.add("extractor.b2", ParamGroup::Extractor, dim, 1);
}

void FeatureExtractor::forward(const ParameterStore& store, std::span<const double> x,
                               Cache& cache) const {
    if (static_cast<int>(x.size()) != input_dim_) {
        throw ConfigError("extractor: input has dimension " + std::to_string(x.size()) +
                          ", expected " + std::to_string(input_dim_));
    }
    const auto& w1 = store[w1_].value;
    const auto& b1 = store[b1_].value;
    const auto& w2 = store[w2_].value;
    const auto& b2 = store[b2_].value;
    cache.pre_hidden.resize(hidden_);
    cache.hidden.resize(hidden_);
    cache.feature.resize(dim_);
    for (int j = 0; j < hidden_; ++j) {
        const double* wr = &w1[static_cast<size_t>(j) * input_dim_];
        double z = b1[j];
        for (int i = 0; i < input_dim_; ++i) z += wr[i] * x[i];
        cache.pre_hidden[j] = z;
        cache.hidden[j] = z > 0.0 ? z : 0.0;
    }
    for (int o = 0; o < dim_; ++o) {
        const double* wr = &w2[static_cast<size_t>(o) * hidden_];
        double z = b2[o];
        for (int j = 0; j < hidden_; ++j) z += wr[j] * cache.hidden[j];
        cache.feature[o] = z;
    }
}

Vector FeatureExtractor::forward(const ParameterStore& store, std::span<const double> x) const {
    Cache cache;
    forward(store, x, cache);
    return std::move(cache.feature);
}

void FeatureExtractor::backward(ParameterStore& store, std::span<const double> x, const Cache& cache,
                                std::span<const double> d_feature) const {
    const auto& w2 = store[w2_].value;
    auto& g_w1 = store[w1_].grad;
    auto& g_b1 = store[b1_].grad;
    auto& g_w2 = store[w2_].grad;
    auto& g_b2 = store[b2_].grad;
    Vector d_hidden(hidden_, 0.0);
    for (int o = 0; o < dim_; ++o) {
        const double g = d_feature[o];
        if (g == 0.0) continue;
        g_b2[o] += g;
        const size_t base = static_cast<size_t>(o) * hidden_;
        for (int j = 0; j < hidden_; ++j) {
            g_w2[base + j] += g * cache.hidden[j];
            d_hidden[j] += g * w2[base + j];
        }
    }
    for (int j = 0; j < hidden_; ++j) {
        if (cache.pre_hidden[j] <= 0.0) continue;
        const double g = d_hidden[j];
        g_b1[j] += g;
        const size_t base = static_cast<size_t>(j) * input_dim_;
        for (int i = 0; i < input_dim_; ++i) g_w1[base + i] += g * x[i];
    }
}

CplModel::CplModel(ProblemSpec spec)
    : spec_(std::move(spec)),
      learner_(spec_.layout, std::max(spec_.classes, 2), std::max(spec_.dim, 1), spec_.norm_mode,
               spec_.fixed_norm) {
    spec_.validate();
    extractor_ = FeatureExtractor(store_, spec_.input_dim, spec_.hidden, spec_.dim);
    proxy_index_ = store_.add("proxies.v", ParamGroup::Proxies, learner_.parameter_count(), spec_.dim);
}

Vector CplModel::extract(std::span<const double> x) const { return extractor_.forward(store_, x); }

ProxySet CplModel::proxies() const { return learner_.generate(proxy_params().value); }

int CplModel::predict_from_feature(std::span<const double> f, const ProxySet& proxies) const {
    int best = 0;
    double best_sim = similarity(spec_.similarity, f, proxies[0]);
    for (int k = 1; k < static_cast<int>(proxies.size()); ++k) {
        const double s = similarity(spec_.similarity, f, proxies[k]);
        if (s > best_sim) {
            best_sim = s;
            best = k;
        }
    }
    return best;
}

int CplModel::predict_rank(std::span<const double> x) const {
    return predict_from_feature(extract(x), proxies());
}

LossTargets CplModel::loss_targets() const {
    return make_loss_targets(proxies(), spec_.similarity, spec_.loss, spec_.smoothing);
}

double CplModel::batch_loss(std::span<const SampleRef> batch, const LossTargets& targets) const {
    if (batch.empty()) throw DataError("empty batch");
    const ProxySet proxies = this->proxies();
    double total = 0.0;
    for (const auto& s : batch) {
        const Vector f = extract(s.x);
        total += loss_total(f, s.label, proxies, spec_.similarity, spec_.loss, spec_.layout, targets)
                     .value;
    }
    return total / static_cast<double>(batch.size());
}

BatchLoss CplModel::forward_backward(std::span<const SampleRef> batch, const LossTargets& targets) {
    if (batch.empty()) throw DataError("empty batch");
    store_.zero_grad();
    const ProxySet proxies = this->proxies();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    ProxySet d_proxies(proxies.size(), Vector(spec_.dim, 0.0));
    FeatureExtractor::Cache cache;
    BatchLoss out;
    for (const auto& s : batch) {
        extractor_.forward(store_, s.x, cache);
        LossOutput l = loss_total(cache.feature, s.label, proxies, spec_.similarity, spec_.loss,
                                  spec_.layout, targets);
        out.value += l.value;
        out.singular_count += l.singular_count;
        for (double& g : l.d_feature) g *= inv_n;
        extractor_.backward(store_, s.x, cache, l.d_feature);
        for (size_t k = 0; k < proxies.size(); ++k) {
            for (int i = 0; i < spec_.dim; ++i) d_proxies[k][i] += l.d_proxies[k][i] * inv_n;
        }
    }
    learner_.backward(proxy_params().value, d_proxies, proxy_params().grad);
    out.value *= inv_n;
    return out;
}

void CplModel::project() { learner_.project(proxy_params().value); }

CplModel init_model(const ProblemSpec& spec, std::uint64_t seed) {
    CplModel model(spec);
    std::mt19937_64 rng(seed);
    auto& store = model.parameters();
    auto& w1 = store.find("extractor.w1");
    auto& w2 = store.find("extractor.w2");
    fill_xavier_normal(w1, w1.cols, w1.rows, rng);
    fill_xavier_normal(w2, w2.cols, w2.rows, rng);
    // Proxy block is N x d: fan_in = d, fan_out = N.
    auto& v = model.proxy_params();
    fill_xavier_normal(v, v.cols, v.rows, rng);
    if (spec.init_v0_norm) {
        std::span<double> v0(v.value.data(), v.cols);
        const double n = norm(v0);
        if (n == 0.0) throw DegenerateError("initial v0 has zero norm");
        for (double& x : v0) x *= *spec.init_v0_norm / n;
    }
    model.project();
    // Fails fast on degenerate generators (zero v0, parallel v0/v1).
    (void)model.proxies();
    return model;
}

nlohmann::json checkpoint_to_json(const CplModel& model, std::uint64_t seed, int epoch) {
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["seed"] = seed;
    j["epoch"] = epoch;
    j["spec"] = to_json(model.spec());
    auto& params = j["parameters"] = nlohmann::json::array();
    for (const auto& p : model.parameters()) {
        params.push_back({{"name", p.name},
                          {"group", group_name(p.group)},
                          {"shape", {p.rows, p.cols}},
                          {"data", p.value}});
    }
    return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat) {
            throw DataError("not a CPL checkpoint (format field mismatch)");
        }
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw DataError("unsupported checkpoint version " + j.at("version").dump());
        }
        Checkpoint ck{CplModel(problem_spec_from_json(j.at("spec"))), j.at("seed").get<std::uint64_t>(),
                      j.at("epoch").get<int>()};
        auto& store = ck.model.parameters();
        const auto& params = j.at("parameters");
        if (params.size() != store.size()) throw DataError("checkpoint: parameter count mismatch");
        for (const auto& pj : params) {
            auto& p = store.find(pj.at("name").get<std::string>());
            const auto shape = pj.at("shape").get<std::vector<size_t>>();
            if (shape.size() != 2 || shape[0] != p.rows || shape[1] != p.cols ||
                parse_group(pj.at("group").get<std::string>()) != p.group) {
                throw DataError("checkpoint: shape or group mismatch for " + p.name);
            }
            auto data = pj.at("data").get<std::vector<double>>();
            if (data.size() != p.size()) throw DataError("checkpoint: data size mismatch for " + p.name);
            p.value = std::move(data);
        }
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const CplModel& model, std::uint64_t seed,
                     int epoch) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(model, seed, epoch).dump(1) << '\n';
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

} // namespace cpl
