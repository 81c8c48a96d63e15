#include "cpl/distributions.hpp"

#include "cpl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace cpl {

namespace {

void require_target(int target, int classes) {
    if (target < 0 || target >= classes) {
        throw ConfigError("target class " + std::to_string(target) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
}

} // namespace

int CategoricalDistribution::mode() const {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

CategoricalDistribution softmax(std::span<const double> logits) {
    if (logits.empty()) throw ConfigError("softmax of an empty vector");
    double m = -INFINITY;
    for (double z : logits) {
        if (std::isnan(z)) throw NumericError("softmax: NaN logit");
        m = std::max(m, z);
    }
    if (!std::isfinite(m)) throw NumericError("softmax: non-finite logits");
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    const double log_z = m + std::log(sum);
    CategoricalDistribution out;
    out.log_probs.resize(logits.size());
    out.probs.resize(logits.size());
    for (size_t k = 0; k < logits.size(); ++k) {
        out.log_probs[k] = logits[k] - log_z;
        out.probs[k] = std::exp(out.log_probs[k]);
    }
    return out;
}

CategoricalDistribution from_probabilities(std::span<const double> probs) {
    CategoricalDistribution out;
    out.probs.assign(probs.begin(), probs.end());
    out.log_probs.resize(probs.size());
    for (size_t k = 0; k < probs.size(); ++k) {
        if (!(probs[k] > 0.0)) throw NumericError("distribution entry is not strictly positive");
        out.log_probs[k] = std::log(probs[k]);
    }
    return out;
}

CategoricalDistribution assignment_distribution(std::span<const double> f, const ProxySet& proxies,
                                                const Similarity& kind) {
    if (proxies.empty()) throw ConfigError("assignment distribution: no proxies");
    Vector logits(proxies.size());
    for (size_t k = 0; k < proxies.size(); ++k) logits[k] = similarity(kind, f, proxies[k]);
    return softmax(logits);
}

CategoricalDistribution proxy_distribution(int target, const ProxySet& proxies,
                                           const Similarity& kind) {
    require_target(target, static_cast<int>(proxies.size()));
    return assignment_distribution(proxies[target], proxies, kind);
}

std::string to_string(SmoothingType type) {
    switch (type) {
    case SmoothingType::Poisson: return "poisson";
    case SmoothingType::Binomial: return "binomial";
    case SmoothingType::Exponential: return "exponential";
    case SmoothingType::Triangular: return "triangular";
    }
    return "?";
}

SmoothingType parse_smoothing(std::string_view name) {
    if (name == "poisson") return SmoothingType::Poisson;
    if (name == "binomial") return SmoothingType::Binomial;
    if (name == "exponential") return SmoothingType::Exponential;
    if (name == "triangular") return SmoothingType::Triangular;
    throw ConfigError("unknown smoothing '" + std::string(name) +
                      "' (expected poisson, binomial, exponential, triangular)");
}

Normalization Smoothing::effective_normalization() const {
    if (normalization) return *normalization;
    switch (type) {
    case SmoothingType::Poisson:
    case SmoothingType::Binomial: return Normalization::Softmax;
    default: return Normalization::Direct;
    }
}

void Smoothing::validate() const {
    switch (type) {
    case SmoothingType::Poisson:
        if (!(tau_p > 0.0)) throw ConfigError("tau_p must be > 0");
        break;
    case SmoothingType::Binomial:
        if (!(tau_b > 0.0)) throw ConfigError("tau_b must be > 0");
        break;
    case SmoothingType::Exponential:
        if (!(tau_e > 0.0)) throw ConfigError("tau_e must be > 0");
        break;
    case SmoothingType::Triangular:
        if (!(tri_a > tri_b && tri_b > 0.0)) {
            throw ConfigError("triangular smoothing requires a > b > 0");
        }
        break;
    }
}

double smoothing_poisson(int k, int target, double tau_p) {
    const double lambda = target + 0.5;
    return (k * std::log(lambda) - lambda - std::lgamma(k + 1.0)) / tau_p;
}

double smoothing_binomial(int k, int target, int classes, double tau_b) {
    const int n = classes - 1;
    const double p = (2.0 * target + 1.0) / (2.0 * classes);
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return (log_choose + k * std::log(p) + (n - k) * std::log1p(-p)) / tau_b;
}

double smoothing_exponential(int k, int target, int classes, double tau_e) {
    double sum = 0.0;
    for (int j = 0; j < classes; ++j) sum += std::exp(-std::abs(j - target) / tau_e);
    return std::exp(-std::abs(k - target) / tau_e) / sum;
}

double smoothing_triangular(int k, int target, int classes, double a, double b) {
    if (classes < 2) throw ConfigError("triangular smoothing needs at least 2 classes");
    const double span = std::max(target, classes - target - 1);
    auto ramp = [&](int j) { return a - (a - b) * std::abs(j - target) / span; };
    double sum = 0.0;
    for (int j = 0; j < classes; ++j) sum += ramp(j);
    return ramp(k) / sum;
}

double smoothing_score(const Smoothing& kind, int k, int target, int classes) {
    switch (kind.type) {
    case SmoothingType::Poisson: return smoothing_poisson(k, target, kind.tau_p);
    case SmoothingType::Binomial: return smoothing_binomial(k, target, classes, kind.tau_b);
    case SmoothingType::Exponential: return smoothing_exponential(k, target, classes, kind.tau_e);
    case SmoothingType::Triangular:
        return smoothing_triangular(k, target, classes, kind.tri_a, kind.tri_b);
    }
    return 0.0;
}

CategoricalDistribution unimodal_target(int target, const Smoothing& kind, int classes) {
    if (classes < 2) throw ConfigError("unimodal target needs at least 2 classes");
    require_target(target, classes);
    kind.validate();
    Vector scores(classes);
    for (int k = 0; k < classes; ++k) scores[k] = smoothing_score(kind, k, target, classes);
    if (kind.effective_normalization() == Normalization::Softmax) return softmax(scores);
    // Direct scores are normalized already; renormalize so the sum is exact
    // to rounding.
    double sum = 0.0;
    for (double s : scores) sum += s;
    for (double& s : scores) s /= sum;
    return from_probabilities(scores);
}

double entropy(const CategoricalDistribution& dist) {
    double h = 0.0;
    for (int k = 0; k < dist.size(); ++k) h -= dist.probs[k] * dist.log_probs[k];
    return h;
}

double tv_from_uniform(const CategoricalDistribution& dist) {
    const double u = 1.0 / dist.size();
    double tv = 0.0;
    for (double p : dist.probs) tv += std::abs(p - u);
    return 0.5 * tv;
}

} // namespace cpl
