#include "cpl/losses.hpp"

#include "cpl/error.hpp"

#include <cmath>

namespace cpl {

namespace {

void require_sizes(const CategoricalDistribution& a, const CategoricalDistribution& b, int classes) {
    if (a.size() != classes || b.size() != classes) {
        throw ConfigError("KL divergence: distributions must both have length " +
                          std::to_string(classes));
    }
}

LossOutput zero_output(size_t classes, size_t dim, bool with_feature) {
    LossOutput out;
    if (with_feature) out.d_feature.assign(dim, 0.0);
    out.d_proxies.assign(classes, Vector(dim, 0.0));
    return out;
}

// Backpropagates dL/dlogit_k, logit_k = sim(f, p_k), into f and the proxies.
void backprop_assignment(std::span<const double> f, const ProxySet& proxies, const Similarity& kind,
                         std::span<const double> d_logits, LossOutput& out) {
    for (size_t k = 0; k < proxies.size(); ++k) {
        if (accumulate_similarity_grad(kind, f, proxies[k], d_logits[k], out.d_feature,
                                       out.d_proxies[k])) {
            ++out.singular_count;
        }
    }
}

} // namespace

std::string to_string(LossMode mode) {
    switch (mode) {
    case LossMode::Hard: return "hard";
    case LossMode::Soft: return "soft";
    case LossMode::Upl: return "upl";
    }
    return "?";
}

LossMode parse_loss_mode(std::string_view name) {
    if (name == "hard") return LossMode::Hard;
    if (name == "soft") return LossMode::Soft;
    if (name == "upl") return LossMode::Upl;
    throw ConfigError("unknown loss mode '" + std::string(name) + "' (expected hard, soft, upl)");
}

void LossConfig::validate(LayoutType layout) const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    switch (mode) {
    case LossMode::Hard:
        if (!is_hard(layout)) {
            throw ConfigError("hard loss mode requires a hard layout (hard-linear or "
                              "hard-semicircular), got " + to_string(layout));
        }
        break;
    case LossMode::Soft:
    case LossMode::Upl:
        if (layout != LayoutType::SoftFree) {
            throw ConfigError(to_string(mode) + " loss mode requires the soft-free layout, got " +
                              to_string(layout));
        }
        break;
    }
}

double kl_basic(const CategoricalDistribution& target, const CategoricalDistribution& pred,
                int classes) {
    require_sizes(target, pred, classes);
    double s = 0.0;
    for (int k = 0; k < classes; ++k) {
        s += target.probs[k] * (target.log_probs[k] - pred.log_probs[k]);
    }
    return s / classes;
}

LossOutput loss_basic(std::span<const double> f, const CategoricalDistribution& target,
                      const ProxySet& proxies, const Similarity& kind) {
    const int classes = static_cast<int>(proxies.size());
    const CategoricalDistribution pred = assignment_distribution(f, proxies, kind);
    LossOutput out = zero_output(proxies.size(), f.size(), true);
    out.value = kl_basic(target, pred, classes);
    // d/dz_k of (1/K) KL(Q || softmax(z)) = (P_k - Q_k) / K
    Vector d_logits(classes);
    for (int k = 0; k < classes; ++k) d_logits[k] = (pred.probs[k] - target.probs[k]) / classes;
    backprop_assignment(f, proxies, kind, d_logits, out);
    return out;
}

LossOutput loss_basic(std::span<const double> f, int target, const ProxySet& proxies,
                      const Similarity& kind) {
    return loss_basic(f, proxy_distribution(target, proxies, kind), proxies, kind);
}

LossOutput loss_unimodal(int target, const ProxySet& proxies, const Similarity& kind,
                         const CategoricalDistribution& unimodal, LayoutType layout) {
    if (layout != LayoutType::SoftFree) {
        throw ConfigError("the unimodal loss applies to free proxies only; hard layouts train "
                          "with the basic loss");
    }
    const int classes = static_cast<int>(proxies.size());
    const CategoricalDistribution q = proxy_distribution(target, proxies, kind);
    LossOutput out = zero_output(proxies.size(), proxies.front().size(), false);
    out.value = kl_basic(unimodal, q, classes);
    // Logit k is sim(p_k*, p_k); the first argument's gradient lands on p_k*.
    // For k == k* both partials add onto the same proxy.
    const auto& anchor = proxies[target];
    for (int k = 0; k < classes; ++k) {
        const double w = (q.probs[k] - unimodal.probs[k]) / classes;
        if (accumulate_similarity_grad(kind, anchor, proxies[k], w, out.d_proxies[target],
                                       out.d_proxies[k])) {
            ++out.singular_count;
        }
    }
    return out;
}

LossOutput loss_unimodal(int target, const ProxySet& proxies, const Similarity& kind,
                         const Smoothing& smoothing, int classes, LayoutType layout) {
    if (static_cast<int>(proxies.size()) != classes) {
        throw ConfigError("unimodal loss: proxy count differs from K");
    }
    return loss_unimodal(target, proxies, kind, unimodal_target(target, smoothing, classes), layout);
}

LossOutput loss_cross_entropy(std::span<const double> f, int target, const ProxySet& proxies,
                              const Similarity& kind) {
    const int classes = static_cast<int>(proxies.size());
    if (target < 0 || target >= classes) throw ConfigError("cross-entropy: target out of range");
    const CategoricalDistribution pred = assignment_distribution(f, proxies, kind);
    LossOutput out = zero_output(proxies.size(), f.size(), true);
    out.value = -pred.log_probs[target];
    Vector d_logits(pred.probs);
    d_logits[target] -= 1.0;
    backprop_assignment(f, proxies, kind, d_logits, out);
    return out;
}

LossTargets make_loss_targets(const ProxySet& proxies, const Similarity& kind,
                              const LossConfig& config, const Smoothing& smoothing) {
    const int classes = static_cast<int>(proxies.size());
    LossTargets t;
    if (config.mode == LossMode::Upl) return t;
    t.proxy_dists.reserve(classes);
    for (int k = 0; k < classes; ++k) t.proxy_dists.push_back(proxy_distribution(k, proxies, kind));
    if (config.mode == LossMode::Soft) {
        t.unimodal.reserve(classes);
        for (int k = 0; k < classes; ++k) t.unimodal.push_back(unimodal_target(k, smoothing, classes));
    }
    return t;
}

LossOutput loss_total(std::span<const double> f, int target, const ProxySet& proxies,
                      const Similarity& kind, const LossConfig& config, LayoutType layout,
                      const LossTargets& targets) {
    config.validate(layout);
    if (config.mode == LossMode::Upl) return loss_cross_entropy(f, target, proxies, kind);

    LossOutput out = loss_basic(f, targets.proxy_dists.at(target), proxies, kind);
    if (config.mode == LossMode::Soft && config.alpha != 0.0) {
        LossOutput uni = loss_unimodal(target, proxies, kind, targets.unimodal.at(target), layout);
        out.value += config.alpha * uni.value;
        out.singular_count += uni.singular_count;
        for (size_t k = 0; k < proxies.size(); ++k) {
            for (size_t i = 0; i < f.size(); ++i) {
                out.d_proxies[k][i] += config.alpha * uni.d_proxies[k][i];
            }
        }
    }
    return out;
}

} // namespace cpl
