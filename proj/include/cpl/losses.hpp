#pragma once

#include "cpl/distributions.hpp"
#include "cpl/geometry.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpl {

// Hard: KL(Q || P) only. Soft: adds alpha * KL(U || Q). Upl: the
// unconstrained baseline, cross-entropy of P against the one-hot label.
enum class LossMode { Hard, Soft, Upl };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

struct LossConfig {
    LossMode mode = LossMode::Hard;
    double alpha = 6.0; // ignored outside Soft mode

    void validate(LayoutType layout) const;
};

// Value of one loss term with gradients w.r.t. the feature and every proxy.
struct LossOutput {
    double value = 0.0;
    Vector d_feature;   // empty for terms that do not depend on the feature
    ProxySet d_proxies; // K entries of length d
    int singular_count = 0;
};

// (1/K) * sum_k Q_k (log Q_k - log P_k).
double kl_basic(const CategoricalDistribution& target, const CategoricalDistribution& pred,
                int classes);

// KL(Q(k*) || P(f)) / K with Q held constant: gradients reach f and the
// proxies through P only.
LossOutput loss_basic(std::span<const double> f, const CategoricalDistribution& target,
                      const ProxySet& proxies, const Similarity& kind);

// Convenience form that computes Q(k*) from the proxies, then treats it as a
// constant.
LossOutput loss_basic(std::span<const double> f, int target, const ProxySet& proxies,
                      const Similarity& kind);

// KL(U(k*) || Q(k*)) / K for free proxies. U is constant, Q is differentiated.
LossOutput loss_unimodal(int target, const ProxySet& proxies, const Similarity& kind,
                         const CategoricalDistribution& unimodal, LayoutType layout);

LossOutput loss_unimodal(int target, const ProxySet& proxies, const Similarity& kind,
                         const Smoothing& smoothing, int classes, LayoutType layout);

// -log P_k*(f).
LossOutput loss_cross_entropy(std::span<const double> f, int target, const ProxySet& proxies,
                              const Similarity& kind);

// Per-class constants for one optimizer step: Q(k*) evaluated at the current
// proxies (stop-gradient) and, in Soft mode, U(k*).
struct LossTargets {
    std::vector<CategoricalDistribution> proxy_dists;
    std::vector<CategoricalDistribution> unimodal;
};

LossTargets make_loss_targets(const ProxySet& proxies, const Similarity& kind,
                              const LossConfig& config, const Smoothing& smoothing);

// One sample's L_H, L_S or UPL loss. Throws ConfigError when the mode does
// not match the layout.
LossOutput loss_total(std::span<const double> f, int target, const ProxySet& proxies,
                      const Similarity& kind, const LossConfig& config, LayoutType layout,
                      const LossTargets& targets);

} // namespace cpl
