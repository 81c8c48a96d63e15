#pragma once

#include "cpl/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace cpl {

// A strictly positive probability vector over K ordinal classes, kept
// together with its natural log so KL terms never take log of a rounded
// probability.
struct CategoricalDistribution {
    Vector probs;
    Vector log_probs;

    int size() const { return static_cast<int>(probs.size()); }
    // Index of the largest probability, smallest index on ties.
    int mode() const;
};

// Max-shifted softmax. Throws NumericError on NaN input.
CategoricalDistribution softmax(std::span<const double> logits);

// Wraps an already-normalized positive vector.
CategoricalDistribution from_probabilities(std::span<const double> probs);

// P(f): softmax over sim(f, p_k).
CategoricalDistribution assignment_distribution(std::span<const double> f, const ProxySet& proxies,
                                                const Similarity& kind);

// Q(k*): softmax over sim(p_k*, p_k), self term included.
CategoricalDistribution proxy_distribution(int target, const ProxySet& proxies,
                                           const Similarity& kind);

enum class SmoothingType { Poisson, Binomial, Exponential, Triangular };
enum class Normalization { Softmax, Direct };

std::string to_string(SmoothingType type);
SmoothingType parse_smoothing(std::string_view name);

struct Smoothing {
    SmoothingType type = SmoothingType::Poisson;
    double tau_p = 0.11;
    double tau_b = 0.13;
    double tau_e = 30.0;
    double tri_a = 0.9;
    double tri_b = 0.1;
    // Unset: softmax for Poisson/Binomial (log-scores), direct for the
    // exponential and triangular functions (already normalized).
    std::optional<Normalization> normalization;

    Normalization effective_normalization() const;
    void validate() const;
};

// (1/tau) * [k log(lambda) - lambda - log k!], lambda = k* + 1/2.
double smoothing_poisson(int k, int target, double tau_p);
// (1/tau) * log Binomial(k; K-1, p), p = (2k* + 1) / (2K).
double smoothing_binomial(int k, int target, int classes, double tau_b);
// exp(-|k - k*| / tau) normalized over the K classes.
double smoothing_exponential(int k, int target, int classes, double tau_e);
// Linear ramp from a at k* down to b at the farthest class, normalized.
double smoothing_triangular(int k, int target, int classes, double a, double b);

double smoothing_score(const Smoothing& kind, int k, int target, int classes);

// U(k*).
CategoricalDistribution unimodal_target(int target, const Smoothing& kind, int classes);

double entropy(const CategoricalDistribution& dist);
// Total-variation distance to the uniform distribution over the same support.
double tv_from_uniform(const CategoricalDistribution& dist);

} // namespace cpl
