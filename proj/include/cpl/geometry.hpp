#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpl {

using Vector = std::vector<double>;
// K proxies, each of the feature dimension d.
using ProxySet = std::vector<Vector>;

enum class SimilarityType { EuclideanT, Cosine, NegEuclidean };

struct Similarity {
    SimilarityType type = SimilarityType::EuclideanT;
    double scale = 6.0; // cosine only, must exceed 1

    static Similarity euclidean_t() { return {SimilarityType::EuclideanT, 6.0}; }
    static Similarity cosine(double s) { return {SimilarityType::Cosine, s}; }
    static Similarity neg_euclidean() { return {SimilarityType::NegEuclidean, 6.0}; }

    void validate() const;
};

std::string to_string(SimilarityType type);
SimilarityType parse_similarity(std::string_view name);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

// -log(1 + |f - p|^2), the Student-t kernel in log form.
double sim_euclidean_t(std::span<const double> f, std::span<const double> p);
// s * cos(f, p). Throws DegenerateError on a zero-norm argument.
double sim_cosine(std::span<const double> f, std::span<const double> p, double s);
// -|f - p|
double sim_neg_euclidean(std::span<const double> f, std::span<const double> p);

double similarity(const Similarity& kind, std::span<const double> f, std::span<const double> p);

struct SimilarityGrad {
    Vector d_f;
    Vector d_p;
    // Set for NegEuclidean at f == p, where both gradients are reported as zero.
    bool singular = false;
};

SimilarityGrad grad_similarity(const Similarity& kind, std::span<const double> f,
                               std::span<const double> p);

// Adds weight * dSim/df into d_f and weight * dSim/dp into d_p without
// allocating. Either output may be empty to skip it. Returns the singular flag.
bool accumulate_similarity_grad(const Similarity& kind, std::span<const double> f,
                                std::span<const double> p, double weight,
                                std::span<double> d_f, std::span<double> d_p);

enum class LayoutType { HardLinear, HardSemicircular, SoftFree };
enum class NormMode { Learnable, Fixed };

std::string to_string(LayoutType type);
LayoutType parse_layout(std::string_view name);
inline bool is_hard(LayoutType t) { return t != LayoutType::SoftFree; }

// p_k = k * v0.
ProxySet gen_linear_proxies(std::span<const double> v0, int classes);
// K unit proxies spanning a half circle in the plane of v0 and v1, starting at v0/|v0|.
ProxySet gen_semicircular_proxies(std::span<const double> v0, std::span<const double> v1,
                                  int classes);
// p_k = v_k.
ProxySet gen_free_proxies(const std::vector<Vector>& params, int classes);

// Bounds applied to cos(v0, v1) before arccos in the semicircular layout.
inline constexpr double kSemicircleCosClamp = 1.0 - 1e-7;

/// Generates the proxy set from a flat row-major parameter block of
/// parameter_count() vectors of length dim, and maps proxy gradients back
/// onto that block.
class ProxyLearner {
public:
    ProxyLearner(LayoutType layout, int classes, int dim, NormMode norm_mode = NormMode::Learnable,
                 double fixed_norm = 1.0);

    LayoutType layout() const { return layout_; }
    int classes() const { return classes_; }
    int dim() const { return dim_; }
    NormMode norm_mode() const { return norm_mode_; }
    double fixed_norm() const { return fixed_norm_; }

    // N: 1 for the linear layout, 2 for the semicircle, K for free proxies.
    int parameter_count() const;

    ProxySet generate(std::span<const double> params) const;

    // Accumulates dL/dparams given dL/dp_k for every proxy.
    void backward(std::span<const double> params, const ProxySet& d_proxies,
                  std::span<double> d_params) const;

    // Fixed-norm mode: rescales v0 to the configured norm. No-op otherwise.
    void project(std::span<double> params) const;

private:
    LayoutType layout_;
    int classes_;
    int dim_;
    NormMode norm_mode_;
    double fixed_norm_;
};

} // namespace cpl
