#include "cpl/geometry.hpp"

#include "cpl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cpl {

namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw ConfigError("similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    }
}

std::span<const double> row(std::span<const double> block, int index, int dim) {
    return block.subspan(static_cast<size_t>(index) * dim, dim);
}

std::span<double> row(std::span<double> block, int index, int dim) {
    return block.subspan(static_cast<size_t>(index) * dim, dim);
}

struct SemicircleFrame {
    Vector u0, u1;
    double n0 = 0.0, n1 = 0.0;
    double cos_gamma = 0.0; // clamped
    double gamma = 0.0;
    double sin_gamma = 0.0;
    bool clamped = false;
};

SemicircleFrame semicircle_frame(std::span<const double> v0, std::span<const double> v1) {
    require_same_dim(v0, v1);
    SemicircleFrame fr;
    fr.n0 = norm(v0);
    fr.n1 = norm(v1);
    if (fr.n0 == 0.0 || fr.n1 == 0.0) {
        throw DegenerateError("semicircular layout: generator vector has zero norm");
    }
    fr.u0.resize(v0.size());
    fr.u1.resize(v1.size());
    for (size_t i = 0; i < v0.size(); ++i) {
        fr.u0[i] = v0[i] / fr.n0;
        fr.u1[i] = v1[i] / fr.n1;
    }
    double c = dot(fr.u0, fr.u1);
    // Residual of u1 against u0 measures sin(gamma) without cancellation.
    double resid = 0.0;
    for (size_t i = 0; i < v0.size(); ++i) {
        double r = fr.u1[i] - c * fr.u0[i];
        resid += r * r;
    }
    if (std::sqrt(resid) < 1e-12) {
        throw DegenerateError("semicircular layout: v0 and v1 are parallel, no plane is defined");
    }
    double cc = std::clamp(c, -kSemicircleCosClamp, kSemicircleCosClamp);
    fr.clamped = cc != c;
    fr.cos_gamma = cc;
    fr.gamma = std::acos(cc);
    fr.sin_gamma = std::sin(fr.gamma);
    return fr;
}

} // namespace

void Similarity::validate() const {
    if (type == SimilarityType::Cosine && !(scale > 1.0)) {
        throw ConfigError("cosine similarity requires scale s > 1");
    }
}

std::string to_string(SimilarityType type) {
    switch (type) {
    case SimilarityType::EuclideanT: return "euclidean-t";
    case SimilarityType::Cosine: return "cosine";
    case SimilarityType::NegEuclidean: return "neg-euclidean";
    }
    return "?";
}

SimilarityType parse_similarity(std::string_view name) {
    if (name == "euclidean-t") return SimilarityType::EuclideanT;
    if (name == "cosine") return SimilarityType::Cosine;
    if (name == "neg-euclidean") return SimilarityType::NegEuclidean;
    throw ConfigError("unknown similarity '" + std::string(name) +
                      "' (expected euclidean-t, cosine, neg-euclidean)");
}

std::string to_string(LayoutType type) {
    switch (type) {
    case LayoutType::HardLinear: return "hard-linear";
    case LayoutType::HardSemicircular: return "hard-semicircular";
    case LayoutType::SoftFree: return "soft-free";
    }
    return "?";
}

LayoutType parse_layout(std::string_view name) {
    if (name == "hard-linear") return LayoutType::HardLinear;
    if (name == "hard-semicircular") return LayoutType::HardSemicircular;
    if (name == "soft-free") return LayoutType::SoftFree;
    throw ConfigError("unknown layout '" + std::string(name) +
                      "' (expected hard-linear, hard-semicircular, soft-free)");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sim_euclidean_t(std::span<const double> f, std::span<const double> p) {
    require_same_dim(f, p);
    return -std::log1p(squared_distance(f, p));
}

double sim_cosine(std::span<const double> f, std::span<const double> p, double s) {
    require_same_dim(f, p);
    double nf = norm(f), np = norm(p);
    if (nf == 0.0 || np == 0.0) {
        throw DegenerateError("cosine similarity of a zero-norm vector");
    }
    return s * dot(f, p) / (nf * np);
}

double sim_neg_euclidean(std::span<const double> f, std::span<const double> p) {
    require_same_dim(f, p);
    return -std::sqrt(squared_distance(f, p));
}

double similarity(const Similarity& kind, std::span<const double> f, std::span<const double> p) {
    switch (kind.type) {
    case SimilarityType::EuclideanT: return sim_euclidean_t(f, p);
    case SimilarityType::Cosine: return sim_cosine(f, p, kind.scale);
    case SimilarityType::NegEuclidean: return sim_neg_euclidean(f, p);
    }
    return 0.0;
}

bool accumulate_similarity_grad(const Similarity& kind, std::span<const double> f,
                                std::span<const double> p, double weight, std::span<double> d_f,
                                std::span<double> d_p) {
    require_same_dim(f, p);
    const size_t d = f.size();
    switch (kind.type) {
    case SimilarityType::EuclideanT: {
        // d/df -log(1 + u) = -2 (f - p) / (1 + u)
        double c = -2.0 * weight / (1.0 + squared_distance(f, p));
        for (size_t i = 0; i < d; ++i) {
            double g = c * (f[i] - p[i]);
            if (!d_f.empty()) d_f[i] += g;
            if (!d_p.empty()) d_p[i] -= g;
        }
        return false;
    }
    case SimilarityType::Cosine: {
        double nf = norm(f), np = norm(p);
        if (nf == 0.0 || np == 0.0) {
            throw DegenerateError("cosine similarity of a zero-norm vector");
        }
        double cosv = dot(f, p) / (nf * np);
        double cf = kind.scale * weight / nf;
        double cp = kind.scale * weight / np;
        for (size_t i = 0; i < d; ++i) {
            double fh = f[i] / nf, ph = p[i] / np;
            if (!d_f.empty()) d_f[i] += cf * (ph - cosv * fh);
            if (!d_p.empty()) d_p[i] += cp * (fh - cosv * ph);
        }
        return false;
    }
    case SimilarityType::NegEuclidean: {
        double dist = std::sqrt(squared_distance(f, p));
        if (dist == 0.0) return true;
        double c = -weight / dist;
        for (size_t i = 0; i < d; ++i) {
            double g = c * (f[i] - p[i]);
            if (!d_f.empty()) d_f[i] += g;
            if (!d_p.empty()) d_p[i] -= g;
        }
        return false;
    }
    }
    return false;
}

SimilarityGrad grad_similarity(const Similarity& kind, std::span<const double> f,
                               std::span<const double> p) {
    SimilarityGrad out;
    out.d_f.assign(f.size(), 0.0);
    out.d_p.assign(p.size(), 0.0);
    out.singular = accumulate_similarity_grad(kind, f, p, 1.0, out.d_f, out.d_p);
    return out;
}

ProxySet gen_linear_proxies(std::span<const double> v0, int classes) {
    if (classes < 2) throw ConfigError("linear layout needs at least 2 classes");
    if (v0.empty()) throw ConfigError("linear layout: empty generator vector");
    if (norm(v0) == 0.0) {
        throw DegenerateError("linear layout: v0 has zero norm, all proxies would coincide");
    }
    ProxySet proxies(classes, Vector(v0.size()));
    for (int k = 0; k < classes; ++k) {
        for (size_t i = 0; i < v0.size(); ++i) proxies[k][i] = k * v0[i];
    }
    return proxies;
}

ProxySet gen_semicircular_proxies(std::span<const double> v0, std::span<const double> v1,
                                  int classes) {
    if (classes < 2) throw ConfigError("semicircular layout needs at least 2 classes");
    const SemicircleFrame fr = semicircle_frame(v0, v1);
    const double beta = std::numbers::pi / (classes - 1);
    ProxySet proxies(classes, Vector(v0.size()));
    for (int k = 0; k < classes; ++k) {
        double a = std::sin(fr.gamma - k * beta) / fr.sin_gamma;
        double b = std::sin(k * beta) / fr.sin_gamma;
        for (size_t i = 0; i < v0.size(); ++i) proxies[k][i] = a * fr.u0[i] + b * fr.u1[i];
    }
    return proxies;
}

ProxySet gen_free_proxies(const std::vector<Vector>& params, int classes) {
    if (static_cast<int>(params.size()) != classes) {
        throw ConfigError("free layout: expected " + std::to_string(classes) +
                          " proxy vectors, got " + std::to_string(params.size()));
    }
    for (const auto& v : params) {
        if (v.size() != params.front().size() || v.empty()) {
            throw ConfigError("free layout: proxy vectors differ in dimension");
        }
    }
    return params;
}

ProxyLearner::ProxyLearner(LayoutType layout, int classes, int dim, NormMode norm_mode,
                           double fixed_norm)
    : layout_(layout), classes_(classes), dim_(dim), norm_mode_(norm_mode),
      fixed_norm_(fixed_norm) {
    if (classes < 2) throw ConfigError("proxy learner needs at least 2 classes");
    if (dim < 1) throw ConfigError("proxy dimension must be >= 1");
    if (norm_mode == NormMode::Fixed) {
        if (layout != LayoutType::HardLinear) {
            throw ConfigError("fixed v0 norm only applies to the hard-linear layout");
        }
        if (!(fixed_norm > 0.0)) throw ConfigError("fixed v0 norm must be > 0");
    }
}

int ProxyLearner::parameter_count() const {
    switch (layout_) {
    case LayoutType::HardLinear: return 1;
    case LayoutType::HardSemicircular: return 2;
    case LayoutType::SoftFree: return classes_;
    }
    return 0;
}

ProxySet ProxyLearner::generate(std::span<const double> params) const {
    if (params.size() != static_cast<size_t>(parameter_count()) * dim_) {
        throw ConfigError("proxy learner: parameter block has wrong size");
    }
    switch (layout_) {
    case LayoutType::HardLinear: return gen_linear_proxies(row(params, 0, dim_), classes_);
    case LayoutType::HardSemicircular:
        return gen_semicircular_proxies(row(params, 0, dim_), row(params, 1, dim_), classes_);
    case LayoutType::SoftFree: {
        ProxySet out(classes_);
        for (int k = 0; k < classes_; ++k) {
            auto r = row(params, k, dim_);
            out[k].assign(r.begin(), r.end());
        }
        return out;
    }
    }
    return {};
}

void ProxyLearner::backward(std::span<const double> params, const ProxySet& d_proxies,
                            std::span<double> d_params) const {
    const size_t d = dim_;
    switch (layout_) {
    case LayoutType::HardLinear: {
        for (int k = 1; k < classes_; ++k) {
            for (size_t i = 0; i < d; ++i) d_params[i] += k * d_proxies[k][i];
        }
        return;
    }
    case LayoutType::SoftFree: {
        for (int k = 0; k < classes_; ++k) {
            auto g = row(d_params, k, dim_);
            for (size_t i = 0; i < d; ++i) g[i] += d_proxies[k][i];
        }
        return;
    }
    case LayoutType::HardSemicircular: {
        const SemicircleFrame fr = semicircle_frame(row(params, 0, dim_), row(params, 1, dim_));
        const double beta = std::numbers::pi / (classes_ - 1);
        const double s2 = fr.sin_gamma * fr.sin_gamma;
        // p_k = a_k(gamma) u0 + b_k(gamma) u1 with
        //   a_k' = sin(k beta) / sin^2 gamma,  b_k' = -sin(k beta) cos gamma / sin^2 gamma.
        Vector g_u0(d, 0.0), g_u1(d, 0.0);
        double g_gamma = 0.0;
        for (int k = 0; k < classes_; ++k) {
            const double skb = std::sin(k * beta);
            const double a = std::sin(fr.gamma - k * beta) / fr.sin_gamma;
            const double b = skb / fr.sin_gamma;
            const double da = skb / s2;
            const double db = -skb * fr.cos_gamma / s2;
            for (size_t i = 0; i < d; ++i) {
                const double g = d_proxies[k][i];
                g_u0[i] += a * g;
                g_u1[i] += b * g;
                g_gamma += g * (da * fr.u0[i] + db * fr.u1[i]);
            }
        }
        // gamma = acos(u0 . u1); the clamp zeroes this path when active.
        if (!fr.clamped) {
            const double g_c = -g_gamma / fr.sin_gamma;
            for (size_t i = 0; i < d; ++i) {
                g_u0[i] += g_c * fr.u1[i];
                g_u1[i] += g_c * fr.u0[i];
            }
        }
        // u = v / |v|  =>  dL/dv = (g - (g.u) u) / |v|
        auto project_out = [d](const Vector& g, const Vector& u, double n, std::span<double> out) {
            double gu = dot(g, u);
            for (size_t i = 0; i < d; ++i) out[i] += (g[i] - gu * u[i]) / n;
        };
        project_out(g_u0, fr.u0, fr.n0, row(d_params, 0, dim_));
        project_out(g_u1, fr.u1, fr.n1, row(d_params, 1, dim_));
        return;
    }
    }
}

void ProxyLearner::project(std::span<double> params) const {
    if (norm_mode_ != NormMode::Fixed) return;
    auto v0 = row(params, 0, dim_);
    double n = norm(v0);
    if (n == 0.0) throw DegenerateError("fixed-norm projection of a zero v0");
    for (double& x : v0) x *= fixed_norm_ / n;
}

} // namespace cpl
