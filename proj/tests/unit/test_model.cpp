#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cpl/error.hpp"
#include "cpl/model.hpp"
#include "test_support.hpp"

#include <cmath>
#include <filesystem>

using namespace cpl;
using cpl::testing::numeric_gradient;
using cpl::testing::random_vector;
using cpl::testing::relative_error;

namespace {

ProblemSpec small_spec(LayoutType layout, Similarity sim, LossMode mode = LossMode::Hard) {
    ProblemSpec s;
    s.classes = 4;
    s.input_dim = 3;
    s.hidden = 5;
    s.dim = 3;
    s.layout = layout;
    s.similarity = sim;
    s.loss.mode = mode;
    return s;
}

void zero_all(CplModel& m) {
    for (auto& p : m.parameters()) std::fill(p.value.begin(), p.value.end(), 0.0);
}

} // namespace

TEST_CASE("zero weights give a zero feature") {
    auto m = init_model(small_spec(LayoutType::HardLinear, Similarity::euclidean_t()), 1);
    zero_all(m);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) CHECK(m.extract(random_vector(rng, 3, -5.0, 5.0)) == Vector(3, 0.0));
}

TEST_CASE("identity extractor passes positive inputs through") {
    auto spec = small_spec(LayoutType::HardLinear, Similarity::euclidean_t());
    auto m = init_model(spec, 1);
    zero_all(m);
    auto& w1 = m.parameters().find("extractor.w1");
    auto& w2 = m.parameters().find("extractor.w2");
    for (int i = 0; i < 3; ++i) {
        w1.value[i * w1.cols + i] = 1.0;
        w2.value[i * w2.cols + i] = 1.0;
    }
    const Vector x{0.5, 2.0, 3.25};
    CHECK(m.extract(x) == x);
    // Negative coordinates are cut by the rectifier.
    CHECK(m.extract(Vector{-1.0, 2.0, 0.0}) == Vector{0.0, 2.0, 0.0});
    CHECK_THROWS_AS(m.extract(Vector{1.0, 2.0}), ConfigError);
}

TEST_CASE("analytic batch gradients match finite differences for every parameter") {
    struct Case {
        LayoutType layout;
        Similarity sim;
        LossMode mode;
        SmoothingType smoothing;
    };
    const Case cases[] = {
        {LayoutType::HardLinear, Similarity::euclidean_t(), LossMode::Hard, SmoothingType::Poisson},
        {LayoutType::HardSemicircular, Similarity::cosine(6.0), LossMode::Hard, SmoothingType::Poisson},
        {LayoutType::SoftFree, Similarity::euclidean_t(), LossMode::Soft, SmoothingType::Poisson},
        {LayoutType::SoftFree, Similarity::cosine(6.0), LossMode::Soft, SmoothingType::Poisson},
        {LayoutType::SoftFree, Similarity::euclidean_t(), LossMode::Soft, SmoothingType::Binomial},
        {LayoutType::SoftFree, Similarity::cosine(6.0), LossMode::Soft, SmoothingType::Binomial},
        {LayoutType::SoftFree, Similarity::euclidean_t(), LossMode::Upl, SmoothingType::Poisson},
    };
    std::mt19937_64 rng(23);
    for (const auto& c : cases) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            auto spec = small_spec(c.layout, c.sim, c.mode);
            spec.smoothing.type = c.smoothing;
            auto m = init_model(spec, seed);
            // Shift b1 so pre-activations sit away from the rectifier kink.
            for (double& b : m.parameters().find("extractor.b1").value) b = 0.3;
            std::vector<Vector> xs;
            std::vector<SampleRef> batch;
            for (int i = 0; i < 5; ++i) xs.push_back(random_vector(rng, 3));
            for (int i = 0; i < 5; ++i) batch.push_back({xs[i], i % spec.classes});
            const LossTargets targets = m.loss_targets();
            m.forward_backward(batch, targets);
            for (auto& p : m.parameters()) {
                auto fn = [&](const Vector& v) {
                    CplModel probe = m;
                    probe.parameters().find(p.name).value = v;
                    return probe.batch_loss(batch, targets);
                };
                const double err = relative_error(p.grad, numeric_gradient(fn, p.value));
                CHECK_MESSAGE(err < 1e-4, spec.variant_name(), " ", p.name, " rel err ", err);
            }
        }
    }
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
    auto spec = small_spec(LayoutType::SoftFree, Similarity::euclidean_t(), LossMode::Soft);
    auto m = init_model(spec, 4);
    std::mt19937_64 rng(4);
    std::vector<Vector> xs;
    std::vector<SampleRef> batch;
    for (int i = 0; i < 6; ++i) xs.push_back(random_vector(rng, 3));
    for (int i = 0; i < 6; ++i) batch.push_back({xs[i], (i * 3) % 4});
    const auto targets = m.loss_targets();
    m.forward_backward(batch, targets);
    std::vector<Vector> full;
    for (const auto& p : m.parameters()) full.push_back(p.grad);

    std::vector<Vector> mean;
    for (const auto& p : m.parameters()) mean.emplace_back(p.size(), 0.0);
    for (const auto& s : batch) {
        m.forward_backward(std::span<const SampleRef>(&s, 1), targets);
        for (size_t i = 0; i < m.parameters().size(); ++i)
            for (size_t j = 0; j < mean[i].size(); ++j) mean[i][j] += m.parameters()[i].grad[j] / 6.0;
    }
    for (size_t i = 0; i < full.size(); ++i)
        for (size_t j = 0; j < full[i].size(); ++j) CHECK(std::abs(full[i][j] - mean[i][j]) < 1e-12);
}

TEST_CASE("prediction") {
    auto m = init_model(small_spec(LayoutType::HardLinear, Similarity::euclidean_t()), 2);
    const ProxySet p = m.proxies();
    for (int k = 0; k < 4; ++k) CHECK(m.predict_from_feature(p[k], p) == k);
    Vector mid(3);
    for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (p[1][i] + p[2][i]);
    // Exact midpoint: both similarities equal, the lower index wins.
    if (sim_euclidean_t(mid, p[1]) == sim_euclidean_t(mid, p[2])) CHECK(m.predict_from_feature(mid, p) == 1);
    const ProxySet grid{{0.0}, {1.0}, {2.0}, {3.0}};
    CHECK(m.predict_from_feature(Vector{1.5}, grid) == 1);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const Vector x = random_vector(rng, 3, -3.0, 3.0);
        const auto dist = assignment_distribution(m.extract(x), p, m.spec().similarity);
        CHECK(m.predict_rank(x) == dist.mode());
    }
}

TEST_CASE("initialization") {
    const auto hl = small_spec(LayoutType::HardLinear, Similarity::euclidean_t());
    auto a = init_model(hl, 42), b = init_model(hl, 42), c = init_model(hl, 43);
    for (size_t i = 0; i < a.parameters().size(); ++i) CHECK(a.parameters()[i].value == b.parameters()[i].value);
    CHECK(a.parameters().find("extractor.w1").value != c.parameters().find("extractor.w1").value);
    CHECK(a.parameters().find("extractor.b1").value == Vector(5, 0.0));

    CHECK(a.proxy_params().rows == 1);
    CHECK(init_model(small_spec(LayoutType::HardSemicircular, Similarity::cosine(6.0)), 1).proxy_params().rows == 2);
    CHECK(init_model(small_spec(LayoutType::SoftFree, Similarity::euclidean_t(), LossMode::Soft), 1)
              .proxy_params()
              .rows == 4);

    auto big = hl;
    big.input_dim = 200;
    big.hidden = 300;
    auto m = init_model(big, 7);
    const auto& w1 = m.parameters().find("extractor.w1").value;
    double ss = 0.0;
    for (double x : w1) ss += x * x;
    CHECK(std::sqrt(ss / w1.size()) == doctest::Approx(std::sqrt(2.0 / 500.0)).epsilon(0.02));

    auto scaled = hl;
    scaled.init_v0_norm = 1.0;
    CHECK(norm(init_model(scaled, 3).proxy_params().value) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("variant validation") {
    CHECK_NOTHROW(small_spec(LayoutType::HardLinear, Similarity::neg_euclidean()).validate());
    CHECK_THROWS_AS(small_spec(LayoutType::HardLinear, Similarity::cosine(6.0)).validate(), ConfigError);
    CHECK_THROWS_AS(small_spec(LayoutType::HardSemicircular, Similarity::euclidean_t()).validate(), ConfigError);
    CHECK_THROWS_AS(small_spec(LayoutType::HardSemicircular, Similarity::cosine(6.0), LossMode::Soft).validate(),
                    ConfigError);
    auto exp = small_spec(LayoutType::HardSemicircular, Similarity::euclidean_t());
    exp.experimental = true;
    CHECK_NOTHROW(exp.validate());
    auto fixed = small_spec(LayoutType::HardSemicircular, Similarity::cosine(6.0));
    fixed.norm_mode = NormMode::Fixed;
    CHECK_THROWS_AS(fixed.validate(), ConfigError);
    CHECK(small_spec(LayoutType::HardLinear, Similarity::euclidean_t()).variant_name() == "H-L/euclidean-t");
}

TEST_CASE("fixed v0 norm is held after projection") {
    auto spec = small_spec(LayoutType::HardLinear, Similarity::euclidean_t());
    spec.norm_mode = NormMode::Fixed;
    spec.fixed_norm = 5.0;
    auto m = init_model(spec, 3);
    CHECK(norm(m.proxy_params().value) == doctest::Approx(5.0).epsilon(1e-14));
    m.proxy_params().value[0] += 1.0;
    m.project();
    CHECK(norm(m.proxy_params().value) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("cosine predictions ignore feature scale") {
    auto m = init_model(small_spec(LayoutType::HardSemicircular, Similarity::cosine(6.0)), 8);
    const ProxySet p = m.proxies();
    std::mt19937_64 rng(8);
    for (int i = 0; i < 50; ++i) {
        Vector f = random_vector(rng, 3);
        const int k = m.predict_from_feature(f, p);
        for (double& x : f) x *= 7.5;
        CHECK(m.predict_from_feature(f, p) == k);
    }
}

TEST_CASE("spec json round trip") {
    auto spec = small_spec(LayoutType::SoftFree, Similarity::cosine(4.0), LossMode::Soft);
    spec.smoothing.type = SmoothingType::Binomial;
    spec.smoothing.tau_b = 0.09;
    spec.loss.alpha = 2.0;
    const auto back = problem_spec_from_json(to_json(spec));
    CHECK(to_json(back) == to_json(spec));
    CHECK_THROWS_AS(problem_spec_from_json(nlohmann::json{{"layout", "spiral"}}), ConfigError);
}

TEST_CASE("checkpoint round trip") {
    auto spec = small_spec(LayoutType::HardSemicircular, Similarity::cosine(6.0));
    auto m = init_model(spec, 11);
    const auto path = std::filesystem::temp_directory_path() / "cpl_test_checkpoint.json";
    save_checkpoint(path, m, 11, 7);
    const Checkpoint c = load_checkpoint(path);
    CHECK(c.seed == 11);
    CHECK(c.epoch == 7);
    for (size_t i = 0; i < m.parameters().size(); ++i)
        CHECK(c.model.parameters()[i].value == m.parameters()[i].value);
    CHECK(to_json(c.model.spec()) == to_json(spec));
    std::filesystem::remove(path);

    auto j = checkpoint_to_json(m, 1, 1);
    j["format"] = "other";
    CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
    auto k = checkpoint_to_json(m, 1, 1);
    k["parameters"][0]["data"].erase(0);
    CHECK_THROWS_AS(checkpoint_from_json(k), DataError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), DataError);
}
