#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cpl/data.hpp"
#include "cpl/error.hpp"
#include "test_support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

using namespace cpl;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("cpl_test_" + name);
}

std::string error_of(const std::filesystem::path& p) {
    try {
        load_csv(p);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("synthetic linear data") {
    auto d = gen_synthetic_linear(5, 4, 6, 0.0, 0.0, 1);
    REQUIRE(d.size() == 20);
    CHECK(d.classes == 5);
    CHECK(d.input_dim == 6);
    CHECK(d.provenance == "synthetic-linear");
    std::map<int, Vector> mean;
    for (size_t i = 0; i < d.size(); ++i) {
        auto [it, fresh] = mean.emplace(d.labels[i], d.inputs[i]);
        if (!fresh) CHECK(it->second == d.inputs[i]);
    }
    REQUIRE(mean.size() == 5);
    CHECK(norm(mean[0]) == 0.0);
    CHECK(norm(mean[1]) == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k + 1 < 5; ++k)
        for (int i = 0; i < 6; ++i)
            CHECK(std::abs((mean[k + 1][i] - mean[k][i]) - mean[1][i]) < 1e-12);

    auto o = gen_synthetic_linear(5, 1, 6, 0.0, 0.75, 1);
    double step = 0.0;
    for (size_t i = 0; i < o.size(); ++i)
        if (o.labels[i] == 1) step = norm(o.inputs[i]);
    CHECK(step == doctest::Approx(0.25).epsilon(1e-14));

    auto a = gen_synthetic_linear(4, 10, 3, 0.5, 0.2, 9), b = gen_synthetic_linear(4, 10, 3, 0.5, 0.2, 9);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels == b.labels);
    CHECK(gen_synthetic_linear(4, 10, 3, 0.5, 0.2, 10).inputs != a.inputs);

    CHECK_THROWS_AS(gen_synthetic_linear(1, 10, 3, 0.1, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(gen_synthetic_linear(3, 0, 3, 0.1, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(gen_synthetic_linear(3, 5, 3, -0.1, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(gen_synthetic_linear(3, 5, 3, 0.1, 1.0, 0), ConfigError);
}

TEST_CASE("synthetic ring data") {
    for (int classes : {3, 5, 8}) {
        auto d = gen_synthetic_ring(classes, 1, 4, 0.0, 2);
        CHECK(d.provenance == "synthetic-ring");
        std::map<int, Vector> m;
        for (size_t i = 0; i < d.size(); ++i) m[d.labels[i]] = d.inputs[i];
        for (int i = 0; i < classes; ++i) {
            CHECK(norm(m[i]) == doctest::Approx(1.0).epsilon(1e-14));
            for (int j = i + 1; j < classes; ++j) {
                const double expect = (j - i) * std::numbers::pi / (classes - 1);
                CHECK(cpl::testing::angle_between(m[i], m[j]) == doctest::Approx(expect).epsilon(1e-7));
            }
        }
    }
    auto a = gen_synthetic_ring(4, 5, 3, 0.1, 3), b = gen_synthetic_ring(4, 5, 3, 0.1, 3);
    CHECK(a.inputs == b.inputs);
    CHECK_THROWS_AS(gen_synthetic_ring(4, 5, 1, 0.1, 3), ConfigError);
}

TEST_CASE("csv round trip") {
    auto d = gen_synthetic_linear(3, 7, 4, 0.37, 0.1, 5);
    const auto path = temp_file("roundtrip.csv");
    write_csv(path, d);
    auto back = load_csv(path);
    CHECK(back.inputs == d.inputs);
    CHECK(back.labels == d.labels);
    CHECK(back.classes == 3);
    CHECK(back.input_dim == 4);
    CHECK(back.provenance == "csv(" + path.string() + ")");
    CHECK(load_csv(path, 6).classes == 6);
    std::filesystem::remove(path);
}

TEST_CASE("csv parsing") {
    const auto path = temp_file("small.csv");
    {
        std::ofstream(path) << "f0,f1,label\n0.5,-1e-3,0\n2,3,1\n";
    }
    auto d = load_csv(path);
    CHECK(d.size() == 2);
    CHECK(d.classes == 2);
    CHECK(d.inputs[0] == Vector{0.5, -1e-3});

    {
        std::ofstream out(path);
        out << "f0,f1,label\n";
        for (int i = 0; i < 5; ++i) out << "1,2,0\n";
        out << "1,0\n"; // line 7
    }
    const std::string msg = error_of(path);
    CHECK(msg.find("line 7") != std::string::npos);

    {
        std::ofstream(path) << "f0,f1,label\n1,2,1.5\n";
    }
    CHECK(error_of(path).find("label") != std::string::npos);
    {
        std::ofstream(path) << "f0,f1,label\n1,x,1\n";
    }
    CHECK(error_of(path).find("line 2") != std::string::npos);
    {
        std::ofstream(path) << "a,b,label\n1,2,1\n";
    }
    CHECK_FALSE(error_of(path).empty());
    {
        std::ofstream(path) << "f0,label\n1,4\n";
    }
    CHECK_THROWS_AS(load_csv(path, 3), DataError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_csv(temp_file("missing.csv")), DataError);
}

TEST_CASE("stratified split") {
    auto d = gen_synthetic_linear(4, 25, 2, 0.1, 0.0, 7);
    SplitSpec spec;
    spec.seed = 3;
    auto s = split(d, spec);
    CHECK(s.train.size() == 75);
    CHECK(s.val.size() == 5);
    CHECK(s.test.size() == 20);

    // Disjoint and covering: samples are distinct points, so compare values.
    std::multiset<Vector> all(d.inputs.begin(), d.inputs.end()), parts;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
        parts.insert(part->inputs.begin(), part->inputs.end());
        CHECK(part->classes == 4);
    }
    CHECK(parts == all);
    CHECK(std::set<Vector>(all.begin(), all.end()).size() == 100);

    for (const auto* part : {&s.train, &s.test}) {
        std::map<int, int> count;
        for (int y : part->labels) ++count[y];
        for (int k = 0; k < 4; ++k) {
            const double want = 0.25 * static_cast<double>(part->size());
            CHECK(std::abs(count[k] - want) <= 1.0);
        }
    }

    auto again = split(d, spec);
    CHECK(again.train.inputs == s.train.inputs);
    spec.seed = 4;
    CHECK(split(d, spec).train.inputs != s.train.inputs);

    SplitSpec bad{0.5, 0.0, 0.5, 0};
    CHECK_THROWS_AS(split(d, bad), ConfigError);
    SplitSpec sum{0.5, 0.2, 0.2, 0};
    CHECK_THROWS_AS(split(d, sum), ConfigError);
    auto tiny = gen_synthetic_linear(2, 2, 2, 0.1, 0.0, 1);
    CHECK_THROWS_AS(split(tiny, SplitSpec{}), ConfigError);
}
