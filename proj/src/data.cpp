#include "cpl/data.hpp"

#include "cpl/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace cpl {

namespace {

void check_generator_args(int classes, int n_per_class, int input_dim, double noise_sigma) {
    if (classes < 2) throw ConfigError("synthetic data: classes must be >= 2");
    if (n_per_class < 1) throw ConfigError("synthetic data: n_per_class must be >= 1");
    if (input_dim < 1) throw ConfigError("synthetic data: input_dim must be >= 1");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synthetic data: noise_sigma must be >= 0");
}

Vector random_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector u(dim);
    double n = 0.0;
    while (n < 1e-8) {
        for (double& x : u) x = gauss(rng);
        n = norm(u);
    }
    for (double& x : u) x /= n;
    return u;
}

LabeledDataset sample_around(const std::vector<Vector>& means, int n_per_class, double noise_sigma,
                             std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    LabeledDataset out;
    out.classes = static_cast<int>(means.size());
    out.input_dim = static_cast<int>(means.front().size());
    for (int k = 0; k < out.classes; ++k) {
        for (int i = 0; i < n_per_class; ++i) {
            Vector x = means[k];
            for (double& v : x) v += noise_sigma * gauss(rng);
            out.inputs.push_back(std::move(x));
            out.labels.push_back(k);
        }
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

LabeledDataset subset(const LabeledDataset& data, const std::vector<size_t>& idx) {
    LabeledDataset out;
    out.classes = data.classes;
    out.input_dim = data.input_dim;
    out.provenance = data.provenance;
    out.inputs.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (size_t i : idx) {
        out.inputs.push_back(data.inputs[i]);
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

} // namespace

std::vector<SampleRef> LabeledDataset::refs() const {
    std::vector<SampleRef> out;
    out.reserve(size());
    for (size_t i = 0; i < size(); ++i) out.push_back({inputs[i], labels[i]});
    return out;
}

void LabeledDataset::validate() const {
    if (inputs.size() != labels.size()) throw DataError("dataset: input/label count mismatch");
    for (size_t i = 0; i < size(); ++i) {
        if (static_cast<int>(inputs[i].size()) != input_dim) {
            throw DataError("dataset: sample " + std::to_string(i) + " has wrong dimension");
        }
        if (labels[i] < 0 || labels[i] >= classes) {
            throw DataError("dataset: label " + std::to_string(labels[i]) + " outside [0, " +
                            std::to_string(classes) + ")");
        }
    }
}

LabeledDataset gen_synthetic_linear(int classes, int n_per_class, int input_dim, double noise_sigma,
                                    double overlap, std::uint64_t seed) {
    check_generator_args(classes, n_per_class, input_dim, noise_sigma);
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("synthetic data: overlap must be in [0, 1)");
    std::mt19937_64 rng(seed);
    const Vector u = random_unit(rng, input_dim);
    std::vector<Vector> means(classes, Vector(input_dim));
    for (int k = 0; k < classes; ++k) {
        for (int i = 0; i < input_dim; ++i) means[k][i] = k * (1.0 - overlap) * u[i];
    }
    LabeledDataset out = sample_around(means, n_per_class, noise_sigma, rng);
    out.provenance = "synthetic-linear";
    return out;
}

LabeledDataset gen_synthetic_ring(int classes, int n_per_class, int input_dim, double noise_sigma,
                                  std::uint64_t seed) {
    check_generator_args(classes, n_per_class, input_dim, noise_sigma);
    if (input_dim < 2) throw ConfigError("synthetic ring data needs input_dim >= 2");
    std::mt19937_64 rng(seed);
    const Vector e1 = random_unit(rng, input_dim);
    Vector e2;
    double n = 0.0;
    while (n < 1e-6) {
        e2 = random_unit(rng, input_dim);
        const double c = dot(e1, e2);
        for (int i = 0; i < input_dim; ++i) e2[i] -= c * e1[i];
        n = norm(e2);
    }
    for (double& x : e2) x /= n;
    std::vector<Vector> means(classes, Vector(input_dim));
    const double step = std::numbers::pi / (classes - 1);
    for (int k = 0; k < classes; ++k) {
        const double c = std::cos(k * step), s = std::sin(k * step);
        for (int i = 0; i < input_dim; ++i) means[k][i] = c * e1[i] + s * e2[i];
    }
    LabeledDataset out = sample_around(means, n_per_class, noise_sigma, rng);
    out.provenance = "synthetic-ring";
    return out;
}

LabeledDataset load_csv(const std::filesystem::path& path, std::optional<int> classes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, expected a header");
    const auto header = split_fields(line);
    if (header.size() < 2 || header.back() != "label") {
        throw DataError(path.string() + ":1: header must be f0,...,f{d-1},label");
    }
    for (size_t i = 0; i + 1 < header.size(); ++i) {
        if (header[i] != "f" + std::to_string(i)) {
            throw DataError(path.string() + ":1: expected column f" + std::to_string(i) + ", got '" +
                            std::string(header[i]) + "'");
        }
    }
    LabeledDataset out;
    out.input_dim = static_cast<int>(header.size() - 1);
    out.provenance = "csv(" + path.string() + ")";
    int max_label = -1;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        if (fields.size() != header.size()) {
            throw DataError(where + "line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " columns, expected " +
                            std::to_string(header.size()));
        }
        Vector x(out.input_dim);
        for (int i = 0; i < out.input_dim; ++i) {
            const auto f = fields[i];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x[i]);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(x[i])) {
                throw DataError(where + "line " + std::to_string(line_no) + " column f" +
                                std::to_string(i) + " is not a finite number: '" + std::string(f) + "'");
            }
        }
        const auto lf = fields.back();
        int label = 0;
        auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
        if (ec != std::errc() || ptr != lf.data() + lf.size() || label < 0) {
            throw DataError(where + "line " + std::to_string(line_no) +
                            " label is not a non-negative integer: '" + std::string(lf) + "'");
        }
        max_label = std::max(max_label, label);
        out.inputs.push_back(std::move(x));
        out.labels.push_back(label);
    }
    out.classes = classes ? *classes : max_label + 1;
    out.validate();
    return out;
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& data) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset " + path.string());
    for (int i = 0; i < data.input_dim; ++i) out << 'f' << i << ',';
    out << "label\n";
    char buf[32];
    for (size_t s = 0; s < data.size(); ++s) {
        for (double v : data.inputs[s]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << data.labels[s] << '\n';
    }
    if (!out) throw DataError("failed writing dataset " + path.string());
}

void SplitSpec::validate() const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
        throw ConfigError("split fractions must all be > 0");
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

DatasetSplits split(const LabeledDataset& data, const SplitSpec& spec) {
    spec.validate();
    data.validate();
    const size_t n = data.size();

    // Largest-remainder apportionment of n over the three fractions.
    const double fr[3] = {spec.train, spec.val, spec.test};
    size_t sizes[3];
    double rem[3];
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double raw = fr[i] * static_cast<double>(n);
        sizes[i] = static_cast<size_t>(std::floor(raw + 1e-9));
        rem[i] = raw - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (rem[i] > rem[best]) best = i;
        }
        ++sizes[best];
        rem[best] = -1.0;
        ++assigned;
    }
    for (int i = 0; i < 3; ++i) {
        if (sizes[i] == 0) {
            throw ConfigError("split of " + std::to_string(n) + " samples leaves the " +
                              (i == 0 ? "train" : i == 1 ? "val" : "test") + " split empty");
        }
    }

    // Shuffle within each class, then order every sample by its relative
    // position inside its class so any contiguous run is near-proportional.
    std::mt19937_64 rng(spec.seed);
    std::vector<std::vector<size_t>> by_class(data.classes);
    for (size_t i = 0; i < n; ++i) by_class[data.labels[i]].push_back(i);
    struct Key {
        double pos;
        int cls;
        size_t index;
    };
    std::vector<Key> keys;
    keys.reserve(n);
    for (int c = 0; c < data.classes; ++c) {
        auto& members = by_class[c];
        std::shuffle(members.begin(), members.end(), rng);
        for (size_t r = 0; r < members.size(); ++r) {
            keys.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(members.size()), c,
                            members[r]});
        }
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        return a.pos != b.pos ? a.pos < b.pos : a.cls < b.cls;
    });
    std::vector<size_t> parts[3];
    size_t cursor = 0;
    for (int i = 0; i < 3; ++i) {
        for (size_t j = 0; j < sizes[i]; ++j) parts[i].push_back(keys[cursor++].index);
    }
    return {subset(data, parts[0]), subset(data, parts[1]), subset(data, parts[2])};
}

} // namespace cpl
