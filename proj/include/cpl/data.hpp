#pragma once

#include "cpl/geometry.hpp"
#include "cpl/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace cpl {

struct LabeledDataset {
    std::vector<Vector> inputs;
    std::vector<int> labels;
    int classes = 0;
    int input_dim = 0;
    std::string provenance; // synthetic-linear | synthetic-ring | csv(<path>)

    size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::vector<SampleRef> refs() const;
    // Throws DataError on out-of-range labels or ragged inputs.
    void validate() const;
};

// Class k centered at k * (1 - overlap) * u for a seeded random unit direction u,
// plus isotropic Gaussian noise.
LabeledDataset gen_synthetic_linear(int classes, int n_per_class, int input_dim, double noise_sigma,
                                    double overlap, std::uint64_t seed);

// Class k centered on the unit circle at angle k*pi/(K-1) in a seeded random
// 2-plane, plus isotropic Gaussian noise.
LabeledDataset gen_synthetic_ring(int classes, int n_per_class, int input_dim, double noise_sigma,
                                  std::uint64_t seed);

// Header `f0,...,f{d-1},label`. K is max label + 1 unless given.
LabeledDataset load_csv(const std::filesystem::path& path,
                        std::optional<int> classes = std::nullopt);
void write_csv(const std::filesystem::path& path, const LabeledDataset& data);

struct SplitSpec {
    double train = 0.75;
    double val = 0.05;
    double test = 0.20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DatasetSplits {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

// Seeded, class-stratified partition. Split sizes follow largest-remainder
// rounding of the fractions.
DatasetSplits split(const LabeledDataset& data, const SplitSpec& spec);

} // namespace cpl
