#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "retina/encoding.hpp"
#include "retina/environment.hpp"
#include "retina/geometry.hpp"

namespace retina {

// Row-major sample matrix for one receptive field.
struct FieldSamples {
    int dim = 0;
    int count = 0;
    std::vector<double> data;

    std::span<const double> row(int i) const {
        return {data.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
};

// Draws seeded-uniform poses across the environment list; every pose
// contributes one encoded vector to every field, until each field holds
// n_per_field samples.
std::vector<FieldSamples> collect_samples(const std::vector<Environment>& envs,
                                          const EncoderBank& bank,
                                          const RetinaGeometry& geometry,
                                          int n_per_field, std::uint64_t seed);

struct KMeansResult {
    std::vector<double> centroids;  // k x dim, row-major
    int iterations = 0;
    // Within-cluster sum of squares after each assign/update pass.
    std::vector<double> inertia_history;
};

// Lloyd's iterations with squared-Euclidean distance. Initial centroids are
// k distinct seeded-uniform samples; empty clusters are reseeded to the
// point farthest from its centroid; stops when assignments are unchanged or
// after max_iterations. Throws when fewer than k distinct samples exist.
KMeansResult fit_kmeans(const FieldSamples& samples, int k, std::uint64_t seed,
                        int max_iterations = 300);

// The N^a prototype sensory states per receptive field, with nearest-centroid
// quantization. Immutable once built.
class PrototypeCodebook {
public:
    static PrototypeCodebook fit(const std::vector<FieldSamples>& samples,
                                 const RetinaGeometry& geometry,
                                 const EncoderBank& bank, std::uint64_t seed,
                                 int workers = 1);
    // Test/tool builder from explicit centroid matrices.
    static PrototypeCodebook from_centroids(std::vector<FieldSamples> centroids);

    int field_count() const { return static_cast<int>(fields_.size()); }
    int n_states(int a) const { return fields_[a].count; }
    int dim(int a) const { return fields_[a].dim; }
    std::span<const double> centroid(int a, int i) const { return fields_[a].row(i); }
    const FieldSamples& field(int a) const { return fields_[a]; }

    // Index of the nearest centroid; ties break toward the lowest index.
    int quantize(int a, std::span<const double> sensory) const;

    std::uint64_t kmeans_seed() const { return seed_; }
    std::uint64_t sample_count() const { return sample_count_; }
    std::uint64_t geometry_hash() const { return geometry_hash_; }
    std::uint64_t bank_hash() const { return bank_hash_; }

    std::uint64_t content_hash() const;
    void save(const std::filesystem::path& path) const;
    static PrototypeCodebook load(const std::filesystem::path& path);
    std::vector<std::uint8_t> serialize() const;
    static PrototypeCodebook deserialize(std::span<const std::uint8_t> bytes);

    bool operator==(const PrototypeCodebook& other) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t sample_count_ = 0;
    std::uint64_t geometry_hash_ = 0;
    std::uint64_t bank_hash_ = 0;
    std::vector<FieldSamples> fields_;  // centroid matrices
};

}  // namespace retina
