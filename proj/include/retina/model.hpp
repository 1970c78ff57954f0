#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "retina/geometry.hpp"

namespace retina {

// One observed sensorimotor transition: pre-state i in field a, saccade q,
// post-state j in field b.
struct TransitionRecord {
    int a = 0;
    int i = 0;
    int q = 0;
    int b = 0;
    int j = 0;
};

// Shapes of the block store, decoupled from RetinaGeometry so unit tests can
// build small models directly.
struct ModelShape {
    std::vector<int> n_states;  // per field
    int n_motors = 8;

    static ModelShape of(const RetinaGeometry& geometry);
    bool operator==(const ModelShape&) const = default;
};

struct ModelMeta {
    std::uint64_t geometry_hash = 0;
    std::uint64_t bank_hash = 0;
    std::uint64_t codebook_hash = 0;
    std::uint64_t total_saccades = 0;
    std::uint32_t n_environments = 0;
    std::uint64_t master_seed = 0;
    bool operator==(const ModelMeta&) const = default;
};

struct ConditionalRow {
    std::vector<double> probs;
    bool observed = false;  // false means the row had no counts and is uniform
};

// Block-indexed transition counts: one dense N^a x N^b matrix of unsigned
// 64-bit counters per (a, b, q). Counts merge by addition, so shard results
// combine in any order; after estimation the model is immutable in practice.
class PredictiveModel {
public:
    explicit PredictiveModel(ModelShape shape, ModelMeta meta = {});

    const ModelShape& shape() const { return shape_; }
    ModelMeta& meta() { return meta_; }
    const ModelMeta& meta() const { return meta_; }
    int field_count() const { return static_cast<int>(shape_.n_states.size()); }
    int motor_count() const { return shape_.n_motors; }
    int n_states(int a) const { return shape_.n_states[a]; }

    void add(const TransitionRecord& r) { add(r.a, r.i, r.q, r.b, r.j); }
    void add(int a, int i, int q, int b, int j) {
        auto& cell = counts_[block_base(a, b, q) +
                             static_cast<std::size_t>(i) * shape_.n_states[b] + j];
        if (++cell == 0) {
            throw std::overflow_error("transition counter overflow");
        }
    }

    std::span<const std::uint64_t> block(int a, int b, int q) const {
        return {counts_.data() + block_base(a, b, q),
                static_cast<std::size_t>(shape_.n_states[a]) * shape_.n_states[b]};
    }
    std::span<std::uint64_t> mutable_block(int a, int b, int q) {
        return {counts_.data() + block_base(a, b, q),
                static_cast<std::size_t>(shape_.n_states[a]) * shape_.n_states[b]};
    }

    // Frequency estimate over post-states j for a fixed (a, i, q, b).
    // Rows without observations return the uniform distribution, flagged.
    ConditionalRow conditional_row(int a, int b, int q, int i) const;

    // Probability of one post-state; uniform value when unobserved. Avoids
    // materializing the whole row on hot paths.
    double conditional_prob(int a, int b, int q, int i, int j) const;

    std::uint64_t total_count() const;
    void merge(const PredictiveModel& other);

    std::uint64_t content_hash() const;
    void save(const std::filesystem::path& path) const;
    static PredictiveModel load(const std::filesystem::path& path);
    std::vector<std::uint8_t> serialize() const;
    static PredictiveModel deserialize(std::span<const std::uint8_t> bytes);

    bool operator==(const PredictiveModel& other) const {
        return shape_ == other.shape_ && meta_ == other.meta_ && counts_ == other.counts_;
    }

    std::size_t block_base(int a, int b, int q) const {
        const int f = field_count();
        return block_base_[(static_cast<std::size_t>(q) * f + a) * f + b];
    }

private:
    ModelShape shape_;
    ModelMeta meta_;
    std::vector<std::size_t> block_base_;
    std::vector<std::uint64_t> counts_;
};

// Artifact-chain check: a model may only be used with the geometry, encoder
// bank, and codebook it was trained against. Throws on any mismatch.
void require_consistent(const PredictiveModel& model, std::uint64_t geometry_hash,
                        std::uint64_t bank_hash, std::uint64_t codebook_hash);

}  // namespace retina
