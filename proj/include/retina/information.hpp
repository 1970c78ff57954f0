#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "retina/geometry.hpp"
#include "retina/model.hpp"

namespace retina {

// Shannon entropy in bits of a probability vector (0 log 0 = 0). Throws when
// the entries are negative or do not sum to 1 within 1e-9.
double entropy(std::span<const double> dist);

struct BlockStats {
    double mi = 0.0;      // normalized, in [0,1]
    double h_post = 0.0;  // H(S^b | m_q), bits
    double h_cond = 0.0;  // H(S^b | S^a, m_q), bits
    std::uint64_t total = 0;
};

// Normalized mutual information of one joint count block:
//   (H(S^b|m_q) - H(S^b|S^a,m_q)) / H(S^b|m_q),
// estimated from raw counts, 0 when H(S^b|m_q) = 0 (including empty blocks).
// Per-cell terms are summed in sorted order, so the value is bit-identical
// under prototype relabeling and under doubling of all counts.
BlockStats block_stats(std::span<const std::uint64_t> counts, int n_pre, int n_post);
double normalized_mi(std::span<const std::uint64_t> counts, int n_pre, int n_post);

// Independent verification oracle: recomputes the same quantity through the
// identity (H(S^a|m) + H(S^b|m) - H(S^a,S^b|m)) / H(S^b|m) from explicit
// joint/marginal probability tables with naive summation. Unclamped.
double mi_oracle(std::span<const std::uint64_t> counts, int n_pre, int n_post);

// Normalized MI (plus the entropies behind it) for every (a, b, q) block.
class MiTensor {
public:
    MiTensor(int n_fields, int n_motors);

    int field_count() const { return n_fields_; }
    int motor_count() const { return n_motors_; }

    double mi(int a, int b, int q) const { return stats_[index(a, b, q)].mi; }
    const BlockStats& stats(int a, int b, int q) const { return stats_[index(a, b, q)]; }
    BlockStats& stats(int a, int b, int q) { return stats_[index(a, b, q)]; }
    std::span<const BlockStats> all() const { return stats_; }

    // CSV schema: q,a,b,mi (+ h_post,h_cond with entropy_dump).
    void save_csv(const std::filesystem::path& path, bool entropy_dump = false) const;
    // One grayscale image per saccade, rows = a, columns = b, white = MI 1.
    void save_heatmaps(const std::filesystem::path& dir) const;

    bool operator==(const MiTensor& other) const;

private:
    std::size_t index(int a, int b, int q) const {
        return (static_cast<std::size_t>(q) * n_fields_ + a) * n_fields_ + b;
    }

    int n_fields_ = 0;
    int n_motors_ = 0;
    std::vector<BlockStats> stats_;
};

MiTensor mi_tensor(const PredictiveModel& model);

// --- Report/test helpers (use the geometry oracle; not agent-facing) ---

struct StructureStats {
    int coupled_cases = 0;        // (a,q) pairs with a defined partner
    int argmax_correct = 0;       // cases where argmax_b MI == partner
    double mean_coupled_mi = 0.0;
    double mean_uncoupled_mi = 0.0;
    double argmax_agreement() const {
        return coupled_cases == 0 ? 0.0
                                  : static_cast<double>(argmax_correct) / coupled_cases;
    }
};

StructureStats structure_stats(const MiTensor& tensor, const RetinaGeometry& geometry);

struct AsymmetryStats {
    // Mean H(fine post | coarse pre, m) over coupled cross-layer pairs, and
    // the mean of the reverse shifts. Ambiguity means the first exceeds the
    // second: a blurry state maps to several sharp ones, not vice versa.
    double mean_h_fine_given_coarse = 0.0;
    double mean_h_coarse_given_fine = 0.0;
    int pair_count = 0;
};

AsymmetryStats asymmetry_stats(const MiTensor& tensor, const RetinaGeometry& geometry);

}  // namespace retina
