#include "retina/information.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "retina/io.hpp"

namespace retina {

namespace {

// Sum in ascending value order: the result depends only on the multiset of
// terms, which keeps block statistics bit-identical when prototype labels
// are permuted or every count is doubled.
double canonical_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += t;
    return acc;
}

}  // namespace

double entropy(std::span<const double> dist) {
    double sum = 0.0;
    for (double p : dist) {
        if (p < 0.0) {
            throw std::invalid_argument("entropy: negative probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("entropy: distribution does not sum to 1");
    }
    double h = 0.0;
    for (double p : dist) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

BlockStats block_stats(std::span<const std::uint64_t> counts, int n_pre, int n_post) {
    BlockStats out;
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    out.total = total;
    if (total == 0) {
        return out;  // all-zero block: H(S^b|m_q) = 0, MI = 0 by convention
    }
    const double total_d = static_cast<double>(total);

    std::vector<std::uint64_t> row_sums(n_pre, 0);
    std::vector<std::uint64_t> col_sums(n_post, 0);
    for (int i = 0; i < n_pre; ++i) {
        const std::uint64_t* row = counts.data() + static_cast<std::size_t>(i) * n_post;
        for (int j = 0; j < n_post; ++j) {
            row_sums[i] += row[j];
            col_sums[j] += row[j];
        }
    }

    // Division keeps marginals exact (a full column gives p = 1 and entropy
    // exactly 0) and gives bit-identical probabilities when all counts double.
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n_post));
    for (int j = 0; j < n_post; ++j) {
        if (col_sums[j] == 0) continue;
        const double p = static_cast<double>(col_sums[j]) / total_d;
        terms.push_back(p * std::log2(p));
    }
    out.h_post = -canonical_sum(terms);

    terms.clear();
    terms.reserve(counts.size());
    for (int i = 0; i < n_pre; ++i) {
        if (row_sums[i] == 0) continue;
        const double p_pre = static_cast<double>(row_sums[i]) / total_d;
        const std::uint64_t* row = counts.data() + static_cast<std::size_t>(i) * n_post;
        for (int j = 0; j < n_post; ++j) {
            if (row[j] == 0) continue;
            const double p_joint = static_cast<double>(row[j]) / total_d;
            terms.push_back(p_joint * std::log2(p_joint / p_pre));
        }
    }
    out.h_cond = -canonical_sum(terms);

    if (out.h_post > 0.0) {
        out.mi = std::clamp((out.h_post - out.h_cond) / out.h_post, 0.0, 1.0);
    }
    return out;
}

double normalized_mi(std::span<const std::uint64_t> counts, int n_pre, int n_post) {
    return block_stats(counts, n_pre, n_post).mi;
}

double mi_oracle(std::span<const std::uint64_t> counts, int n_pre, int n_post) {
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    if (total == 0) return 0.0;

    // Marginals accumulate as integer counts before converting, so a
    // point-mass marginal has exactly zero entropy.
    std::vector<std::uint64_t> pre_counts(n_pre, 0);
    std::vector<std::uint64_t> post_counts(n_post, 0);
    for (int i = 0; i < n_pre; ++i) {
        for (int j = 0; j < n_post; ++j) {
            const std::uint64_t c = counts[static_cast<std::size_t>(i) * n_post + j];
            pre_counts[i] += c;
            post_counts[j] += c;
        }
    }
    std::vector<double> joint(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        joint[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    }
    std::vector<double> p_pre(n_pre);
    std::vector<double> p_post(n_post);
    for (int i = 0; i < n_pre; ++i) {
        p_pre[i] = static_cast<double>(pre_counts[i]) / static_cast<double>(total);
    }
    for (int j = 0; j < n_post; ++j) {
        p_post[j] = static_cast<double>(post_counts[j]) / static_cast<double>(total);
    }
    const auto plain_entropy = [](std::span<const double> dist) {
        double h = 0.0;
        for (double p : dist) {
            if (p > 0.0) h -= p * std::log2(p);
        }
        return h;
    };
    const double h_pre = plain_entropy(p_pre);
    const double h_post = plain_entropy(p_post);
    const double h_joint = plain_entropy(joint);
    if (h_post == 0.0) return 0.0;
    return (h_pre + h_post - h_joint) / h_post;
}

MiTensor::MiTensor(int n_fields, int n_motors)
    : n_fields_(n_fields),
      n_motors_(n_motors),
      stats_(static_cast<std::size_t>(n_fields) * n_fields * n_motors) {}

MiTensor mi_tensor(const PredictiveModel& model) {
    const int f = model.field_count();
    MiTensor tensor(f, model.motor_count());
    for (int q = 0; q < model.motor_count(); ++q) {
        for (int a = 0; a < f; ++a) {
            for (int b = 0; b < f; ++b) {
                tensor.stats(a, b, q) =
                    block_stats(model.block(a, b, q), model.n_states(a), model.n_states(b));
            }
        }
    }
    return tensor;
}

void MiTensor::save_csv(const std::filesystem::path& path, bool entropy_dump) const {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write MI csv: " + path.string());
    }
    out << (entropy_dump ? "q,a,b,mi,h_post,h_cond\n" : "q,a,b,mi\n");
    out.precision(17);
    for (int q = 0; q < n_motors_; ++q) {
        for (int a = 0; a < n_fields_; ++a) {
            for (int b = 0; b < n_fields_; ++b) {
                const auto& s = stats_[index(a, b, q)];
                out << q << ',' << a << ',' << b << ',' << s.mi;
                if (entropy_dump) {
                    out << ',' << s.h_post << ',' << s.h_cond;
                }
                out << '\n';
            }
        }
    }
}

void MiTensor::save_heatmaps(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<double> pixels(static_cast<std::size_t>(n_fields_) * n_fields_);
    for (int q = 0; q < n_motors_; ++q) {
        for (int a = 0; a < n_fields_; ++a) {
            for (int b = 0; b < n_fields_; ++b) {
                pixels[static_cast<std::size_t>(a) * n_fields_ + b] =
                    stats_[index(a, b, q)].mi * 255.0;
            }
        }
        write_pgm(dir / ("mi_q" + std::to_string(q) + ".pgm"), pixels, n_fields_, n_fields_);
    }
}

bool MiTensor::operator==(const MiTensor& other) const {
    if (n_fields_ != other.n_fields_ || n_motors_ != other.n_motors_) return false;
    for (std::size_t k = 0; k < stats_.size(); ++k) {
        if (stats_[k].mi != other.stats_[k].mi || stats_[k].h_post != other.stats_[k].h_post ||
            stats_[k].h_cond != other.stats_[k].h_cond || stats_[k].total != other.stats_[k].total) {
            return false;
        }
    }
    return true;
}

StructureStats structure_stats(const MiTensor& tensor, const RetinaGeometry& geometry) {
    StructureStats out;
    double coupled_sum = 0.0;
    double uncoupled_sum = 0.0;
    std::int64_t coupled_n = 0;
    std::int64_t uncoupled_n = 0;
    for (int q = 0; q < tensor.motor_count(); ++q) {
        for (int a = 0; a < tensor.field_count(); ++a) {
            const auto partner = geometry.coupled_partner(a, q);
            int argmax_b = 0;
            double best = -1.0;
            for (int b = 0; b < tensor.field_count(); ++b) {
                const double mi = tensor.mi(a, b, q);
                if (mi > best) {
                    best = mi;
                    argmax_b = b;
                }
                if (partner.has_value() && b == *partner) {
                    coupled_sum += mi;
                    ++coupled_n;
                } else {
                    uncoupled_sum += mi;
                    ++uncoupled_n;
                }
            }
            if (partner.has_value()) {
                ++out.coupled_cases;
                if (argmax_b == *partner) ++out.argmax_correct;
            }
        }
    }
    out.mean_coupled_mi = coupled_n > 0 ? coupled_sum / coupled_n : 0.0;
    out.mean_uncoupled_mi = uncoupled_n > 0 ? uncoupled_sum / uncoupled_n : 0.0;
    return out;
}

AsymmetryStats asymmetry_stats(const MiTensor& tensor, const RetinaGeometry& geometry) {
    AsymmetryStats out;
    double fine_given_coarse = 0.0;
    double coarse_given_fine = 0.0;
    for (int q = 0; q < tensor.motor_count(); ++q) {
        for (int a = 0; a < tensor.field_count(); ++a) {
            const auto partner = geometry.coupled_partner(a, q);
            if (!partner.has_value()) continue;
            const int b = *partner;
            // Only pairs where the pre field is coarser than the post field;
            // the reverse shift runs the same pair fine-to-coarse.
            if (geometry.field(a).layer <= geometry.field(b).layer) continue;
            fine_given_coarse += tensor.stats(a, b, q).h_cond;
            coarse_given_fine += tensor.stats(b, a, geometry.opposite_motor(q)).h_cond;
            ++out.pair_count;
        }
    }
    if (out.pair_count > 0) {
        out.mean_h_fine_given_coarse = fine_given_coarse / out.pair_count;
        out.mean_h_coarse_given_fine = coarse_given_fine / out.pair_count;
    }
    return out;
}

}  // namespace retina
