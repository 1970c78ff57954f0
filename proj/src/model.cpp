#include "retina/model.hpp"

#include <numeric>
#include <stdexcept>

#include "retina/io.hpp"

namespace retina {

namespace {

constexpr std::uint32_t kMagic = 0x444d5052;  // "RPMD"
constexpr std::uint32_t kVersion = 1;

}  // namespace

ModelShape ModelShape::of(const RetinaGeometry& geometry) {
    ModelShape shape;
    shape.n_states.reserve(geometry.field_count());
    for (const auto& f : geometry.fields()) shape.n_states.push_back(f.n_states);
    shape.n_motors = geometry.motor_count();
    return shape;
}

PredictiveModel::PredictiveModel(ModelShape shape, ModelMeta meta)
    : shape_(std::move(shape)), meta_(meta) {
    const int f = field_count();
    block_base_.resize(static_cast<std::size_t>(shape_.n_motors) * f * f);
    std::size_t offset = 0;
    for (int q = 0; q < shape_.n_motors; ++q) {
        for (int a = 0; a < f; ++a) {
            for (int b = 0; b < f; ++b) {
                block_base_[(static_cast<std::size_t>(q) * f + a) * f + b] = offset;
                offset += static_cast<std::size_t>(shape_.n_states[a]) * shape_.n_states[b];
            }
        }
    }
    counts_.assign(offset, 0);
}

ConditionalRow PredictiveModel::conditional_row(int a, int b, int q, int i) const {
    const int nb = shape_.n_states[b];
    const std::uint64_t* row =
        counts_.data() + block_base(a, b, q) + static_cast<std::size_t>(i) * nb;
    std::uint64_t total = 0;
    for (int j = 0; j < nb; ++j) total += row[j];

    ConditionalRow out;
    out.probs.resize(nb);
    if (total == 0) {
        const double uniform = 1.0 / nb;
        for (auto& p : out.probs) p = uniform;
        out.observed = false;
    } else {
        const double inv = 1.0 / static_cast<double>(total);
        for (int j = 0; j < nb; ++j) {
            out.probs[j] = static_cast<double>(row[j]) * inv;
        }
        out.observed = true;
    }
    return out;
}

double PredictiveModel::conditional_prob(int a, int b, int q, int i, int j) const {
    const int nb = shape_.n_states[b];
    const std::uint64_t* row =
        counts_.data() + block_base(a, b, q) + static_cast<std::size_t>(i) * nb;
    std::uint64_t total = 0;
    for (int k = 0; k < nb; ++k) total += row[k];
    if (total == 0) return 1.0 / nb;
    return static_cast<double>(row[j]) / static_cast<double>(total);
}

std::uint64_t PredictiveModel::total_count() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void PredictiveModel::merge(const PredictiveModel& other) {
    if (shape_ != other.shape_) {
        throw std::invalid_argument("merge: model shapes differ");
    }
    for (std::size_t k = 0; k < counts_.size(); ++k) {
        const std::uint64_t before = counts_[k];
        counts_[k] += other.counts_[k];
        if (counts_[k] < before) {
            throw std::overflow_error("transition counter overflow during merge");
        }
    }
    meta_.total_saccades += other.meta_.total_saccades;
}

std::vector<std::uint8_t> PredictiveModel::serialize() const {
    ByteWriter w;
    w.put_u32(kMagic);
    w.put_u32(kVersion);
    w.put_u64(meta_.geometry_hash);
    w.put_u64(meta_.bank_hash);
    w.put_u64(meta_.codebook_hash);
    w.put_u64(meta_.total_saccades);
    w.put_u32(meta_.n_environments);
    w.put_u64(meta_.master_seed);
    w.put_u32(static_cast<std::uint32_t>(shape_.n_states.size()));
    for (int n : shape_.n_states) w.put_u32(static_cast<std::uint32_t>(n));
    w.put_u32(static_cast<std::uint32_t>(shape_.n_motors));
    w.put_u64(counts_.size());
    for (std::uint64_t c : counts_) w.put_u64(c);
    return w.bytes();
}

PredictiveModel PredictiveModel::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.get_u32() != kMagic) {
        throw std::runtime_error("not a predictive-model file");
    }
    if (r.get_u32() != kVersion) {
        throw std::runtime_error("unsupported predictive-model version");
    }
    ModelMeta meta;
    meta.geometry_hash = r.get_u64();
    meta.bank_hash = r.get_u64();
    meta.codebook_hash = r.get_u64();
    meta.total_saccades = r.get_u64();
    meta.n_environments = r.get_u32();
    meta.master_seed = r.get_u64();
    ModelShape shape;
    shape.n_states.resize(r.get_u32());
    for (auto& n : shape.n_states) n = static_cast<int>(r.get_u32());
    shape.n_motors = static_cast<int>(r.get_u32());

    PredictiveModel model(std::move(shape), meta);
    const auto n_cells = r.get_u64();
    if (n_cells != model.counts_.size()) {
        throw std::runtime_error("predictive-model cell count does not match its shape");
    }
    for (auto& c : model.counts_) c = r.get_u64();
    return model;
}

std::uint64_t PredictiveModel::content_hash() const {
    const auto bytes = serialize();
    return fnv1a64(bytes.data(), bytes.size());
}

void PredictiveModel::save(const std::filesystem::path& path) const {
    write_file(path, serialize());
}

PredictiveModel PredictiveModel::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

void require_consistent(const PredictiveModel& model, std::uint64_t geometry_hash,
                        std::uint64_t bank_hash, std::uint64_t codebook_hash) {
    const auto& meta = model.meta();
    if (meta.geometry_hash != geometry_hash) {
        throw std::runtime_error("model/geometry hash mismatch");
    }
    if (meta.bank_hash != bank_hash) {
        throw std::runtime_error("model/encoder-bank hash mismatch");
    }
    if (meta.codebook_hash != codebook_hash) {
        throw std::runtime_error("model/codebook hash mismatch");
    }
}

}  // namespace retina
