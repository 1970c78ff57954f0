#include "retina/encoding.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "retina/io.hpp"
#include "retina/rng.hpp"

namespace retina {

namespace {

constexpr std::uint32_t kMagic = 0x434e4552;  // "RENC"
constexpr std::uint32_t kVersion = 1;

}  // namespace

EncoderBank EncoderBank::init(std::uint64_t seed, const RetinaGeometry& geometry) {
    EncoderBank bank;
    bank.seed_ = seed;
    bank.geometry_hash_ = geometry.content_hash();
    bank.rf_window_px_ = geometry.rf_window_px();
    bank.fields_.resize(geometry.field_count());

    for (int a = 0; a < geometry.field_count(); ++a) {
        const auto& rf = geometry.field(a);
        auto& enc = bank.fields_[a];
        enc.stride = rf.stride;
        enc.resolution_px = rf.resolution_px;
        const int d = rf.pixel_count;
        enc.alpha.resize(d);
        enc.beta.resize(d);
        enc.perm.resize(d);

        // Per-field stream so the bank is stable under geometry variants.
        Rng rng(derive_seed(seed, "encoder/field" + std::to_string(a)));
        for (int k = 0; k < d; ++k) {
            const double beta = rng.uniform_real(0.0, 255.0);
            double alpha;
            do {
                alpha = rng.uniform_real(-beta / 255.0, 1.0 - beta / 255.0);
            } while (std::abs(alpha) < kAlphaMin);
            enc.alpha[k] = alpha;
            enc.beta[k] = beta;
        }
        std::iota(enc.perm.begin(), enc.perm.end(), 0);
        for (int k = d - 1; k > 0; --k) {
            const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(k) + 1));
            std::swap(enc.perm[k], enc.perm[j]);
        }
    }
    return bank;
}

EncoderBank EncoderBank::identity(const RetinaGeometry& geometry) {
    EncoderBank bank;
    bank.seed_ = 0;
    bank.geometry_hash_ = geometry.content_hash();
    bank.rf_window_px_ = geometry.rf_window_px();
    bank.fields_.resize(geometry.field_count());
    for (int a = 0; a < geometry.field_count(); ++a) {
        const auto& rf = geometry.field(a);
        auto& enc = bank.fields_[a];
        enc.stride = rf.stride;
        enc.resolution_px = rf.resolution_px;
        enc.alpha.assign(rf.pixel_count, 1.0);
        enc.beta.assign(rf.pixel_count, 0.0);
        enc.perm.resize(rf.pixel_count);
        std::iota(enc.perm.begin(), enc.perm.end(), 0);
    }
    return bank;
}

EncoderBank EncoderBank::from_fields(int rf_window_px, std::uint64_t geometry_hash,
                                     std::vector<FieldEncoder> fields) {
    EncoderBank bank;
    bank.seed_ = 0;
    bank.geometry_hash_ = geometry_hash;
    bank.rf_window_px_ = rf_window_px;
    bank.fields_ = std::move(fields);
    return bank;
}

void encode(const EncoderBank& bank, int a, std::span<const double> patch,
            std::span<double> out) {
    const auto& enc = bank.field(a);
    const int window = bank.rf_window_px();
    const int res = enc.resolution_px;
    int k = 0;
    for (int r = 0; r < res; ++r) {
        const double* line = patch.data() + static_cast<std::size_t>(r) * enc.stride * window;
        for (int c = 0; c < res; ++c, ++k) {
            const double x = line[c * enc.stride];
            out[enc.perm[k]] = enc.alpha[k] * x + enc.beta[k];
        }
    }
}

std::vector<double> encode(const EncoderBank& bank, int a, std::span<const double> patch) {
    std::vector<double> out(bank.field(a).alpha.size());
    encode(bank, a, patch, out);
    return out;
}

void decode(const EncoderBank& bank, int a, std::span<const double> sensory,
            std::span<double> out) {
    constexpr double kEps = 1e-6;
    const auto& enc = bank.field(a);
    const int d = static_cast<int>(enc.alpha.size());
    for (int k = 0; k < d; ++k) {
        const double x = (sensory[enc.perm[k]] - enc.beta[k]) / enc.alpha[k];
        if (x < -kEps || x > 255.0 + kEps) {
            throw std::domain_error("decode: value outside [0,255], input not from this bank");
        }
        out[k] = x;
    }
}

std::vector<double> decode(const EncoderBank& bank, int a, std::span<const double> sensory) {
    std::vector<double> out(bank.field(a).alpha.size());
    decode(bank, a, sensory, out);
    return out;
}

std::vector<std::uint8_t> EncoderBank::serialize() const {
    ByteWriter w;
    w.put_u32(kMagic);
    w.put_u32(kVersion);
    w.put_u64(seed_);
    w.put_u64(geometry_hash_);
    w.put_u32(static_cast<std::uint32_t>(rf_window_px_));
    w.put_u32(static_cast<std::uint32_t>(fields_.size()));
    for (const auto& enc : fields_) {
        w.put_u32(static_cast<std::uint32_t>(enc.stride));
        w.put_u32(static_cast<std::uint32_t>(enc.resolution_px));
        w.put_u32(static_cast<std::uint32_t>(enc.alpha.size()));
        for (double v : enc.alpha) w.put_f64(v);
        for (double v : enc.beta) w.put_f64(v);
        for (int v : enc.perm) w.put_u32(static_cast<std::uint32_t>(v));
    }
    return w.bytes();
}

EncoderBank EncoderBank::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.get_u32() != kMagic) {
        throw std::runtime_error("not an encoder bank file");
    }
    if (r.get_u32() != kVersion) {
        throw std::runtime_error("unsupported encoder bank version");
    }
    EncoderBank bank;
    bank.seed_ = r.get_u64();
    bank.geometry_hash_ = r.get_u64();
    bank.rf_window_px_ = static_cast<int>(r.get_u32());
    bank.fields_.resize(r.get_u32());
    for (auto& enc : bank.fields_) {
        enc.stride = static_cast<int>(r.get_u32());
        enc.resolution_px = static_cast<int>(r.get_u32());
        const auto d = r.get_u32();
        enc.alpha.resize(d);
        enc.beta.resize(d);
        enc.perm.resize(d);
        for (auto& v : enc.alpha) v = r.get_f64();
        for (auto& v : enc.beta) v = r.get_f64();
        for (auto& v : enc.perm) v = static_cast<int>(r.get_u32());
    }
    return bank;
}

std::uint64_t EncoderBank::content_hash() const {
    const auto bytes = serialize();
    return fnv1a64(bytes.data(), bytes.size());
}

void EncoderBank::save(const std::filesystem::path& path) const {
    write_file(path, serialize());
}

EncoderBank EncoderBank::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

bool EncoderBank::operator==(const EncoderBank& other) const {
    return serialize() == other.serialize();
}

}  // namespace retina
