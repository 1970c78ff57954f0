#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "retina/geometry.hpp"

namespace retina {

// Affine slopes are redrawn below this magnitude: a zero slope would destroy
// the pixel and make the display-side inversion impossible.
constexpr double kAlphaMin = 1e-3;

struct FieldEncoder {
    int stride = 1;
    int resolution_px = 0;
    // One (alpha, beta) pair per retained pixel, indexed in the canonical
    // row-major subsampled order. perm maps canonical position -> slot in
    // the emitted sensory vector.
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<int> perm;
};

// The deliberately scrambled sensory interface: per-pixel affine transforms
// and a per-field pixel shuffle, drawn once and then fixed properties of the
// sensor. The learning pipeline never reads the parameters; decode exists
// for visualization and the search-target oracle only.
class EncoderBank {
public:
    static EncoderBank init(std::uint64_t seed, const RetinaGeometry& geometry);
    // alpha = 1, beta = 0, identity shuffle. Test/report tool: the learning
    // pipeline must behave identically on identity and scrambled banks.
    static EncoderBank identity(const RetinaGeometry& geometry);
    // Explicit per-field parameters (tests and tools).
    static EncoderBank from_fields(int rf_window_px, std::uint64_t geometry_hash,
                                   std::vector<FieldEncoder> fields);

    int field_count() const { return static_cast<int>(fields_.size()); }
    const FieldEncoder& field(int a) const { return fields_[a]; }
    int rf_window_px() const { return rf_window_px_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t geometry_hash() const { return geometry_hash_; }

    std::uint64_t content_hash() const;
    void save(const std::filesystem::path& path) const;
    static EncoderBank load(const std::filesystem::path& path);
    std::vector<std::uint8_t> serialize() const;
    static EncoderBank deserialize(std::span<const std::uint8_t> bytes);

    bool operator==(const EncoderBank& other) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t geometry_hash_ = 0;
    int rf_window_px_ = 0;
    std::vector<FieldEncoder> fields_;
};

// Subsamples the raw window with the field's stride, applies the per-pixel
// affine maps, and shuffles. patch holds rf_window_px^2 raw values; out
// receives pixel_count encoded values in [0,255].
void encode(const EncoderBank& bank, int a, std::span<const double> patch,
            std::span<double> out);
std::vector<double> encode(const EncoderBank& bank, int a, std::span<const double> patch);

// Inverts the shuffle and the affine maps, recovering the subsampled feature
// (resolution_px^2 values). Throws if any recovered pixel falls outside
// [-1e-6, 255 + 1e-6], which marks input that this bank cannot have produced.
void decode(const EncoderBank& bank, int a, std::span<const double> sensory,
            std::span<double> out);
std::vector<double> decode(const EncoderBank& bank, int a, std::span<const double> sensory);

}  // namespace retina
