#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "retina/geometry.hpp"
#include "retina/rng.hpp"

namespace retina {

enum class WorldKind { squares, noise };

struct SquaresParams {
    int width = 252;
    int height = 252;
    int n_squares = 20;
    int min_size = 8;
    int max_size = 40;
};

// A static 2D world of luminance values in [0,255]. Coordinates wrap
// toroidally, so patch reads never fail near the borders. Immutable after
// generation and safe to share across workers.
class Environment {
public:
    static Environment squares(std::uint64_t seed, const SquaresParams& params);
    static Environment noise(std::uint64_t seed, int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    WorldKind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }
    const SquaresParams& squares_params() const { return squares_params_; }

    double at(int row, int col) const {
        return pixels_[static_cast<std::size_t>(row) * width_ + col];
    }
    std::span<const double> pixels() const { return pixels_; }
    std::uint64_t content_hash() const;

    // Writes an 8-bit grayscale view (<stem>.pgm) plus the authoritative
    // sidecar (<stem>.json) holding seed, params, kind, and pixel hash.
    void save(const std::filesystem::path& stem) const;

    // Regenerates from the sidecar and verifies the recorded pixel hash.
    // The 8-bit view cannot carry the real-valued noise pixels, so the
    // sidecar is the load path.
    static Environment load(const std::filesystem::path& sidecar_path);

private:
    Environment() = default;

    int width_ = 0;
    int height_ = 0;
    WorldKind kind_ = WorldKind::squares;
    std::uint64_t seed_ = 0;
    SquaresParams squares_params_;
    std::vector<double> pixels_;
};

// Top-left anchor of the retina window, in world pixels. Poses live on the
// receptive-field lattice: both coordinates stay multiples of the window.
struct AgentPose {
    int row = 0;
    int col = 0;
    bool operator==(const AgentPose&) const = default;
};

AgentPose random_pose(Rng& rng, const Environment& env, int rf_window_px);
AgentPose apply_saccade(const AgentPose& pose, const MotorCommand& motor,
                        const Environment& env, int rf_window_px);

// Raw un-encoded, un-subsampled window under field a at the given pose.
// out must hold rf_window_px^2 values.
void read_patch(const Environment& env, const RetinaGeometry& geometry,
                const AgentPose& pose, int a, std::span<double> out);

std::string to_string(WorldKind kind);
WorldKind world_kind_from_string(const std::string& s);

}  // namespace retina
