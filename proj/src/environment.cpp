#include "retina/environment.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "retina/io.hpp"

namespace retina {

namespace {

constexpr int kMinWorldPx = 84;   // retina footprint
constexpr int kPoseLattice = 12;  // receptive-field width

void check_dims(int width, int height) {
    if (width < kMinWorldPx || height < kMinWorldPx) {
        throw std::invalid_argument("environment must be at least 84 px per side");
    }
    // Wrap must map lattice poses to lattice poses.
    if (width % kPoseLattice != 0 || height % kPoseLattice != 0) {
        throw std::invalid_argument("environment sides must be multiples of 12 px");
    }
}

}  // namespace

Environment Environment::squares(std::uint64_t seed, const SquaresParams& params) {
    check_dims(params.width, params.height);
    if (params.n_squares < 0) {
        throw std::invalid_argument("n_squares must be non-negative");
    }
    if (params.min_size < 1 || params.max_size < params.min_size ||
        params.max_size > std::min(params.width, params.height)) {
        throw std::invalid_argument("square sizes must satisfy 1 <= min <= max <= world side");
    }

    Environment env;
    env.width_ = params.width;
    env.height_ = params.height;
    env.kind_ = WorldKind::squares;
    env.seed_ = seed;
    env.squares_params_ = params;
    env.pixels_.assign(static_cast<std::size_t>(params.width) * params.height, 0.0);

    Rng rng(seed);
    for (int s = 0; s < params.n_squares; ++s) {
        const int top = static_cast<int>(rng.uniform_below(params.height));
        const int left = static_cast<int>(rng.uniform_below(params.width));
        const int side = rng.uniform_int(params.min_size, params.max_size);
        // Squares wrap with the toroidal topology.
        for (int r = 0; r < side; ++r) {
            const int row = (top + r) % params.height;
            double* line = env.pixels_.data() + static_cast<std::size_t>(row) * params.width;
            for (int c = 0; c < side; ++c) {
                line[(left + c) % params.width] = 255.0;
            }
        }
    }
    return env;
}

Environment Environment::noise(std::uint64_t seed, int width, int height) {
    check_dims(width, height);
    Environment env;
    env.width_ = width;
    env.height_ = height;
    env.kind_ = WorldKind::noise;
    env.seed_ = seed;
    env.squares_params_.width = width;
    env.squares_params_.height = height;
    env.pixels_.resize(static_cast<std::size_t>(width) * height);
    Rng rng(seed);
    for (double& p : env.pixels_) {
        p = rng.uniform_real(0.0, 255.0);
    }
    return env;
}

std::uint64_t Environment::content_hash() const {
    ByteWriter w;
    w.put_u32(static_cast<std::uint32_t>(width_));
    w.put_u32(static_cast<std::uint32_t>(height_));
    for (double p : pixels_) w.put_f64(p);
    return w.content_hash();
}

void Environment::save(const std::filesystem::path& stem) const {
    auto pgm = stem;
    pgm += ".pgm";
    write_pgm(pgm, pixels_, width_, height_);

    nlohmann::json meta;
    meta["kind"] = to_string(kind_);
    meta["seed"] = seed_;
    meta["width"] = width_;
    meta["height"] = height_;
    if (kind_ == WorldKind::squares) {
        meta["n_squares"] = squares_params_.n_squares;
        meta["min_size"] = squares_params_.min_size;
        meta["max_size"] = squares_params_.max_size;
    }
    meta["pixel_hash"] = hex64(content_hash());

    auto sidecar = stem;
    sidecar += ".json";
    std::ofstream out(sidecar);
    if (!out) {
        throw std::runtime_error("cannot write environment sidecar: " + sidecar.string());
    }
    out << meta.dump(2) << "\n";
}

Environment Environment::load(const std::filesystem::path& sidecar_path) {
    std::ifstream in(sidecar_path);
    if (!in) {
        throw std::runtime_error("cannot read environment sidecar: " + sidecar_path.string());
    }
    nlohmann::json meta = nlohmann::json::parse(in);

    const auto kind = world_kind_from_string(meta.at("kind").get<std::string>());
    const auto seed = meta.at("seed").get<std::uint64_t>();
    Environment env;
    if (kind == WorldKind::squares) {
        SquaresParams params;
        params.width = meta.at("width").get<int>();
        params.height = meta.at("height").get<int>();
        params.n_squares = meta.at("n_squares").get<int>();
        params.min_size = meta.at("min_size").get<int>();
        params.max_size = meta.at("max_size").get<int>();
        env = squares(seed, params);
    } else {
        env = noise(seed, meta.at("width").get<int>(), meta.at("height").get<int>());
    }
    if (hex64(env.content_hash()) != meta.at("pixel_hash").get<std::string>()) {
        throw std::runtime_error("environment pixel hash mismatch: " + sidecar_path.string());
    }
    return env;
}

AgentPose random_pose(Rng& rng, const Environment& env, int rf_window_px) {
    const int rows = env.height() / rf_window_px;
    const int cols = env.width() / rf_window_px;
    return AgentPose{
        rf_window_px * static_cast<int>(rng.uniform_below(rows)),
        rf_window_px * static_cast<int>(rng.uniform_below(cols)),
    };
}

AgentPose apply_saccade(const AgentPose& pose, const MotorCommand& motor,
                        const Environment& env, int rf_window_px) {
    const int h = env.height();
    const int w = env.width();
    return AgentPose{
        ((pose.row + motor.d_row * rf_window_px) % h + h) % h,
        ((pose.col + motor.d_col * rf_window_px) % w + w) % w,
    };
}

void read_patch(const Environment& env, const RetinaGeometry& geometry,
                const AgentPose& pose, int a, std::span<double> out) {
    const int window = geometry.rf_window_px();
    const auto& f = geometry.field(a);
    const int h = env.height();
    const int w = env.width();
    const int base_row = ((pose.row + f.row * window) % h + h) % h;
    const int base_col = ((pose.col + f.col * window) % w + w) % w;
    std::size_t k = 0;
    for (int r = 0; r < window; ++r) {
        const int row = (base_row + r) % h;
        const double* line = env.pixels().data() + static_cast<std::size_t>(row) * w;
        for (int c = 0; c < window; ++c) {
            out[k++] = line[(base_col + c) % w];
        }
    }
}

std::string to_string(WorldKind kind) {
    return kind == WorldKind::squares ? "squares" : "noise";
}

WorldKind world_kind_from_string(const std::string& s) {
    if (s == "squares") return WorldKind::squares;
    if (s == "noise") return WorldKind::noise;
    throw std::invalid_argument("unknown world kind: " + s);
}

}  // namespace retina
