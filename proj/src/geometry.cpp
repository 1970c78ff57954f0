#include "retina/geometry.hpp"

#include <algorithm>
#include <stdexcept>

#include "retina/io.hpp"

namespace retina {

RetinaGeometry RetinaGeometry::build() { return build(GeometryConfig{}); }

RetinaGeometry RetinaGeometry::build(const GeometryConfig& config) {
    if (config.grid_side < 1 || config.grid_side % 2 == 0) {
        throw std::invalid_argument("grid_side must be odd and positive");
    }
    const int n_layers = (config.grid_side - 1) / 2 + 1;
    if (static_cast<int>(config.layer_strides.size()) != n_layers ||
        static_cast<int>(config.layer_states.size()) != n_layers) {
        throw std::invalid_argument("need one stride and one state count per ring");
    }
    for (int layer = 0; layer < n_layers; ++layer) {
        const int stride = config.layer_strides[layer];
        if (stride < 1 || config.rf_window_px % stride != 0) {
            throw std::invalid_argument("stride must divide the receptive-field window");
        }
        if (config.layer_states[layer] < 1) {
            throw std::invalid_argument("state counts must be positive");
        }
    }

    RetinaGeometry g;
    g.config_ = config;
    const int side = config.grid_side;
    const int center = side / 2;
    g.fields_.reserve(static_cast<std::size_t>(side) * side);
    for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
            ReceptiveField f;
            f.index = row * side + col;
            f.row = row;
            f.col = col;
            f.layer = std::max(std::abs(row - center), std::abs(col - center));
            f.stride = config.layer_strides[f.layer];
            f.resolution_px = config.rf_window_px / f.stride;
            f.pixel_count = f.resolution_px * f.resolution_px;
            f.n_states = config.layer_states[f.layer];
            g.fields_.push_back(f);
        }
    }
    g.fovea_index_ = center * side + center;

    // Row-major enumeration of the unit displacements, (0,0) excluded.
    // Opposite saccades land at mirrored indices (opposite of q is 7-q).
    int q = 0;
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            g.motors_.push_back(MotorCommand{q++, dr, dc});
        }
    }

    for (const auto& f : g.fields_) {
        if (f.layer == 1) g.layer1_fields_.push_back(f.index);
    }

    ByteWriter w;
    w.put_u32(static_cast<std::uint32_t>(config.grid_side));
    w.put_u32(static_cast<std::uint32_t>(config.rf_window_px));
    for (int s : config.layer_strides) w.put_u32(static_cast<std::uint32_t>(s));
    for (int n : config.layer_states) w.put_u32(static_cast<std::uint32_t>(n));
    g.content_hash_ = w.content_hash();
    return g;
}

int RetinaGeometry::opposite_motor(int q) const {
    const auto& m = motors_[q];
    for (const auto& other : motors_) {
        if (other.d_row == -m.d_row && other.d_col == -m.d_col) return other.index;
    }
    throw std::logic_error("motor set is not symmetric");
}

std::optional<int> RetinaGeometry::coupled_partner(int a, int q) const {
    // The saccade shifts the whole window by the displacement, so the world
    // pixels under field a are read afterwards by the field one displacement
    // back in grid coordinates.
    const auto& f = fields_[a];
    const auto& m = motors_[q];
    const int row = f.row - m.d_row;
    const int col = f.col - m.d_col;
    if (row < 0 || row >= config_.grid_side || col < 0 || col >= config_.grid_side) {
        return std::nullopt;
    }
    return row * config_.grid_side + col;
}

}  // namespace retina
