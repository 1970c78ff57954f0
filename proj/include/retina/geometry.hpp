#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace retina {

// Layout of the simulated retina: a square grid of juxtaposed receptive
// fields grouped into concentric rings of decreasing resolution, plus the
// fixed set of 8 single-field-width saccades.
struct GeometryConfig {
    int grid_side = 7;
    int rf_window_px = 12;
    // One entry per ring, ring 0 = fovea. resolution = rf_window_px / stride.
    std::vector<int> layer_strides{1, 2, 3, 6};
    std::vector<int> layer_states{60, 30, 20, 10};
};

struct ReceptiveField {
    int index = 0;       // row-major position in the grid
    int row = 0;
    int col = 0;
    int layer = 0;       // Chebyshev ring distance from the grid center
    int stride = 1;      // subsample step inside the raw window
    int resolution_px = 0;
    int pixel_count = 0; // resolution_px^2, dimensionality of the sensory vector
    int n_states = 0;    // prototype count for this field
};

struct MotorCommand {
    int index = 0;
    int d_row = 0;  // displacement in receptive-field widths
    int d_col = 0;
};

class RetinaGeometry {
public:
    static RetinaGeometry build();
    static RetinaGeometry build(const GeometryConfig& config);

    int grid_side() const { return config_.grid_side; }
    int rf_window_px() const { return config_.rf_window_px; }
    int retina_px() const { return config_.grid_side * config_.rf_window_px; }
    int field_count() const { return static_cast<int>(fields_.size()); }
    int fovea_index() const { return fovea_index_; }

    const ReceptiveField& field(int a) const { return fields_[a]; }
    const ReceptiveField& field_at(int row, int col) const {
        return fields_[row * config_.grid_side + col];
    }
    std::span<const ReceptiveField> fields() const { return fields_; }

    int motor_count() const { return static_cast<int>(motors_.size()); }
    const MotorCommand& motor(int q) const { return motors_[q]; }
    std::span<const MotorCommand> motors() const { return motors_; }

    // Motor with the negated displacement. Always exists in the 8-saccade set.
    int opposite_motor(int q) const;

    // Ground-truth oracle: the field that reads the same world pixels after
    // saccade q that field a read before it. Empty when the shifted grid
    // position falls outside the retina. Used only by tests and reports;
    // the learning agent never sees it.
    std::optional<int> coupled_partner(int a, int q) const;

    // The 8 fields ring 1 away from the fovea, in index order.
    std::span<const int> layer1_fields() const { return layer1_fields_; }

    const GeometryConfig& config() const { return config_; }
    std::uint64_t content_hash() const { return content_hash_; }

private:
    GeometryConfig config_;
    std::vector<ReceptiveField> fields_;
    std::vector<MotorCommand> motors_;
    std::vector<int> layer1_fields_;
    int fovea_index_ = 0;
    std::uint64_t content_hash_ = 0;
};

}  // namespace retina
