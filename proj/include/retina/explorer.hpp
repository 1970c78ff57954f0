#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "retina/codebook.hpp"
#include "retina/encoding.hpp"
#include "retina/environment.hpp"
#include "retina/geometry.hpp"
#include "retina/model.hpp"
#include "retina/rng.hpp"

namespace retina {

// Reads, encodes, and quantizes every receptive field at one pose. Scratch
// buffers live in the sensor so the exploration loop does not allocate.
class Sensor {
public:
    Sensor(const RetinaGeometry& geometry, const EncoderBank& bank,
           const PrototypeCodebook& codebook)
        : geometry_(&geometry),
          bank_(&bank),
          codebook_(&codebook),
          patch_(static_cast<std::size_t>(geometry.rf_window_px()) * geometry.rf_window_px()),
          encoded_(patch_.size()) {}

    int sense_field(const Environment& env, const AgentPose& pose, int a) {
        read_patch(env, *geometry_, pose, a, patch_);
        const int d = geometry_->field(a).pixel_count;
        encode(*bank_, a, patch_, {encoded_.data(), static_cast<std::size_t>(d)});
        return codebook_->quantize(a, {encoded_.data(), static_cast<std::size_t>(d)});
    }

    void sense_all(const Environment& env, const AgentPose& pose, std::vector<int>& states) {
        states.resize(geometry_->field_count());
        for (int a = 0; a < geometry_->field_count(); ++a) {
            states[a] = sense_field(env, pose, a);
        }
    }

private:
    const RetinaGeometry* geometry_;
    const EncoderBank* bank_;
    const PrototypeCodebook* codebook_;
    std::vector<double> patch_;
    std::vector<double> encoded_;
};

// Motor babbling: from a seeded-uniform initial pose, repeatedly draw a
// uniform saccade and emit every (a, i, q, b, j) pre/post pairing. Post
// states of step t are reused as the pre states of step t+1, so each pose is
// quantized once. The sink is a template so the per-record call inlines.
template <typename Sink>
void explore(const Environment& env, const EncoderBank& bank,
             const PrototypeCodebook& codebook, const RetinaGeometry& geometry,
             std::int64_t n_saccades, std::uint64_t seed, Sink&& sink) {
    Rng rng(seed);
    Sensor sensor(geometry, bank, codebook);
    const int n_fields = geometry.field_count();
    const int n_motors = geometry.motor_count();

    AgentPose pose = random_pose(rng, env, geometry.rf_window_px());
    std::vector<int> pre;
    std::vector<int> post;
    sensor.sense_all(env, pose, pre);

    for (std::int64_t step = 0; step < n_saccades; ++step) {
        const int q = static_cast<int>(rng.uniform_below(n_motors));
        pose = apply_saccade(pose, geometry.motor(q), env, geometry.rf_window_px());
        sensor.sense_all(env, pose, post);
        for (int a = 0; a < n_fields; ++a) {
            for (int b = 0; b < n_fields; ++b) {
                sink(TransitionRecord{a, pre[a], q, b, post[b]});
            }
        }
        std::swap(pre, post);
    }
}

// Sink that accumulates records into a count store.
struct ModelSink {
    PredictiveModel* model;
    void operator()(const TransitionRecord& r) const { model->add(r); }
};

struct ExploreBudget {
    std::int64_t saccades_per_env = 20000;
    // The shard decomposition is part of the experiment definition, not of
    // the execution: the same shards run under any worker count, so merged
    // counts are worker-count invariant.
    int shards_per_env = 8;
};

// Equal saccade budget per environment, split into shards with derived
// seeds; workers pull shards from a shared queue and merge privately
// accumulated counts by addition.
PredictiveModel explore_many(const std::vector<Environment>& envs,
                             const EncoderBank& bank, const PrototypeCodebook& codebook,
                             const RetinaGeometry& geometry, const ExploreBudget& budget,
                             std::uint64_t seed, int workers, ModelMeta meta = {});

}  // namespace retina
