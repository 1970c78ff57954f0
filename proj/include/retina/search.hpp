#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "retina/codebook.hpp"
#include "retina/encoding.hpp"
#include "retina/environment.hpp"
#include "retina/geometry.hpp"
#include "retina/information.hpp"
#include "retina/model.hpp"
#include "retina/rng.hpp"

namespace retina {

// One visual-search objective: a desired foveal prototype known to be
// reachable because it was built from a feature currently in view.
// source_field is ground truth for evaluation only; the policy never sees it.
struct SearchTask {
    int target_j = 0;
    int source_field = 0;
};

struct SaccadeChoice {
    int field = 0;   // a*, the field the agent decided to foveate
    int motor = 0;
    double score = 0.0;
};

struct SearchTrial {
    int trial = 0;
    int target_j = 0;
    int source_field = 0;
    int chosen_field = 0;
    int saccade = 0;
    int achieved_j = 0;
    bool success = false;
    double score = 0.0;
};

struct SearchReport {
    std::vector<SearchTrial> trials;
    double success_rate = 0.0;

    void save_csv(const std::filesystem::path& path) const;
};

// Picks a seeded-uniform layer-1 field, reads its un-encoded ground-truth
// feature, and encodes/quantizes it as if it were projected in the fovea.
SearchTask make_task(const Environment& env, const AgentPose& pose,
                     const EncoderBank& bank, const PrototypeCodebook& codebook,
                     const RetinaGeometry& geometry, Rng& rng);

// The saccade that maximizes MI between field a and the fovea; from the
// outside, the one that shifts a's feature onto the fovea. Ties break toward
// the lowest motor index.
int foveating_saccade(const MiTensor& mi, int a, int fovea);

// The policy proper. It sees only prototype indices, the count model, and
// the MI tensor: candidates are (field index, pre-state) pairs for the
// fields surrounding the fovea. Picks a* maximizing
// P(target | pre-state, foveating saccade of a); ties break toward the
// lowest field index; unobserved rows score at their uniform value.
SaccadeChoice choose_saccade(const PredictiveModel& model, const MiTensor& mi,
                             std::span<const std::pair<int, int>> candidates,
                             int fovea, int target_j);

// Full evaluation harness: per trial, a random pose in a pool environment, a
// fresh task, one policy saccade, exact prototype-identity scoring.
SearchReport run_search(const std::vector<Environment>& pool, const PredictiveModel& model,
                        const MiTensor& mi, const PrototypeCodebook& codebook,
                        const EncoderBank& bank, const RetinaGeometry& geometry,
                        int n_trials, std::uint64_t seed);

}  // namespace retina
