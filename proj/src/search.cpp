#include "retina/search.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "retina/explorer.hpp"

namespace retina {

SearchTask make_task(const Environment& env, const AgentPose& pose,
                     const EncoderBank& bank, const PrototypeCodebook& codebook,
                     const RetinaGeometry& geometry, Rng& rng) {
    const auto layer1 = geometry.layer1_fields();
    const int source = layer1[rng.uniform_below(layer1.size())];

    std::vector<double> patch(static_cast<std::size_t>(geometry.rf_window_px()) *
                              geometry.rf_window_px());
    read_patch(env, geometry, pose, source, patch);
    // Encode the ground-truth feature as if it were projected in the fovea.
    const int fovea = geometry.fovea_index();
    const auto sensory = encode(bank, fovea, patch);
    return SearchTask{codebook.quantize(fovea, sensory), source};
}

int foveating_saccade(const MiTensor& mi, int a, int fovea) {
    int best_q = 0;
    double best = -1.0;
    for (int q = 0; q < mi.motor_count(); ++q) {
        const double value = mi.mi(a, fovea, q);
        if (value > best) {
            best = value;
            best_q = q;
        }
    }
    return best_q;
}

SaccadeChoice choose_saccade(const PredictiveModel& model, const MiTensor& mi,
                             std::span<const std::pair<int, int>> candidates,
                             int fovea, int target_j) {
    if (candidates.empty()) {
        throw std::invalid_argument("choose_saccade: no candidate fields");
    }
    SaccadeChoice choice;
    double best = -1.0;
    for (const auto& [field, pre_state] : candidates) {
        const int q = foveating_saccade(mi, field, fovea);
        const double p = model.conditional_prob(field, fovea, q, pre_state, target_j);
        if (p > best) {
            best = p;
            choice = SaccadeChoice{field, q, p};
        }
    }
    return choice;
}

SearchReport run_search(const std::vector<Environment>& pool, const PredictiveModel& model,
                        const MiTensor& mi, const PrototypeCodebook& codebook,
                        const EncoderBank& bank, const RetinaGeometry& geometry,
                        int n_trials, std::uint64_t seed) {
    if (pool.empty()) {
        throw std::invalid_argument("run_search: empty environment pool");
    }
    require_consistent(model, geometry.content_hash(), bank.content_hash(),
                       codebook.content_hash());

    SearchReport report;
    report.trials.reserve(n_trials);
    Sensor sensor(geometry, bank, codebook);
    const int fovea = geometry.fovea_index();
    const auto layer1 = geometry.layer1_fields();
    std::vector<std::pair<int, int>> candidates(layer1.size());

    int successes = 0;
    for (int t = 0; t < n_trials; ++t) {
        // Per-trial derived seed so trials stay independent and the report
        // is identical under any parallel schedule.
        Rng rng(derive_seed(seed, "search/trial" + std::to_string(t)));
        const auto& env = pool[rng.uniform_below(pool.size())];
        const AgentPose pose = random_pose(rng, env, geometry.rf_window_px());

        const SearchTask task = make_task(env, pose, bank, codebook, geometry, rng);
        for (std::size_t k = 0; k < layer1.size(); ++k) {
            candidates[k] = {layer1[k], sensor.sense_field(env, pose, layer1[k])};
        }
        const SaccadeChoice choice =
            choose_saccade(model, mi, candidates, fovea, task.target_j);

        const AgentPose after =
            apply_saccade(pose, geometry.motor(choice.motor), env, geometry.rf_window_px());
        const int achieved = sensor.sense_field(env, after, fovea);

        SearchTrial trial;
        trial.trial = t;
        trial.target_j = task.target_j;
        trial.source_field = task.source_field;
        trial.chosen_field = choice.field;
        trial.saccade = choice.motor;
        trial.achieved_j = achieved;
        trial.success = achieved == task.target_j;
        trial.score = choice.score;
        if (trial.success) ++successes;
        report.trials.push_back(trial);
    }
    report.success_rate = n_trials > 0 ? static_cast<double>(successes) / n_trials : 0.0;
    return report;
}

void SearchReport::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write search csv: " + path.string());
    }
    out << "trial,target_j,source_field,chosen_field,saccade,achieved_j,success\n";
    for (const auto& t : trials) {
        out << t.trial << ',' << t.target_j << ',' << t.source_field << ',' << t.chosen_field
            << ',' << t.saccade << ',' << t.achieved_j << ',' << (t.success ? 1 : 0) << '\n';
    }
}

}  // namespace retina
