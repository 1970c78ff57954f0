#include <doctest.h>

#include <vector>

#include "retina/explorer.hpp"
#include "retina/search.hpp"

using namespace retina;

namespace {

PrototypeCodebook random_codebook(const RetinaGeometry& g, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FieldSamples> centroids(g.field_count());
    for (const auto& f : g.fields()) {
        auto& c = centroids[f.index];
        c.dim = f.pixel_count;
        c.count = f.n_states;
        c.data.resize(static_cast<std::size_t>(c.dim) * c.count);
        for (auto& v : c.data) v = rng.uniform_real(0.0, 255.0);
    }
    return PrototypeCodebook::from_centroids(std::move(centroids));
}

}  // namespace

TEST_SUITE_BEGIN("search");

TEST_CASE("foveating saccade is the MI argmax, lowest index on ties") {
    MiTensor mi(49, 8);
    const int fovea = 24;
    const int a = 25;
    mi.stats(a, fovea, 3).mi = 0.8;
    mi.stats(a, fovea, 5).mi = 0.4;
    CHECK(foveating_saccade(mi, a, fovea) == 3);

    mi.stats(a, fovea, 5).mi = 0.8;  // tie between 3 and 5
    CHECK(foveating_saccade(mi, a, fovea) == 3);

    MiTensor flat(49, 8);
    CHECK(foveating_saccade(flat, a, fovea) == 0);
}

TEST_CASE("choose_saccade takes the row with the highest target probability") {
    // 3 fields: 0 and 1 are candidates, 2 is the fovea
    const ModelShape shape{{4, 4, 6}, 2};
    PredictiveModel model(shape);
    MiTensor mi(3, 2);
    mi.stats(0, 2, 1).mi = 0.9;  // field 0 foveates with q=1
    mi.stats(1, 2, 0).mi = 0.9;  // field 1 foveates with q=0

    const int target = 5;
    // field 0, pre-state 2, q=1: P(target) = 1
    model.add(0, 2, 1, 2, target);
    // field 1, pre-state 3, q=0: P(target) = 0.5
    model.add(1, 3, 0, 2, target);
    model.add(1, 3, 0, 2, 0);

    const std::vector<std::pair<int, int>> candidates{{0, 2}, {1, 3}};
    const auto choice = choose_saccade(model, mi, candidates, 2, target);
    CHECK(choice.field == 0);
    CHECK(choice.motor == 1);
    CHECK(choice.score == doctest::Approx(1.0));
}

TEST_CASE("all-equal scores fall back to the lowest field index") {
    const ModelShape shape{{4, 4, 6}, 2};
    const PredictiveModel model(shape);  // empty: every row scores uniform 1/6
    const MiTensor mi(3, 2);
    const std::vector<std::pair<int, int>> candidates{{1, 0}, {0, 1}};
    const auto choice = choose_saccade(model, mi, candidates, 2, 4);
    CHECK(choice.field == 1);  // first candidate in the given order
    CHECK(choice.score == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("make_task encodes the ground-truth feature as a foveal prototype") {
    const auto g = RetinaGeometry::build();
    const auto bank = EncoderBank::init(3, g);
    const auto cb = random_codebook(g, 4);

    SquaresParams black;
    black.n_squares = 0;
    const auto env = Environment::squares(1, black);
    const std::vector<double> zeros(144, 0.0);
    const int expected = cb.quantize(g.fovea_index(), encode(bank, g.fovea_index(), zeros));

    Rng rng(9);
    const auto task = make_task(env, AgentPose{0, 0}, bank, cb, g, rng);
    CHECK(task.target_j == expected);
    bool is_layer1 = false;
    for (int a : g.layer1_fields()) is_layer1 |= a == task.source_field;
    CHECK(is_layer1);

    Rng rng_a(5);
    Rng rng_b(5);
    const auto env2 = Environment::squares(2, SquaresParams{});
    const auto t1 = make_task(env2, AgentPose{12, 24}, bank, cb, g, rng_a);
    const auto t2 = make_task(env2, AgentPose{12, 24}, bank, cb, g, rng_b);
    CHECK(t1.target_j == t2.target_j);
    CHECK(t1.source_field == t2.source_field);
}

TEST_CASE("run_search rejects mismatched artifacts") {
    const auto g = RetinaGeometry::build();
    const auto bank = EncoderBank::init(3, g);
    const auto cb = random_codebook(g, 4);
    const PredictiveModel model(ModelShape::of(g));  // zero hashes in meta
    const MiTensor mi(49, 8);
    const std::vector<Environment> pool{Environment::squares(1, SquaresParams{})};
    CHECK_THROWS(run_search(pool, model, mi, cb, bank, g, 3, 1));
}

// With an empty model every score is uniform and every MI is zero, so the
// policy degenerates to a fixed choice; the outcome must equal the base rate
// of that degenerate policy computed by direct simulation.
TEST_CASE("an untrained model scores at the degenerate base rate") {
    const auto g = RetinaGeometry::build();
    const auto bank = EncoderBank::init(3, g);
    const auto cb = random_codebook(g, 4);

    ModelMeta meta;
    meta.geometry_hash = g.content_hash();
    meta.bank_hash = bank.content_hash();
    meta.codebook_hash = cb.content_hash();
    const PredictiveModel model(ModelShape::of(g), meta);
    const auto mi = mi_tensor(model);

    std::vector<Environment> pool;
    for (std::uint64_t s = 0; s < 3; ++s) {
        pool.push_back(Environment::squares(50 + s, SquaresParams{}));
    }
    const int trials = 60;
    const auto report = run_search(pool, model, mi, cb, bank, g, trials, 314);

    // direct simulation of the degenerate policy: lowest layer-1 field,
    // motor 0, replaying the per-trial rng draws in order
    Sensor sensor(g, bank, cb);
    int expected_successes = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(314, "search/trial" + std::to_string(t)));
        const auto& env = pool[rng.uniform_below(pool.size())];
        const auto pose = random_pose(rng, env, g.rf_window_px());
        const auto task = make_task(env, pose, bank, cb, g, rng);
        const int chosen = g.layer1_fields()[0];
        const auto after = apply_saccade(pose, g.motor(0), env, g.rf_window_px());
        const int achieved = sensor.sense_field(env, after, g.fovea_index());
        if (achieved == task.target_j) ++expected_successes;

        const auto& trial = report.trials[t];
        CHECK(trial.chosen_field == chosen);
        CHECK(trial.saccade == 0);
        CHECK(trial.achieved_j == achieved);
        CHECK(trial.target_j == task.target_j);
    }
    CHECK(report.success_rate ==
          doctest::Approx(static_cast<double>(expected_successes) / trials));
}

TEST_CASE("search reports are deterministic per seed") {
    const auto g = RetinaGeometry::build();
    const auto bank = EncoderBank::init(3, g);
    const auto cb = random_codebook(g, 4);
    ModelMeta meta;
    meta.geometry_hash = g.content_hash();
    meta.bank_hash = bank.content_hash();
    meta.codebook_hash = cb.content_hash();
    PredictiveModel model(ModelShape::of(g), meta);
    const std::vector<Environment> envs{Environment::squares(60, SquaresParams{})};
    explore(envs[0], bank, cb, g, 50, 8, ModelSink{&model});
    const auto mi = mi_tensor(model);

    const auto a = run_search(envs, model, mi, cb, bank, g, 20, 77);
    const auto b = run_search(envs, model, mi, cb, bank, g, 20, 77);
    CHECK(a.success_rate == b.success_rate);
    for (int t = 0; t < 20; ++t) {
        CHECK(a.trials[t].target_j == b.trials[t].target_j);
        CHECK(a.trials[t].chosen_field == b.trials[t].chosen_field);
        CHECK(a.trials[t].achieved_j == b.trials[t].achieved_j);
    }
}

TEST_SUITE_END();
