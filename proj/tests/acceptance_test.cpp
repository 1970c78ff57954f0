// Acceptance suite: trains the desk-scale pipelines once (setup), then
// checks each shipping criterion and prints one PASS/FAIL line per
// criterion. Exit code is the number of failed criteria.
//
//   retina_acceptance                       train + all criteria (temp dir)
//   retina_acceptance --scratch DIR train   training fixture only
//   retina_acceptance --scratch DIR 3       one criterion against the fixture

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "retina/explorer.hpp"
#include "retina/io.hpp"
#include "retina/pipeline.hpp"

using namespace retina;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", criterion, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
    va_list args;
    va_start(args, format);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

ExperimentConfig desk_config(const fs::path& out_dir, WorldKind kind, int workers) {
    ExperimentConfig config;
    config.master_seed = 20260808;
    config.out_dir = out_dir.string();
    config.workers = workers;
    config.kind = kind;
    config.n_environments = 3;
    config.samples_per_field = 25000;
    config.saccades_per_env = 20000;
    config.search_trials = 200;
    return config;
}

struct TrainedRun {
    ExperimentConfig config;
    RetinaGeometry geometry = RetinaGeometry::build();
    EncoderBank bank;
    PrototypeCodebook codebook;
    PredictiveModel model{ModelShape::of(RetinaGeometry::build())};
    MiTensor tensor{49, 8};
    StructureStats structure;
    std::string chain_hash;
    double wall_s = 0.0;
};

TrainedRun load_run(const ExperimentConfig& config) {
    TrainedRun run;
    run.config = config;
    const auto paths = artifact_paths(config);
    run.geometry = RetinaGeometry::build(config.geometry);
    run.bank = EncoderBank::load(paths.encoders());
    run.codebook = PrototypeCodebook::load(paths.codebook());
    run.model = PredictiveModel::load(paths.model());
    run.tensor = mi_tensor(run.model);
    run.structure = structure_stats(run.tensor, run.geometry);
    std::ifstream in(paths.manifest());
    if (in) {
        const auto manifest = nlohmann::json::parse(in);
        run.chain_hash = manifest.at("chain_hash").get<std::string>();
    }
    return run;
}

// Learning pipeline in process with a caller-supplied encoder bank; used for
// the identity/scrambled invariance check.
TrainedRun train_in_process(const ExperimentConfig& config, const EncoderBank& bank) {
    TrainedRun run;
    run.config = config;
    run.geometry = RetinaGeometry::build(config.geometry);
    run.bank = bank;

    std::vector<Environment> envs;
    for (int k = 0; k < config.n_environments; ++k) {
        const auto seed = derive_seed(config.master_seed, "env/train" + std::to_string(k));
        envs.push_back(config.kind == WorldKind::squares
                           ? Environment::squares(seed, config.environment)
                           : Environment::noise(seed, config.environment.width,
                                                config.environment.height));
    }
    const auto samples =
        collect_samples(envs, bank, run.geometry, config.samples_per_field,
                        derive_seed(config.master_seed, "codebook/samples"));
    run.codebook = PrototypeCodebook::fit(samples, run.geometry, bank,
                                          derive_seed(config.master_seed, "codebook/kmeans"),
                                          config.workers);
    ModelMeta meta;
    meta.geometry_hash = run.geometry.content_hash();
    meta.bank_hash = bank.content_hash();
    meta.codebook_hash = run.codebook.content_hash();
    meta.master_seed = config.master_seed;
    run.model = explore_many(envs, bank, run.codebook, run.geometry,
                             ExploreBudget{config.saccades_per_env, config.shards_per_env},
                             derive_seed(config.master_seed, "explore"), config.workers, meta);
    run.tensor = mi_tensor(run.model);
    run.structure = structure_stats(run.tensor, run.geometry);
    return run;
}

SearchReport run_search_stage(const TrainedRun& run) {
    const auto pool = make_search_pool(run.config);
    return run_search(pool, run.model, run.tensor, run.codebook, run.bank, run.geometry,
                      run.config.search_trials,
                      derive_seed(run.config.master_seed, "search"));
}

bool structure_thresholds(const StructureStats& s) {
    return s.argmax_agreement() >= 0.95 &&
           s.mean_coupled_mi >= 3.0 * s.mean_uncoupled_mi;
}

void train_fixture(const fs::path& scratch) {
    fs::create_directories(scratch);
    std::printf("training desk-scale squares pipeline (single-threaded)...\n");
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    run_pipeline(desk_config(scratch / "squares", WorldKind::squares, 1));
    const double squares_s = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
    std::printf("training desk-scale noise pipeline...\n");
    std::fflush(stdout);
    run_pipeline(desk_config(scratch / "noise", WorldKind::noise, 2));

    nlohmann::json timings;
    timings["squares_pipeline_s"] = squares_s;
    std::ofstream out(scratch / "timings.json");
    out << timings.dump(2) << "\n";
}

double squares_wall_s(const fs::path& scratch) {
    std::ifstream in(scratch / "timings.json");
    if (!in) return 0.0;
    return nlohmann::json::parse(in).at("squares_pipeline_s").get<double>();
}

void criterion_1(const fs::path& scratch) {
    auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));
    const auto& s = squares.structure;
    report(1, "structure recovery", structure_thresholds(s),
           fmt("argmax %d/%d (%.3f), coupled/uncoupled MI %.4f/%.4f (%.1fx), pipeline %.1fs",
               s.argmax_correct, s.coupled_cases, s.argmax_agreement(), s.mean_coupled_mi,
               s.mean_uncoupled_mi, s.mean_coupled_mi / s.mean_uncoupled_mi,
               squares_wall_s(scratch)));
}

void criterion_2(const fs::path& scratch) {
    const auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));
    const auto noise = load_run(desk_config(scratch / "noise", WorldKind::noise, 2));
    const bool ablated =
        noise.structure.mean_uncoupled_mi <= 0.5 * squares.structure.mean_uncoupled_mi;
    const bool argmax_holds = noise.structure.argmax_agreement() >= 0.95;
    report(2, "noise ablation", ablated && argmax_holds,
           fmt("uncoupled MI noise/squares %.4f/%.4f (%.2fx), noise argmax %.3f",
               noise.structure.mean_uncoupled_mi, squares.structure.mean_uncoupled_mi,
               noise.structure.mean_uncoupled_mi / squares.structure.mean_uncoupled_mi,
               noise.structure.argmax_agreement()));
}

void criterion_3(const fs::path& scratch) {
    const auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));

    // the learned foveating saccade must match the geometric one for every
    // field surrounding the fovea
    const auto& g = squares.geometry;
    int foveation_agree = 0;
    for (int a : g.layer1_fields()) {
        const int learned = foveating_saccade(squares.tensor, a, g.fovea_index());
        const auto partner = g.coupled_partner(a, learned);
        if (partner.has_value() && *partner == g.fovea_index()) ++foveation_agree;
    }

    const auto search = run_search_stage(squares);
    report(3, "visual search", search.success_rate >= 0.95 && foveation_agree == 8,
           fmt("success rate %.3f over %zu trials, foveating saccades match geometry %d/8",
               search.success_rate, search.trials.size(), foveation_agree));
}

void criterion_4(const fs::path& scratch) {
    const auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));
    Rng rng(271828);
    double worst_small = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int n_pre = 1 + static_cast<int>(rng.uniform_below(6));
        const int n_post = 1 + static_cast<int>(rng.uniform_below(6));
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(n_pre) * n_post);
        for (auto& c : counts) c = rng.uniform_below(21);
        worst_small = std::max(worst_small,
                               std::abs(normalized_mi(counts, n_pre, n_post) -
                                        mi_oracle(counts, n_pre, n_post)));
    }

    double worst_model = 0.0;
    const auto& model = squares.model;
    for (int q = 0; q < model.motor_count(); ++q) {
        for (int a = 0; a < model.field_count(); ++a) {
            for (int b = 0; b < model.field_count(); ++b) {
                const double direct = squares.tensor.mi(a, b, q);
                const double oracle =
                    mi_oracle(model.block(a, b, q), model.n_states(a), model.n_states(b));
                worst_model = std::max(worst_model, std::abs(direct - oracle));
            }
        }
    }

    const double bijection =
        normalized_mi(std::vector<std::uint64_t>{2, 0, 0, 2}, 2, 2);
    const double independence =
        normalized_mi(std::vector<std::uint64_t>{1, 1, 1, 1}, 2, 2);
    const double mix = normalized_mi(std::vector<std::uint64_t>{3, 1, 1, 3}, 2, 2);
    const bool analytic = bijection == 1.0 && independence == 0.0 &&
                          std::abs(mix - 0.188722) < 1e-6;

    report(4, "MI oracle equivalence",
           worst_small <= 1e-12 && worst_model <= 1e-9 && analytic,
           fmt("max |diff| small blocks %.2e, trained blocks %.2e, analytic %d/3",
               worst_small, worst_model,
               (bijection == 1.0) + (independence == 0.0) + (std::abs(mix - 0.188722) < 1e-6)));
}

void criterion_5(const fs::path& scratch) {
    const auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));
    const auto& model = squares.model;
    double worst_row = 0.0;
    for (int q = 0; q < model.motor_count(); ++q) {
        for (int a = 0; a < model.field_count(); ++a) {
            for (int b = 0; b < model.field_count(); ++b) {
                for (int i = 0; i < model.n_states(a); ++i) {
                    const auto row = model.conditional_row(a, b, q, i);
                    if (!row.observed) continue;
                    const double sum =
                        std::accumulate(row.probs.begin(), row.probs.end(), 0.0);
                    worst_row = std::max(worst_row, std::abs(sum - 1.0));
                }
            }
        }
    }
    const bool rows_ok = worst_row <= 1e-9;

    bool range_ok = true;
    for (const auto& s : squares.tensor.all()) {
        range_ok = range_ok && s.mi >= 0.0 && s.mi <= 1.0;
    }

    // totals double, the information values must not move a bit
    const auto values_identical = [](const MiTensor& x, const MiTensor& y) {
        const auto xs = x.all();
        const auto ys = y.all();
        for (std::size_t k = 0; k < xs.size(); ++k) {
            if (xs[k].mi != ys[k].mi || xs[k].h_post != ys[k].h_post ||
                xs[k].h_cond != ys[k].h_cond) {
                return false;
            }
        }
        return true;
    };
    PredictiveModel doubled = squares.model;
    doubled.merge(squares.model);
    const bool doubling_ok = values_identical(mi_tensor(doubled), squares.tensor);

    // reverse the fovea's prototype labels
    const int fovea = squares.geometry.fovea_index();
    const int n = model.n_states(fovea);
    PredictiveModel relabeled(model.shape(), model.meta());
    for (int q = 0; q < model.motor_count(); ++q) {
        for (int a = 0; a < model.field_count(); ++a) {
            for (int b = 0; b < model.field_count(); ++b) {
                const auto src = model.block(a, b, q);
                auto dst = relabeled.mutable_block(a, b, q);
                const int na = model.n_states(a);
                const int nb = model.n_states(b);
                for (int i = 0; i < na; ++i) {
                    const int pi = a == fovea ? n - 1 - i : i;
                    for (int j = 0; j < nb; ++j) {
                        const int pj = b == fovea ? n - 1 - j : j;
                        dst[static_cast<std::size_t>(pi) * nb + pj] =
                            src[static_cast<std::size_t>(i) * nb + j];
                    }
                }
            }
        }
    }
    const bool relabel_ok = values_identical(mi_tensor(relabeled), squares.tensor);

    report(5, "probabilistic soundness", rows_ok && range_ok && doubling_ok && relabel_ok,
           fmt("max row-sum error %.2e, mi in [0,1] %s, doubling bit-identical %s, "
               "relabeling bit-identical %s",
               worst_row, range_ok ? "yes" : "no", doubling_ok ? "yes" : "no",
               relabel_ok ? "yes" : "no"));
}

void criterion_6(const fs::path& scratch) {
    const auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));
    const auto a = asymmetry_stats(squares.tensor, squares.geometry);
    const double margin = a.mean_h_fine_given_coarse - a.mean_h_coarse_given_fine;
    report(6, "coarse/fine asymmetry", margin > 0.05,
           fmt("H(fine|coarse) %.3f bits vs H(coarse|fine) %.3f bits, margin %.3f",
               a.mean_h_fine_given_coarse, a.mean_h_coarse_given_fine, margin));
}

void criterion_7(const fs::path& scratch) {
    const auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));

    // full pipeline rerun from the same master seed
    auto rerun_config = squares.config;
    rerun_config.out_dir = (scratch / "squares_rerun").string();
    rerun_config.workers = 2;
    const auto rerun_manifest = run_pipeline(rerun_config);
    const bool files_identical =
        read_file(artifact_paths(rerun_config).model()) ==
        read_file(artifact_paths(squares.config).model());
    const bool chain_identical = rerun_manifest.chain_hash == squares.chain_hash;

    // worker-count invariance at the full desk budget
    const auto envs = load_environments(artifact_paths(squares.config).envs_dir());
    const ModelMeta meta = squares.model.meta();
    const ExploreBudget budget{squares.config.saccades_per_env,
                               squares.config.shards_per_env};
    const auto seed = derive_seed(squares.config.master_seed, "explore");
    const auto one = explore_many(envs, squares.bank, squares.codebook, squares.geometry,
                                  budget, seed, 1, meta);
    const auto four = explore_many(envs, squares.bank, squares.codebook, squares.geometry,
                                   budget, seed, 4, meta);
    const bool workers_identical = one.serialize() == four.serialize();

    // the record-count formula, at the documented example size
    std::int64_t records = 0;
    explore(envs[0], squares.bank, squares.codebook, squares.geometry, 10, 5,
            [&](const TransitionRecord&) { ++records; });
    const bool count_ok = records == 24010;

    report(7, "determinism and merge",
           files_identical && chain_identical && workers_identical && count_ok,
           fmt("rerun model bytes %s, chain %s, 1 vs 4 workers %s, 10-saccade records %lld",
               files_identical ? "identical" : "differ",
               chain_identical ? "identical" : "differ",
               workers_identical ? "identical" : "differ",
               static_cast<long long>(records)));
}

void criterion_8(const fs::path& scratch) {
    const auto squares = load_run(desk_config(scratch / "squares", WorldKind::squares, 1));

    // decode(encode(patch)) over random banks, patches, and every layer
    const auto& geometry = squares.geometry;
    Rng rng(992288);
    double max_err = 0.0;
    const int fields[] = {geometry.fovea_index(), geometry.field_at(3, 4).index,
                          geometry.field_at(1, 3).index, geometry.field_at(0, 0).index};
    std::vector<double> patch(144);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto bank = EncoderBank::init(rng.next_u64(), geometry);
        for (auto& v : patch) v = rng.uniform_real(0.0, 255.0);
        for (int a : fields) {
            const auto& enc = bank.field(a);
            const auto recovered = decode(bank, a, encode(bank, a, patch));
            int k = 0;
            for (int r = 0; r < enc.resolution_px; ++r) {
                for (int c = 0; c < enc.resolution_px; ++c, ++k) {
                    const double x = patch[static_cast<std::size_t>(r) * enc.stride * 12 +
                                           static_cast<std::size_t>(c) * enc.stride];
                    max_err = std::max(max_err, std::abs(recovered[k] - x));
                }
            }
        }
    }
    const bool roundtrip_ok = max_err < 1e-6;

    // identity and scrambled banks must pass the same learning criteria
    auto identity_config = squares.config;
    identity_config.out_dir = (scratch / "squares_identity").string();
    identity_config.workers = 2;
    const auto identity_run =
        train_in_process(identity_config, EncoderBank::identity(geometry));
    const auto identity_search = run_search_stage(identity_run);
    const bool identity_ok = structure_thresholds(identity_run.structure) &&
                             identity_search.success_rate >= 0.95;
    const bool scrambled_ok = structure_thresholds(squares.structure);

    report(8, "encoding round-trip and bank invariance",
           roundtrip_ok && identity_ok && scrambled_ok,
           fmt("max round-trip error %.2e; identity bank: argmax %.3f, ratio %.1fx, "
               "search %.3f; scrambled bank passes %s",
               max_err, identity_run.structure.argmax_agreement(),
               identity_run.structure.mean_coupled_mi /
                   identity_run.structure.mean_uncoupled_mi,
               identity_search.success_rate, scrambled_ok ? "yes" : "no"));
}

void run_criterion(int n, const fs::path& scratch) {
    switch (n) {
        case 1: criterion_1(scratch); break;
        case 2: criterion_2(scratch); break;
        case 3: criterion_3(scratch); break;
        case 4: criterion_4(scratch); break;
        case 5: criterion_5(scratch); break;
        case 6: criterion_6(scratch); break;
        case 7: criterion_7(scratch); break;
        case 8: criterion_8(scratch); break;
        default: std::fprintf(stderr, "unknown criterion %d\n", n); ++g_failures;
    }
}

}  // namespace

int main(int argc, char** argv) {
    fs::path scratch = fs::temp_directory_path() / "retina_acceptance";
    std::string mode = "all";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--scratch") == 0 && i + 1 < argc) {
            scratch = argv[++i];
        } else {
            mode = argv[i];
        }
    }

    if (mode == "train") {
        train_fixture(scratch);
        return 0;
    }
    if (mode == "all") {
        fs::remove_all(scratch);
        train_fixture(scratch);
        for (int n = 1; n <= 8; ++n) run_criterion(n, scratch);
        std::printf("%d of 8 criteria passed\n", 8 - g_failures);
        return g_failures;
    }
    run_criterion(std::atoi(mode.c_str()), scratch);
    return g_failures;
}
