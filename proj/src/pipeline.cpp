#include "retina/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "retina/explorer.hpp"
#include "retina/io.hpp"

namespace retina {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["master_seed"] = c.master_seed;
    j["out_dir"] = c.out_dir;
    j["workers"] = c.workers;
    if (c.encoder_seed) {
        j["encoder_seed"] = *c.encoder_seed;
    } else {
        j["encoder_seed"] = nullptr;
    }
    j["environment"] = {
        {"kind", to_string(c.kind)},     {"width", c.environment.width},
        {"height", c.environment.height}, {"n_squares", c.environment.n_squares},
        {"min_size", c.environment.min_size}, {"max_size", c.environment.max_size},
    };
    j["geometry"] = {
        {"grid_side", c.geometry.grid_side},
        {"rf_window_px", c.geometry.rf_window_px},
        {"layer_strides", c.geometry.layer_strides},
        {"layer_states", c.geometry.layer_states},
    };
    j["n_environments"] = c.n_environments;
    j["samples_per_field"] = c.samples_per_field;
    j["saccades_per_env"] = c.saccades_per_env;
    j["shards_per_env"] = c.shards_per_env;
    j["search_trials"] = c.search_trials;
    j["search_pool"] = c.search_pool;
    j["gallery_samples"] = c.gallery_samples;
    j["gallery_top_k"] = c.gallery_top_k;
    j["gallery_scale"] = c.gallery_scale;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.out_dir = j.at("out_dir").get<std::string>();
    c.workers = j.at("workers").get<int>();
    if (j.contains("encoder_seed") && !j.at("encoder_seed").is_null()) {
        c.encoder_seed = j.at("encoder_seed").get<std::uint64_t>();
    }
    const auto& env = j.at("environment");
    c.kind = world_kind_from_string(env.at("kind").get<std::string>());
    c.environment.width = env.at("width").get<int>();
    c.environment.height = env.at("height").get<int>();
    c.environment.n_squares = env.at("n_squares").get<int>();
    c.environment.min_size = env.at("min_size").get<int>();
    c.environment.max_size = env.at("max_size").get<int>();
    const auto& geo = j.at("geometry");
    c.geometry.grid_side = geo.at("grid_side").get<int>();
    c.geometry.rf_window_px = geo.at("rf_window_px").get<int>();
    c.geometry.layer_strides = geo.at("layer_strides").get<std::vector<int>>();
    c.geometry.layer_states = geo.at("layer_states").get<std::vector<int>>();
    c.n_environments = j.at("n_environments").get<int>();
    c.samples_per_field = j.at("samples_per_field").get<int>();
    c.saccades_per_env = j.at("saccades_per_env").get<std::int64_t>();
    c.shards_per_env = j.at("shards_per_env").get<int>();
    c.search_trials = j.at("search_trials").get<int>();
    c.search_pool = j.at("search_pool").get<int>();
    c.gallery_samples = j.at("gallery_samples").get<int>();
    c.gallery_top_k = j.at("gallery_top_k").get<int>();
    c.gallery_scale = j.at("gallery_scale").get<int>();
    return c;
}

class StageTimer {
public:
    StageTimer(std::string name, std::uint64_t seed) : start_(clock::now()) {
        record_.name = std::move(name);
        record_.seed = seed;
    }

    void add_output(const ArtifactPaths& paths, const fs::path& file) {
        StageOutput out;
        out.path = fs::relative(file, paths.out_dir).generic_string();
        out.hash = hex64(hash_file(file));
        record_.outputs.push_back(std::move(out));
    }

    StageRecord finish() {
        record_.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  clock::now() - start_)
                                  .count();
        return std::move(record_);
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
    StageRecord record_;
};

std::string pad3(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", v);
    return buf;
}

Environment make_train_env(const ExperimentConfig& config, int index) {
    const auto seed = derive_seed(config.master_seed, "env/train" + std::to_string(index));
    if (config.kind == WorldKind::squares) {
        return Environment::squares(seed, config.environment);
    }
    return Environment::noise(seed, config.environment.width, config.environment.height);
}

// Nearest-neighbor upscale of a decoded feature onto its full window
// footprint, clamped to [0,255].
void blit_feature(std::span<const double> feature, int resolution, int stride, int scale,
                  std::vector<double>& canvas, int canvas_width, int top, int left) {
    const int cell = resolution * stride * scale;
    for (int r = 0; r < cell; ++r) {
        for (int c = 0; c < cell; ++c) {
            const int fr = std::min(r / (stride * scale), resolution - 1);
            const int fc = std::min(c / (stride * scale), resolution - 1);
            const double v = std::clamp(feature[static_cast<std::size_t>(fr) * resolution + fc],
                                        0.0, 255.0);
            canvas[static_cast<std::size_t>(top + r) * canvas_width + (left + c)] = v;
        }
    }
}

}  // namespace

void ExperimentConfig::apply_full_scale() {
    n_environments = 10;
    saccades_per_env = 100000;
    search_trials = 1000;
}

std::string ExperimentConfig::to_json() const { return config_to_json(*this).dump(2); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    return config_from_json(json::parse(text));
}

void ExperimentConfig::save(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write config: " + path.string());
    }
    out << to_json() << "\n";
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
    return to_json() == other.to_json();
}

ArtifactPaths artifact_paths(const ExperimentConfig& config) {
    return ArtifactPaths{fs::path(config.out_dir)};
}

std::vector<Environment> load_environments(const fs::path& envs_dir) {
    std::vector<fs::path> sidecars;
    for (const auto& entry : fs::directory_iterator(envs_dir)) {
        if (entry.path().extension() == ".json") sidecars.push_back(entry.path());
    }
    std::sort(sidecars.begin(), sidecars.end());
    if (sidecars.empty()) {
        throw std::runtime_error("no environment sidecars in " + envs_dir.string());
    }
    std::vector<Environment> envs;
    envs.reserve(sidecars.size());
    for (const auto& path : sidecars) {
        envs.push_back(Environment::load(path));
    }
    return envs;
}

std::vector<Environment> make_search_pool(const ExperimentConfig& config) {
    // Fresh worlds, same generator parameters as training.
    std::vector<Environment> pool;
    pool.reserve(config.search_pool);
    for (int k = 0; k < config.search_pool; ++k) {
        const auto seed = derive_seed(config.master_seed, "search/env" + std::to_string(k));
        if (config.kind == WorldKind::squares) {
            pool.push_back(Environment::squares(seed, config.environment));
        } else {
            pool.push_back(Environment::noise(seed, config.environment.width,
                                              config.environment.height));
        }
    }
    return pool;
}

StageRecord stage_gen_envs(const ExperimentConfig& config) {
    const auto paths = artifact_paths(config);
    StageTimer timer("gen-env", derive_seed(config.master_seed, "env"));
    fs::create_directories(paths.envs_dir());
    for (int k = 0; k < config.n_environments; ++k) {
        const auto env = make_train_env(config, k);
        const auto stem = paths.envs_dir() / ("train_" + pad3(k));
        env.save(stem);
        timer.add_output(paths, fs::path(stem.string() + ".json"));
        timer.add_output(paths, fs::path(stem.string() + ".pgm"));
    }
    return timer.finish();
}

StageRecord stage_learn_codebook(const ExperimentConfig& config) {
    const auto paths = artifact_paths(config);
    const auto sample_seed = derive_seed(config.master_seed, "codebook/samples");
    StageTimer timer("learn-codebook", sample_seed);

    const auto geometry = RetinaGeometry::build(config.geometry);
    const auto envs = load_environments(paths.envs_dir());
    const auto bank = EncoderBank::init(
        config.encoder_seed.value_or(derive_seed(config.master_seed, "encoders")), geometry);
    bank.save(paths.encoders());
    timer.add_output(paths, paths.encoders());

    const auto samples =
        collect_samples(envs, bank, geometry, config.samples_per_field, sample_seed);
    const auto codebook = PrototypeCodebook::fit(
        samples, geometry, bank, derive_seed(config.master_seed, "codebook/kmeans"),
        config.workers);
    codebook.save(paths.codebook());
    timer.add_output(paths, paths.codebook());
    return timer.finish();
}

StageRecord stage_explore(const ExperimentConfig& config) {
    const auto paths = artifact_paths(config);
    const auto seed = derive_seed(config.master_seed, "explore");
    StageTimer timer("explore", seed);

    const auto geometry = RetinaGeometry::build(config.geometry);
    const auto envs = load_environments(paths.envs_dir());
    const auto bank = EncoderBank::load(paths.encoders());
    const auto codebook = PrototypeCodebook::load(paths.codebook());
    if (bank.geometry_hash() != geometry.content_hash()) {
        throw std::runtime_error("encoder bank was built for a different geometry");
    }
    if (codebook.bank_hash() != bank.content_hash() ||
        codebook.geometry_hash() != geometry.content_hash()) {
        throw std::runtime_error("codebook does not match the encoder bank or geometry");
    }

    ModelMeta meta;
    meta.geometry_hash = geometry.content_hash();
    meta.bank_hash = bank.content_hash();
    meta.codebook_hash = codebook.content_hash();
    meta.master_seed = config.master_seed;

    ExploreBudget budget{config.saccades_per_env, config.shards_per_env};
    const auto model =
        explore_many(envs, bank, codebook, geometry, budget, seed, config.workers, meta);
    model.save(paths.model());
    timer.add_output(paths, paths.model());
    return timer.finish();
}

StageRecord stage_analyze_mi(const ExperimentConfig& config) {
    const auto paths = artifact_paths(config);
    StageTimer timer("analyze-mi", 0);
    const auto model = PredictiveModel::load(paths.model());
    const auto tensor = mi_tensor(model);
    tensor.save_csv(paths.mi_csv());
    timer.add_output(paths, paths.mi_csv());
    tensor.save_heatmaps(paths.heatmaps_dir());
    for (int q = 0; q < tensor.motor_count(); ++q) {
        timer.add_output(paths, paths.heatmaps_dir() / ("mi_q" + std::to_string(q) + ".pgm"));
    }
    return timer.finish();
}

StageRecord stage_search(const ExperimentConfig& config) {
    const auto paths = artifact_paths(config);
    const auto seed = derive_seed(config.master_seed, "search");
    StageTimer timer("search", seed);

    const auto geometry = RetinaGeometry::build(config.geometry);
    const auto bank = EncoderBank::load(paths.encoders());
    const auto codebook = PrototypeCodebook::load(paths.codebook());
    const auto model = PredictiveModel::load(paths.model());
    const auto tensor = mi_tensor(model);
    const auto pool = make_search_pool(config);

    const auto report = run_search(pool, model, tensor, codebook, bank, geometry,
                                   config.search_trials, seed);
    report.save_csv(paths.search_csv());
    timer.add_output(paths, paths.search_csv());
    return timer.finish();
}

StageRecord stage_report(const ExperimentConfig& config) {
    const auto paths = artifact_paths(config);
    const auto seed = derive_seed(config.master_seed, "report/gallery");
    StageTimer timer("report", seed);

    const auto geometry = RetinaGeometry::build(config.geometry);
    const auto bank = EncoderBank::load(paths.encoders());
    const auto codebook = PrototypeCodebook::load(paths.codebook());
    const auto model = PredictiveModel::load(paths.model());
    require_consistent(model, geometry.content_hash(), bank.content_hash(),
                       codebook.content_hash());
    const auto tensor = mi_tensor(model);

    fs::create_directories(paths.report_dir());

    Rng rng(seed);
    std::vector<std::pair<int, int>> samples;
    samples.reserve(config.gallery_samples);
    for (int s = 0; s < config.gallery_samples; ++s) {
        const int a = static_cast<int>(rng.uniform_below(geometry.field_count()));
        const int i = static_cast<int>(rng.uniform_below(codebook.n_states(a)));
        samples.emplace_back(a, i);
    }
    const auto gallery =
        render_association_gallery(model, tensor, codebook, bank, geometry, samples,
                                   config.gallery_top_k, config.gallery_scale,
                                   paths.report_dir());
    timer.add_output(paths, paths.report_dir() / "gallery.csv");
    for (const auto& image : gallery.images) {
        timer.add_output(paths, image);
    }

    const auto structure = structure_stats(tensor, geometry);
    const auto asymmetry = asymmetry_stats(tensor, geometry);
    const auto summary_path = paths.report_dir() / "summary.txt";
    {
        std::ofstream out(summary_path);
        out.precision(6);
        out << "world kind:            " << to_string(config.kind) << "\n"
            << "total saccades:        " << model.meta().total_saccades << "\n"
            << "argmax agreement:      " << structure.argmax_correct << "/"
            << structure.coupled_cases << " (" << structure.argmax_agreement() << ")\n"
            << "mean coupled MI:       " << structure.mean_coupled_mi << "\n"
            << "mean uncoupled MI:     " << structure.mean_uncoupled_mi << "\n"
            << "H(fine|coarse) mean:   " << asymmetry.mean_h_fine_given_coarse << " bits\n"
            << "H(coarse|fine) mean:   " << asymmetry.mean_h_coarse_given_fine << " bits\n";
    }
    timer.add_output(paths, summary_path);
    return timer.finish();
}

void Manifest::compute_chain_hash() {
    std::uint64_t h = kFnvOffset;
    for (const auto& stage : stages) {
        h = fnv1a64(stage.name, h);
        for (const auto& output : stage.outputs) {
            h = fnv1a64(output.path, h);
            h = fnv1a64(output.hash, h);
        }
    }
    chain_hash = hex64(h);
}

void Manifest::save(const fs::path& path, const ExperimentConfig& config) const {
    json j;
    j["config"] = json::parse(config.to_json());
    j["chain_hash"] = chain_hash;
    j["stages"] = json::array();
    for (const auto& stage : stages) {
        json s;
        s["name"] = stage.name;
        s["seed"] = hex64(stage.seed);
        s["duration_ms"] = stage.duration_ms;
        s["outputs"] = json::array();
        for (const auto& output : stage.outputs) {
            s["outputs"].push_back({{"path", output.path}, {"hash", output.hash}});
        }
        j["stages"].push_back(std::move(s));
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write manifest: " + path.string());
    }
    out << j.dump(2) << "\n";
}

Manifest run_pipeline(const ExperimentConfig& config) {
    const auto paths = artifact_paths(config);
    fs::create_directories(paths.out_dir);
    config.save(paths.config());

    using StageFn = StageRecord (*)(const ExperimentConfig&);
    const std::pair<const char*, StageFn> stages[] = {
        {"gen-env", stage_gen_envs},       {"learn-codebook", stage_learn_codebook},
        {"explore", stage_explore},        {"analyze-mi", stage_analyze_mi},
        {"search", stage_search},          {"report", stage_report},
    };

    Manifest manifest;
    for (const auto& [name, fn] : stages) {
        try {
            manifest.stages.push_back(fn(config));
        } catch (const std::exception& e) {
            throw std::runtime_error("stage " + std::string(name) + ": " + e.what());
        }
    }
    manifest.compute_chain_hash();
    manifest.save(paths.manifest(), config);
    return manifest;
}

GalleryResult render_association_gallery(const PredictiveModel& model, const MiTensor& mi,
                                         const PrototypeCodebook& codebook,
                                         const EncoderBank& bank,
                                         const RetinaGeometry& geometry,
                                         std::span<const std::pair<int, int>> samples,
                                         int top_k, int scale,
                                         const fs::path& out_dir) {
    if (top_k < 1 || scale < 1) {
        throw std::invalid_argument("gallery: top_k and scale must be positive");
    }
    fs::create_directories(out_dir);
    GalleryResult result;

    const int window = geometry.rf_window_px();
    const int cell = window * scale;      // one decoded feature footprint
    const int slot = cell * top_k;        // k features side by side
    const int gap = scale;
    const int canvas_w = 3 * slot + 2 * gap;
    const int canvas_h = 3 * cell + 2 * gap;

    std::ofstream csv(out_dir / "gallery.csv");
    if (!csv) {
        throw std::runtime_error("cannot write gallery csv");
    }
    csv << "a,i,q,b,rank,j,prob\n";
    csv.precision(17);

    for (const auto& [a, i] : samples) {
        std::vector<double> canvas(static_cast<std::size_t>(canvas_w) * canvas_h, 0.0);
        const auto& pre_field = geometry.field(a);
        const auto pre_feature = decode(bank, a, codebook.centroid(a, i));
        blit_feature(pre_feature, pre_field.resolution_px, pre_field.stride, scale, canvas,
                     canvas_w, cell + gap, slot + gap);

        for (int q = 0; q < geometry.motor_count(); ++q) {
            // Partner selection is the agent's: the field with the highest
            // MI for this saccade, not the geometric oracle.
            int best_b = 0;
            double best_mi = -1.0;
            for (int b = 0; b < geometry.field_count(); ++b) {
                if (mi.mi(a, b, q) > best_mi) {
                    best_mi = mi.mi(a, b, q);
                    best_b = b;
                }
            }
            const auto row = model.conditional_row(a, best_b, q, i);

            // Feature under a lands at the grid offset opposite the shift.
            const auto& motor = geometry.motor(q);
            const int cell_row = 1 - motor.d_row;
            const int cell_col = 1 - motor.d_col;
            const auto& post_field = geometry.field(best_b);

            std::vector<int> order(row.probs.size());
            for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
            std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
                return row.probs[x] > row.probs[y];
            });
            const int k_shown = std::min<int>(top_k, static_cast<int>(order.size()));
            for (int rank = 0; rank < k_shown; ++rank) {
                const int j = order[rank];
                const auto feature = decode(bank, best_b, codebook.centroid(best_b, j));
                blit_feature(feature, post_field.resolution_px, post_field.stride, scale,
                             canvas, canvas_w, cell_row * (cell + gap),
                             cell_col * (slot + gap) + rank * cell);
                result.entries.push_back(GalleryEntry{a, i, q, best_b, rank, j, row.probs[j]});
                csv << a << ',' << i << ',' << q << ',' << best_b << ',' << rank << ',' << j
                    << ',' << row.probs[j] << '\n';
            }
        }

        const auto image_path =
            out_dir / ("gallery_a" + std::to_string(a) + "_i" + std::to_string(i) + ".pgm");
        write_pgm(image_path, canvas, canvas_w, canvas_h);
        result.images.push_back(image_path);
    }
    return result;
}

}  // namespace retina
