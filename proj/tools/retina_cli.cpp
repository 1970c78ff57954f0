#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "retina/explorer.hpp"
#include "retina/io.hpp"
#include "retina/pipeline.hpp"

namespace fs = std::filesystem;
using namespace retina;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (json)");
    cmd->add_option("--seed", opts.seed, "master seed override");
    cmd->add_option("--out-dir", opts.out_dir, "output directory override");
    cmd->add_option("--workers", opts.workers, "worker thread count override");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig config;
    if (!opts.config_path.empty()) {
        config = ExperimentConfig::load(opts.config_path);
    }
    if (const char* env_dir = std::getenv("RETINA_OUT_DIR")) {
        config.out_dir = env_dir;
    }
    if (opts.seed) config.master_seed = *opts.seed;
    if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
    if (opts.workers) config.workers = *opts.workers;
    return config;
}

fs::path or_default(const std::string& flag, const fs::path& fallback) {
    return flag.empty() ? fallback : fs::path(flag);
}

void ensure_parent(const fs::path& file) {
    const auto parent = file.parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void print_stage(const StageRecord& record) {
    std::cout << "[" << record.name << "] done in " << record.duration_ms << " ms";
    if (!record.outputs.empty()) {
        std::cout << ", outputs:";
        for (const auto& out : record.outputs) std::cout << " " << out.path;
    }
    std::cout << "\n";
}

int cmd_estimate(const std::string& model_path, const std::string& out_path) {
    const auto model = PredictiveModel::load(model_path);
    std::uint64_t nonzero = 0;
    std::uint64_t cells = 0;
    for (int q = 0; q < model.motor_count(); ++q) {
        for (int a = 0; a < model.field_count(); ++a) {
            for (int b = 0; b < model.field_count(); ++b) {
                for (std::uint64_t c : model.block(a, b, q)) {
                    ++cells;
                    if (c > 0) ++nonzero;
                }
            }
        }
    }
    std::cout << "fields:         " << model.field_count() << "\n"
              << "motors:         " << model.motor_count() << "\n"
              << "blocks:         "
              << static_cast<std::size_t>(model.field_count()) * model.field_count() *
                     model.motor_count()
              << "\n"
              << "cells:          " << cells << "\n"
              << "nonzero cells:  " << nonzero << "\n"
              << "total records:  " << model.total_count() << "\n"
              << "total saccades: " << model.meta().total_saccades << "\n"
              << "environments:   " << model.meta().n_environments << "\n"
              << "content hash:   " << hex64(model.content_hash()) << "\n";
    if (!out_path.empty()) {
        ensure_parent(out_path);
        model.save(out_path);
        std::cout << "written:        " << out_path << "\n";
    }
    return 0;
}

int cmd_inspect_block(const std::string& model_path, int a, int b, int q,
                      const std::string& out_path) {
    const auto model = PredictiveModel::load(model_path);
    if (a < 0 || a >= model.field_count() || b < 0 || b >= model.field_count() || q < 0 ||
        q >= model.motor_count()) {
        throw std::runtime_error("block index out of range");
    }
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot write " + out_path);
        out = &file;
    }
    out->precision(17);
    for (int i = 0; i < model.n_states(a); ++i) {
        const auto row = model.conditional_row(a, b, q, i);
        for (int j = 0; j < model.n_states(b); ++j) {
            if (j > 0) *out << ',';
            *out << row.probs[j];
        }
        *out << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"foveated sensorimotor agent: learn a saccadic predictive model,"
                 " recover the sensor structure, and run visual search"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* run_all = app.add_subcommand("run-all", "run the whole pipeline from a config");
    add_common(run_all, common);
    bool full_scale = false;
    bool noise_world = false;
    run_all->add_flag("--full-scale", full_scale,
                      "10 environments, 1e5 saccades each, 1e3 search trials");
    run_all->add_flag("--noise", noise_world, "white-noise environments (ablation)");

    auto* gen_env = app.add_subcommand("gen-env", "generate training environments");
    add_common(gen_env, common);

    auto* learn = app.add_subcommand("learn-codebook",
                                     "collect sensory samples and fit per-field prototypes");
    add_common(learn, common);
    std::string envs_dir, codebook_path, encoders_path, model_path, report_path, out_file;
    std::optional<int> samples_override;
    std::optional<std::uint64_t> encoder_seed;
    learn->add_option("--envs", envs_dir, "environment directory");
    learn->add_option("--samples", samples_override, "samples per receptive field");
    learn->add_option("--encoder-seed", encoder_seed, "explicit encoder bank seed");
    learn->add_option("--encoders-out", encoders_path, "encoder bank output file");
    learn->add_option("--out", out_file, "codebook output file");

    auto* explore_cmd = app.add_subcommand("explore", "random saccadic exploration");
    add_common(explore_cmd, common);
    std::optional<std::int64_t> saccades_override;
    explore_cmd->add_option("--envs", envs_dir, "environment directory");
    explore_cmd->add_option("--codebook", codebook_path, "codebook file");
    explore_cmd->add_option("--encoders", encoders_path, "encoder bank file");
    explore_cmd->add_option("--saccades", saccades_override, "saccades per environment");
    explore_cmd->add_option("--out", out_file, "output count-store file");

    auto* estimate = app.add_subcommand("estimate",
                                        "validate and summarize a count store");
    std::string estimate_out;
    estimate->add_option("--model", model_path, "model file")->required();
    estimate->add_option("--out", estimate_out, "re-save the finalized model here");

    auto* analyze = app.add_subcommand("analyze-mi", "mutual information per block");
    add_common(analyze, common);
    std::string heatmap_dir;
    bool entropy_dump = false;
    analyze->add_option("--model", model_path, "model file");
    analyze->add_option("--out", out_file, "output csv path");
    analyze->add_option("--heatmap", heatmap_dir, "write one mi image per saccade here");
    analyze->add_flag("--entropy-dump", entropy_dump, "add h_post and h_cond columns");

    auto* inspect = app.add_subcommand("inspect-block",
                                       "dump one (a,b,q) block as conditional rows");
    int block_a = 0, block_b = 0, block_q = 0;
    inspect->add_option("--model", model_path, "model file")->required();
    inspect->add_option("--a", block_a, "pre-saccadic field")->required();
    inspect->add_option("--b", block_b, "post-saccadic field")->required();
    inspect->add_option("--q", block_q, "motor command")->required();
    inspect->add_option("--out", out_file, "write csv here instead of stdout");

    auto* search_cmd = app.add_subcommand("search", "foveating visual-search evaluation");
    add_common(search_cmd, common);
    std::optional<int> trials_override;
    search_cmd->add_option("--model", model_path, "model file");
    search_cmd->add_option("--codebook", codebook_path, "codebook file");
    search_cmd->add_option("--encoders", encoders_path, "encoder bank file");
    search_cmd->add_option("--trials", trials_override, "number of trials");
    search_cmd->add_option("--report", report_path, "per-trial csv path");

    auto* report = app.add_subcommand("report", "gallery, heatmap summary, structure stats");
    add_common(report, common);
    std::optional<int> top_k;
    report->add_option("--top-k", top_k, "predicted prototypes per saccade in the gallery");

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        ExperimentConfig config = resolve_config(common);
        const auto paths = artifact_paths(config);

        if (run_all->parsed()) {
            if (full_scale) config.apply_full_scale();
            if (noise_world) config.kind = WorldKind::noise;
            const auto manifest = run_pipeline(config);
            for (const auto& stage : manifest.stages) print_stage(stage);
            std::cout << "chain hash: " << manifest.chain_hash << "\n"
                      << "manifest:   " << paths.manifest().string() << "\n";
            return 0;
        }
        if (gen_env->parsed()) {
            fs::create_directories(paths.out_dir);
            print_stage(stage_gen_envs(config));
            return 0;
        }
        if (learn->parsed()) {
            if (samples_override) config.samples_per_field = *samples_override;
            const auto geometry = RetinaGeometry::build(config.geometry);
            const auto envs =
                load_environments(or_default(envs_dir, paths.envs_dir()));
            const auto bank = EncoderBank::init(
                encoder_seed.value_or(
                    config.encoder_seed.value_or(derive_seed(config.master_seed, "encoders"))),
                geometry);
            const fs::path bank_out = or_default(encoders_path, paths.encoders());
            ensure_parent(bank_out);
            bank.save(bank_out);
            const auto samples =
                collect_samples(envs, bank, geometry, config.samples_per_field,
                                derive_seed(config.master_seed, "codebook/samples"));
            const auto codebook = PrototypeCodebook::fit(
                samples, geometry, bank, derive_seed(config.master_seed, "codebook/kmeans"),
                config.workers);
            const fs::path cb_out = or_default(out_file, paths.codebook());
            ensure_parent(cb_out);
            codebook.save(cb_out);
            std::cout << "[learn-codebook] wrote " << bank_out.string() << " and "
                      << cb_out.string() << "\n";
            return 0;
        }
        if (explore_cmd->parsed()) {
            if (saccades_override) config.saccades_per_env = *saccades_override;
            const auto geometry = RetinaGeometry::build(config.geometry);
            const auto envs =
                load_environments(or_default(envs_dir, paths.envs_dir()));
            const auto bank = EncoderBank::load(or_default(encoders_path, paths.encoders()));
            const auto codebook =
                PrototypeCodebook::load(or_default(codebook_path, paths.codebook()));
            if (codebook.bank_hash() != bank.content_hash()) {
                throw std::runtime_error("codebook does not match the encoder bank");
            }
            ModelMeta meta;
            meta.geometry_hash = geometry.content_hash();
            meta.bank_hash = bank.content_hash();
            meta.codebook_hash = codebook.content_hash();
            meta.master_seed = config.master_seed;
            const auto model = explore_many(
                envs, bank, codebook, geometry,
                ExploreBudget{config.saccades_per_env, config.shards_per_env},
                derive_seed(config.master_seed, "explore"), config.workers, meta);
            const fs::path out = or_default(out_file, paths.model());
            ensure_parent(out);
            model.save(out);
            std::cout << "[explore] " << model.total_count() << " records -> " << out.string()
                      << "\n";
            return 0;
        }
        if (estimate->parsed()) {
            return cmd_estimate(model_path, estimate_out);
        }
        if (analyze->parsed()) {
            const auto model =
                PredictiveModel::load(or_default(model_path, paths.model()));
            const auto tensor = mi_tensor(model);
            const fs::path out = or_default(out_file, paths.mi_csv());
            ensure_parent(out);
            tensor.save_csv(out, entropy_dump);
            std::cout << "[analyze-mi] wrote " << out.string() << "\n";
            if (!heatmap_dir.empty()) {
                tensor.save_heatmaps(heatmap_dir);
                std::cout << "[analyze-mi] heatmaps in " << heatmap_dir << "\n";
            }
            return 0;
        }
        if (inspect->parsed()) {
            return cmd_inspect_block(model_path, block_a, block_b, block_q, out_file);
        }
        if (search_cmd->parsed()) {
            if (trials_override) config.search_trials = *trials_override;
            const auto geometry = RetinaGeometry::build(config.geometry);
            const auto bank = EncoderBank::load(or_default(encoders_path, paths.encoders()));
            const auto codebook =
                PrototypeCodebook::load(or_default(codebook_path, paths.codebook()));
            const auto model =
                PredictiveModel::load(or_default(model_path, paths.model()));
            const auto tensor = mi_tensor(model);
            const auto pool = make_search_pool(config);
            const auto result =
                run_search(pool, model, tensor, codebook, bank, geometry,
                           config.search_trials, derive_seed(config.master_seed, "search"));
            const fs::path out = or_default(report_path, paths.search_csv());
            ensure_parent(out);
            result.save_csv(out);
            std::cout << "[search] success rate " << result.success_rate << " over "
                      << result.trials.size() << " trials -> " << out.string() << "\n";
            return 0;
        }
        if (report->parsed()) {
            if (top_k) config.gallery_top_k = *top_k;
            print_stage(stage_report(config));
            return 0;
        }
        throw std::runtime_error("no subcommand");
    } catch (const std::exception& e) {
        std::cerr << "[" << sub << "] error: " << e.what() << "\n";
        return 1;
    }
}
