#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "retina/codebook.hpp"
#include "retina/encoding.hpp"
#include "retina/environment.hpp"
#include "retina/geometry.hpp"
#include "retina/information.hpp"
#include "retina/model.hpp"
#include "retina/search.hpp"

namespace retina {

// Every stage seed is derived from master_seed and the stage name, so a
// config fully determines every artifact byte.
struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    std::string out_dir = "run";
    int workers = 1;
    // Explicit encoder bank seed; unset means derive from master_seed.
    std::optional<std::uint64_t> encoder_seed;

    WorldKind kind = WorldKind::squares;
    SquaresParams environment;
    GeometryConfig geometry;

    int n_environments = 3;
    int samples_per_field = 25000;
    std::int64_t saccades_per_env = 20000;
    int shards_per_env = 8;

    int search_trials = 200;
    int search_pool = 8;

    int gallery_samples = 4;
    int gallery_top_k = 1;
    int gallery_scale = 4;

    // 10 environments, 1e5 saccades each, 1e3 trials.
    void apply_full_scale();

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static ExperimentConfig load(const std::filesystem::path& path);

    bool operator==(const ExperimentConfig&) const;
};

struct StageOutput {
    std::string path;  // relative to out_dir
    std::string hash;
};

struct StageRecord {
    std::string name;
    std::uint64_t seed = 0;
    std::int64_t duration_ms = 0;
    std::vector<StageOutput> outputs;
};

// Hash chain over stage names and output hashes (durations and absolute
// paths excluded), so bit-identical artifacts give bit-identical chains.
struct Manifest {
    std::vector<StageRecord> stages;
    std::string chain_hash;

    void compute_chain_hash();
    void save(const std::filesystem::path& path, const ExperimentConfig& config) const;
};

// File-based stages; each loads its inputs from out_dir, verifies artifact
// hashes, and writes its outputs there.
StageRecord stage_gen_envs(const ExperimentConfig& config);
StageRecord stage_learn_codebook(const ExperimentConfig& config);
StageRecord stage_explore(const ExperimentConfig& config);
StageRecord stage_analyze_mi(const ExperimentConfig& config);
StageRecord stage_search(const ExperimentConfig& config);
StageRecord stage_report(const ExperimentConfig& config);

// gen-env -> learn-codebook -> explore -> analyze-mi -> search -> report,
// then writes manifest.json. Aborts with the stage name on any failure.
Manifest run_pipeline(const ExperimentConfig& config);

// Paths of the artifacts a config produces.
struct ArtifactPaths {
    std::filesystem::path out_dir;
    std::filesystem::path envs_dir() const { return out_dir / "envs"; }
    std::filesystem::path encoders() const { return out_dir / "encoders.bin"; }
    std::filesystem::path codebook() const { return out_dir / "codebook.bin"; }
    std::filesystem::path model() const { return out_dir / "model.bin"; }
    std::filesystem::path mi_csv() const { return out_dir / "mi.csv"; }
    std::filesystem::path heatmaps_dir() const { return out_dir / "heatmaps"; }
    std::filesystem::path search_csv() const { return out_dir / "search.csv"; }
    std::filesystem::path report_dir() const { return out_dir / "report"; }
    std::filesystem::path manifest() const { return out_dir / "manifest.json"; }
    std::filesystem::path config() const { return out_dir / "config.json"; }
};

ArtifactPaths artifact_paths(const ExperimentConfig& config);
std::vector<Environment> load_environments(const std::filesystem::path& envs_dir);
std::vector<Environment> make_search_pool(const ExperimentConfig& config);

// Association gallery: each sample pre-state (a, i) is rendered
// as a 3x3 tile of decoded features, the pre-state centered and each
// direction cell showing the top-k predicted prototypes of the
// highest-MI partner field for that saccade.
struct GalleryEntry {
    int a = 0;
    int i = 0;
    int q = 0;
    int b = 0;
    int rank = 0;
    int j = 0;
    double prob = 0.0;
};

struct GalleryResult {
    std::vector<GalleryEntry> entries;
    std::vector<std::filesystem::path> images;
};

GalleryResult render_association_gallery(const PredictiveModel& model, const MiTensor& mi,
                                         const PrototypeCodebook& codebook,
                                         const EncoderBank& bank,
                                         const RetinaGeometry& geometry,
                                         std::span<const std::pair<int, int>> samples,
                                         int top_k, int scale,
                                         const std::filesystem::path& out_dir);

}  // namespace retina
