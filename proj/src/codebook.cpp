#include "retina/codebook.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "retina/io.hpp"
#include "retina/rng.hpp"

namespace retina {

namespace {

constexpr std::uint32_t kMagic = 0x4b424352;  // "RCBK"
constexpr std::uint32_t kVersion = 1;

double sq_dist(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        acc += d * d;
    }
    return acc;
}

// Nearest centroid with early abandonment. The partial-sum cutoff only skips
// candidates that cannot win, so the result equals the full scan, including
// the lowest-index tie-break.
int nearest_centroid(std::span<const double> x, const FieldSamples& centroids,
                     double* best_dist_out = nullptr) {
    const int dim = centroids.dim;
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < centroids.count; ++i) {
        const double* c = centroids.data.data() + static_cast<std::size_t>(i) * dim;
        double acc = 0.0;
        int k = 0;
        for (; k + 4 <= dim; k += 4) {
            const double d0 = x[k] - c[k];
            const double d1 = x[k + 1] - c[k + 1];
            const double d2 = x[k + 2] - c[k + 2];
            const double d3 = x[k + 3] - c[k + 3];
            acc += d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
            if (acc >= best_dist) break;
        }
        if (acc < best_dist) {
            for (; k < dim; ++k) {
                const double d = x[k] - c[k];
                acc += d * d;
            }
        }
        if (acc < best_dist) {
            best_dist = acc;
            best = i;
        }
    }
    if (best_dist_out != nullptr) *best_dist_out = best_dist;
    return best;
}

}  // namespace

std::vector<FieldSamples> collect_samples(const std::vector<Environment>& envs,
                                          const EncoderBank& bank,
                                          const RetinaGeometry& geometry,
                                          int n_per_field, std::uint64_t seed) {
    if (envs.empty()) {
        throw std::invalid_argument("collect_samples: need at least one environment");
    }
    int max_states = 0;
    for (const auto& f : geometry.fields()) max_states = std::max(max_states, f.n_states);
    if (n_per_field < max_states) {
        throw std::invalid_argument("collect_samples: n_per_field below the largest N^a");
    }

    std::vector<FieldSamples> out(geometry.field_count());
    for (int a = 0; a < geometry.field_count(); ++a) {
        out[a].dim = geometry.field(a).pixel_count;
        out[a].count = n_per_field;
        out[a].data.resize(static_cast<std::size_t>(n_per_field) * out[a].dim);
    }

    Rng rng(seed);
    std::vector<double> patch(static_cast<std::size_t>(geometry.rf_window_px()) *
                              geometry.rf_window_px());
    for (int s = 0; s < n_per_field; ++s) {
        const auto& env = envs[rng.uniform_below(envs.size())];
        const AgentPose pose = random_pose(rng, env, geometry.rf_window_px());
        for (int a = 0; a < geometry.field_count(); ++a) {
            read_patch(env, geometry, pose, a, patch);
            auto& fs = out[a];
            encode(bank, a, patch,
                   {fs.data.data() + static_cast<std::size_t>(s) * fs.dim,
                    static_cast<std::size_t>(fs.dim)});
        }
    }
    return out;
}

KMeansResult fit_kmeans(const FieldSamples& samples, int k, std::uint64_t seed,
                        int max_iterations) {
    const int n = samples.count;
    const int dim = samples.dim;
    if (k < 1 || n < k) {
        throw std::invalid_argument("fit_kmeans: need at least k samples");
    }

    const auto equal_rows = [&](std::span<const double> x, std::span<const double> y) {
        return std::equal(x.begin(), x.end(), y.begin());
    };

    FieldSamples centroids;
    centroids.dim = dim;
    centroids.count = k;
    centroids.data.reserve(static_cast<std::size_t>(k) * dim);

    // Seeded-uniform draws, keeping only samples distinct from those already
    // chosen; falls back to a deterministic scan before declaring the input
    // degenerate.
    Rng rng(seed);
    int chosen = 0;
    const auto try_add = [&](int idx) {
        auto row = samples.row(idx);
        for (int c = 0; c < chosen; ++c) {
            if (equal_rows(centroids.row(c), row)) return false;
        }
        centroids.data.insert(centroids.data.end(), row.begin(), row.end());
        ++chosen;
        return true;
    };
    for (std::int64_t attempt = 0; chosen < k && attempt < 16LL * n; ++attempt) {
        try_add(static_cast<int>(rng.uniform_below(n)));
    }
    for (int idx = 0; chosen < k && idx < n; ++idx) {
        try_add(idx);
    }
    if (chosen < k) {
        throw std::runtime_error("fit_kmeans: fewer than k distinct samples");
    }

    KMeansResult result;
    std::vector<int> assignment(n, -1);
    std::vector<int> previous(n, -2);
    std::vector<double> dist(n, 0.0);
    std::vector<std::int64_t> cluster_size(k, 0);

    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (int s = 0; s < n; ++s) {
            assignment[s] = nearest_centroid(samples.row(s), centroids, &dist[s]);
            inertia += dist[s];
            if (assignment[s] != previous[s]) changed = true;
        }
        result.inertia_history.push_back(inertia);
        result.iterations = iter + 1;
        if (!changed) break;
        previous = assignment;

        std::fill(centroids.data.begin(), centroids.data.end(), 0.0);
        std::fill(cluster_size.begin(), cluster_size.end(), 0);
        for (int s = 0; s < n; ++s) {
            const int c = assignment[s];
            ++cluster_size[c];
            double* acc = centroids.data.data() + static_cast<std::size_t>(c) * dim;
            auto row = samples.row(s);
            for (int d = 0; d < dim; ++d) acc[d] += row[d];
        }
        for (int c = 0; c < k; ++c) {
            if (cluster_size[c] == 0) continue;
            double* mean = centroids.data.data() + static_cast<std::size_t>(c) * dim;
            const double inv = 1.0 / static_cast<double>(cluster_size[c]);
            for (int d = 0; d < dim; ++d) mean[d] *= inv;
        }

        // Reseed each empty cluster to the sample farthest from its own
        // centroid, then retire that sample's distance so successive empty
        // clusters pick different points.
        for (int c = 0; c < k; ++c) {
            if (cluster_size[c] != 0) continue;
            int farthest = -1;
            double farthest_dist = -1.0;
            for (int s = 0; s < n; ++s) {
                if (dist[s] > farthest_dist) {
                    farthest_dist = dist[s];
                    farthest = s;
                }
            }
            auto row = samples.row(farthest);
            std::copy(row.begin(), row.end(),
                      centroids.data.begin() + static_cast<std::size_t>(c) * dim);
            cluster_size[c] = 1;
            dist[farthest] = -1.0;
        }
    }

    result.centroids = std::move(centroids.data);
    return result;
}

PrototypeCodebook PrototypeCodebook::fit(const std::vector<FieldSamples>& samples,
                                         const RetinaGeometry& geometry,
                                         const EncoderBank& bank, std::uint64_t seed,
                                         int workers) {
    if (static_cast<int>(samples.size()) != geometry.field_count()) {
        throw std::invalid_argument("sample set does not match the geometry");
    }
    PrototypeCodebook cb;
    cb.seed_ = seed;
    cb.sample_count_ = samples.empty() ? 0 : static_cast<std::uint64_t>(samples[0].count);
    cb.geometry_hash_ = geometry.content_hash();
    cb.bank_hash_ = bank.content_hash();
    cb.fields_.resize(geometry.field_count());

    // Fields are independent problems with per-field derived seeds, so the
    // result does not depend on the worker count.
    const auto fit_field = [&](int a) {
        const int k = geometry.field(a).n_states;
        auto res = fit_kmeans(samples[a], k, derive_seed(seed, "kmeans/field" + std::to_string(a)));
        cb.fields_[a].dim = samples[a].dim;
        cb.fields_[a].count = k;
        cb.fields_[a].data = std::move(res.centroids);
    };

    if (workers <= 1) {
        for (int a = 0; a < geometry.field_count(); ++a) fit_field(a);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int a = next.fetch_add(1); a < geometry.field_count();
                     a = next.fetch_add(1)) {
                    fit_field(a);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return cb;
}

PrototypeCodebook PrototypeCodebook::from_centroids(std::vector<FieldSamples> centroids) {
    PrototypeCodebook cb;
    cb.fields_ = std::move(centroids);
    return cb;
}

int PrototypeCodebook::quantize(int a, std::span<const double> sensory) const {
    return nearest_centroid(sensory, fields_[a]);
}

std::vector<std::uint8_t> PrototypeCodebook::serialize() const {
    ByteWriter w;
    w.put_u32(kMagic);
    w.put_u32(kVersion);
    w.put_u64(seed_);
    w.put_u64(sample_count_);
    w.put_u64(geometry_hash_);
    w.put_u64(bank_hash_);
    w.put_u32(static_cast<std::uint32_t>(fields_.size()));
    for (const auto& f : fields_) {
        w.put_u32(static_cast<std::uint32_t>(f.count));
        w.put_u32(static_cast<std::uint32_t>(f.dim));
        for (double v : f.data) w.put_f64(v);
    }
    return w.bytes();
}

PrototypeCodebook PrototypeCodebook::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.get_u32() != kMagic) {
        throw std::runtime_error("not a codebook file");
    }
    if (r.get_u32() != kVersion) {
        throw std::runtime_error("unsupported codebook version");
    }
    PrototypeCodebook cb;
    cb.seed_ = r.get_u64();
    cb.sample_count_ = r.get_u64();
    cb.geometry_hash_ = r.get_u64();
    cb.bank_hash_ = r.get_u64();
    cb.fields_.resize(r.get_u32());
    for (auto& f : cb.fields_) {
        f.count = static_cast<int>(r.get_u32());
        f.dim = static_cast<int>(r.get_u32());
        f.data.resize(static_cast<std::size_t>(f.count) * f.dim);
        for (auto& v : f.data) v = r.get_f64();
    }
    return cb;
}

std::uint64_t PrototypeCodebook::content_hash() const {
    const auto bytes = serialize();
    return fnv1a64(bytes.data(), bytes.size());
}

void PrototypeCodebook::save(const std::filesystem::path& path) const {
    write_file(path, serialize());
}

PrototypeCodebook PrototypeCodebook::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

bool PrototypeCodebook::operator==(const PrototypeCodebook& other) const {
    return serialize() == other.serialize();
}

}  // namespace retina
