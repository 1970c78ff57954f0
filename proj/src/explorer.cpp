#include "retina/explorer.hpp"

#include <stdexcept>

namespace retina {

namespace {

struct Shard {
    int env_index = 0;
    std::int64_t n_saccades = 0;
    std::uint64_t seed = 0;
};

std::vector<Shard> make_shards(std::size_t n_envs, const ExploreBudget& budget,
                               std::uint64_t seed) {
    std::vector<Shard> shards;
    shards.reserve(n_envs * budget.shards_per_env);
    for (std::size_t e = 0; e < n_envs; ++e) {
        const std::int64_t per = budget.saccades_per_env / budget.shards_per_env;
        const std::int64_t extra = budget.saccades_per_env % budget.shards_per_env;
        for (int s = 0; s < budget.shards_per_env; ++s) {
            Shard shard;
            shard.env_index = static_cast<int>(e);
            shard.n_saccades = per + (s < extra ? 1 : 0);
            shard.seed = derive_seed(seed, "explore/env" + std::to_string(e) + "/shard" +
                                               std::to_string(s));
            if (shard.n_saccades > 0) shards.push_back(shard);
        }
    }
    return shards;
}

}  // namespace

PredictiveModel explore_many(const std::vector<Environment>& envs,
                             const EncoderBank& bank, const PrototypeCodebook& codebook,
                             const RetinaGeometry& geometry, const ExploreBudget& budget,
                             std::uint64_t seed, int workers, ModelMeta meta) {
    if (envs.empty()) {
        throw std::invalid_argument("explore_many: need at least one environment");
    }
    if (budget.shards_per_env < 1 || budget.saccades_per_env < 0) {
        throw std::invalid_argument("explore_many: invalid budget");
    }

    meta.total_saccades = static_cast<std::uint64_t>(budget.saccades_per_env) * envs.size();
    meta.n_environments = static_cast<std::uint32_t>(envs.size());
    PredictiveModel merged(ModelShape::of(geometry), meta);

    const auto shards = make_shards(envs.size(), budget, seed);
    const auto run_shard = [&](const Shard& shard, PredictiveModel& into) {
        explore(envs[shard.env_index], bank, codebook, geometry, shard.n_saccades,
                shard.seed, ModelSink{&into});
    };

    if (workers <= 1) {
        for (const auto& shard : shards) run_shard(shard, merged);
        return merged;
    }

    std::atomic<std::size_t> next{0};
    std::vector<PredictiveModel> partials;
    partials.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        partials.emplace_back(ModelShape::of(geometry));
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t s = next.fetch_add(1); s < shards.size(); s = next.fetch_add(1)) {
                run_shard(shards[s], partials[w]);
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& partial : partials) {
        partial.meta().total_saccades = 0;  // budget already recorded on merged
        merged.merge(partial);
    }
    return merged;
}

}  // namespace retina
