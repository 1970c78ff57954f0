#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "retina/information.hpp"
#include "retina/rng.hpp"

using namespace retina;

namespace {

std::vector<std::uint64_t> random_block(Rng& rng, int n_pre, int n_post) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(n_pre) * n_post);
    for (auto& c : counts) c = rng.uniform_below(21);  // zeros included
    return counts;
}

// Same normalization computed with natural logs; the ratio must not depend
// on the log base.
double mi_natural_log(std::span<const std::uint64_t> counts, int n_pre, int n_post) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) return 0.0;
    std::vector<double> p_pre(n_pre, 0.0);
    std::vector<double> p_post(n_post, 0.0);
    for (int i = 0; i < n_pre; ++i) {
        for (int j = 0; j < n_post; ++j) {
            const double p = static_cast<double>(counts[static_cast<std::size_t>(i) * n_post + j]) /
                             static_cast<double>(total);
            p_pre[i] += p;
            p_post[j] += p;
        }
    }
    double h_post = 0.0;
    for (double p : p_post) {
        if (p > 0) h_post -= p * std::log(p);
    }
    double h_cond = 0.0;
    for (int i = 0; i < n_pre; ++i) {
        if (p_pre[i] <= 0) continue;
        for (int j = 0; j < n_post; ++j) {
            const double p = static_cast<double>(counts[static_cast<std::size_t>(i) * n_post + j]) /
                             static_cast<double>(total);
            if (p > 0) h_cond -= p * std::log(p / p_pre[i]);
        }
    }
    if (h_post == 0.0) return 0.0;
    return (h_post - h_cond) / h_post;
}

PredictiveModel permute_field_labels(const PredictiveModel& model, int field,
                                     const std::vector<int>& perm) {
    PredictiveModel out(model.shape(), model.meta());
    const int f = model.field_count();
    for (int q = 0; q < model.motor_count(); ++q) {
        for (int a = 0; a < f; ++a) {
            for (int b = 0; b < f; ++b) {
                const auto src = model.block(a, b, q);
                auto dst = out.mutable_block(a, b, q);
                const int na = model.n_states(a);
                const int nb = model.n_states(b);
                for (int i = 0; i < na; ++i) {
                    const int pi = a == field ? perm[i] : i;
                    for (int j = 0; j < nb; ++j) {
                        const int pj = b == field ? perm[j] : j;
                        dst[static_cast<std::size_t>(pi) * nb + pj] =
                            src[static_cast<std::size_t>(i) * nb + j];
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("information");

TEST_CASE("entropy of simple distributions") {
    CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(2.0));
    CHECK(entropy(std::vector<double>{0.0, 1.0, 0.0}) == 0.0);
    // frozen by direct evaluation of -sum p log2 p
    CHECK(std::abs(entropy(std::vector<double>{0.75, 0.25}) - 0.8112781244591328) < 1e-12);
}

TEST_CASE("entropy rejects non-distributions") {
    CHECK_THROWS(entropy(std::vector<double>{0.5, 0.4}));
    CHECK_THROWS(entropy(std::vector<double>{1.5, -0.5}));
}

TEST_CASE("analytic blocks: bijection, independence, and the 3-1 mix") {
    // deterministic bijection: conditional entropy 0
    CHECK(normalized_mi(std::vector<std::uint64_t>{2, 0, 0, 2}, 2, 2) == doctest::Approx(1.0));
    // independence
    CHECK(normalized_mi(std::vector<std::uint64_t>{1, 1, 1, 1}, 2, 2) == doctest::Approx(0.0));
    // hand evaluation: (1 - H(3/4,1/4)) / 1
    CHECK(std::abs(normalized_mi(std::vector<std::uint64_t>{3, 1, 1, 3}, 2, 2) - 0.188722) <
          1e-6);
    CHECK(std::abs(normalized_mi(std::vector<std::uint64_t>{3, 1, 1, 3}, 2, 2) -
                   0.1887218755408672) < 1e-12);
}

TEST_CASE("empty and constant blocks carry no information") {
    CHECK(normalized_mi(std::vector<std::uint64_t>{0, 0, 0, 0}, 2, 2) == 0.0);
    // single nonzero column: H(S^b|m) = 0
    CHECK(normalized_mi(std::vector<std::uint64_t>{3, 0, 5, 0}, 2, 2) == 0.0);
    CHECK(mi_oracle(std::vector<std::uint64_t>{3, 0, 5, 0}, 2, 2) == 0.0);
}

TEST_CASE("oracle equivalence on 1000 random small blocks") {
    Rng rng(271828);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n_pre = 1 + static_cast<int>(rng.uniform_below(6));
        const int n_post = 1 + static_cast<int>(rng.uniform_below(6));
        const auto counts = random_block(rng, n_pre, n_post);
        const double direct = normalized_mi(counts, n_pre, n_post);
        const double oracle = mi_oracle(counts, n_pre, n_post);
        CHECK(std::abs(direct - oracle) <= 1e-12);
        CHECK(direct >= 0.0);
        CHECK(direct <= 1.0);
    }
}

TEST_CASE("normalization does not depend on the log base") {
    Rng rng(31415);
    for (int rep = 0; rep < 200; ++rep) {
        const int n_pre = 2 + static_cast<int>(rng.uniform_below(5));
        const int n_post = 2 + static_cast<int>(rng.uniform_below(5));
        const auto counts = random_block(rng, n_pre, n_post);
        CHECK(std::abs(normalized_mi(counts, n_pre, n_post) -
                       mi_natural_log(counts, n_pre, n_post)) <= 1e-12);
    }
}

TEST_CASE("doubling all counts leaves the statistics bit-identical") {
    Rng rng(999);
    for (int rep = 0; rep < 100; ++rep) {
        const int n_pre = 2 + static_cast<int>(rng.uniform_below(6));
        const int n_post = 2 + static_cast<int>(rng.uniform_below(6));
        auto counts = random_block(rng, n_pre, n_post);
        auto doubled = counts;
        for (auto& c : doubled) c *= 2;
        const auto base = block_stats(counts, n_pre, n_post);
        const auto twice = block_stats(doubled, n_pre, n_post);
        CHECK(base.mi == twice.mi);
        CHECK(base.h_post == twice.h_post);
        CHECK(base.h_cond == twice.h_cond);
    }
}

TEST_CASE("relabeling prototypes leaves block statistics bit-identical") {
    Rng rng(777);
    for (int rep = 0; rep < 100; ++rep) {
        const int n_pre = 3 + static_cast<int>(rng.uniform_below(4));
        const int n_post = 3 + static_cast<int>(rng.uniform_below(4));
        const auto counts = random_block(rng, n_pre, n_post);

        // random permutations of both axes
        std::vector<int> pi(n_pre);
        std::vector<int> pj(n_post);
        std::iota(pi.begin(), pi.end(), 0);
        std::iota(pj.begin(), pj.end(), 0);
        for (int i = n_pre - 1; i > 0; --i) {
            std::swap(pi[i], pi[rng.uniform_below(static_cast<std::uint64_t>(i) + 1)]);
        }
        for (int j = n_post - 1; j > 0; --j) {
            std::swap(pj[j], pj[rng.uniform_below(static_cast<std::uint64_t>(j) + 1)]);
        }
        std::vector<std::uint64_t> shuffled(counts.size());
        for (int i = 0; i < n_pre; ++i) {
            for (int j = 0; j < n_post; ++j) {
                shuffled[static_cast<std::size_t>(pi[i]) * n_post + pj[j]] =
                    counts[static_cast<std::size_t>(i) * n_post + j];
            }
        }
        const auto base = block_stats(counts, n_pre, n_post);
        const auto relabeled = block_stats(shuffled, n_pre, n_post);
        CHECK(base.mi == relabeled.mi);
        CHECK(base.h_post == relabeled.h_post);
        CHECK(base.h_cond == relabeled.h_cond);
    }
}

TEST_CASE("the full tensor is bit-identical under a field relabeling") {
    const ModelShape shape{{4, 3, 5}, 2};
    PredictiveModel model(shape);
    Rng rng(5150);
    for (int n = 0; n < 2000; ++n) {
        const int a = static_cast<int>(rng.uniform_below(3));
        const int b = static_cast<int>(rng.uniform_below(3));
        model.add(a, static_cast<int>(rng.uniform_below(shape.n_states[a])),
                  static_cast<int>(rng.uniform_below(2)), b,
                  static_cast<int>(rng.uniform_below(shape.n_states[b])));
    }
    const auto relabeled = permute_field_labels(model, 2, {4, 2, 0, 1, 3});
    CHECK(mi_tensor(model) == mi_tensor(relabeled));
}

TEST_CASE("tensor over an empty model is all zeros") {
    const PredictiveModel model(ModelShape{{3, 2}, 2});
    const auto tensor = mi_tensor(model);
    for (const auto& s : tensor.all()) {
        CHECK(s.mi == 0.0);
        CHECK(s.total == 0);
    }
}

TEST_CASE("structure stats read coupled pairs off the geometry oracle") {
    const auto g = RetinaGeometry::build();
    MiTensor tensor(g.field_count(), g.motor_count());
    for (int q = 0; q < g.motor_count(); ++q) {
        for (int a = 0; a < g.field_count(); ++a) {
            for (int b = 0; b < g.field_count(); ++b) {
                tensor.stats(a, b, q).mi = 0.1;
            }
            const auto partner = g.coupled_partner(a, q);
            if (partner.has_value()) tensor.stats(a, *partner, q).mi = 0.9;
        }
    }
    const auto stats = structure_stats(tensor, g);
    CHECK(stats.coupled_cases == 312);  // 4 diagonal x 36 + 4 straight x 42
    CHECK(stats.argmax_correct == 312);
    CHECK(stats.argmax_agreement() == doctest::Approx(1.0));
    CHECK(stats.mean_coupled_mi == doctest::Approx(0.9));
    CHECK(stats.mean_uncoupled_mi == doctest::Approx(0.1));
}

TEST_CASE("asymmetry stats compare coupled cross-layer shifts both ways") {
    const auto g = RetinaGeometry::build();
    MiTensor tensor(g.field_count(), g.motor_count());
    // H(fine|coarse) = 2 bits, H(coarse|fine) = 0.5 bits everywhere
    for (int q = 0; q < g.motor_count(); ++q) {
        for (int a = 0; a < g.field_count(); ++a) {
            const auto partner = g.coupled_partner(a, q);
            if (!partner.has_value()) continue;
            const int la = g.field(a).layer;
            const int lb = g.field(*partner).layer;
            if (la > lb) {
                tensor.stats(a, *partner, q).h_cond = 2.0;
            } else if (la < lb) {
                tensor.stats(a, *partner, q).h_cond = 0.5;
            }
        }
    }
    const auto stats = asymmetry_stats(tensor, g);
    CHECK(stats.pair_count > 0);
    CHECK(stats.mean_h_fine_given_coarse == doctest::Approx(2.0));
    CHECK(stats.mean_h_coarse_given_fine == doctest::Approx(0.5));
}

TEST_SUITE_END();
