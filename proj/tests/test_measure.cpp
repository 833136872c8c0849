#include <doctest.h>

#include <random>

#include "nnsr/measure.hpp"
#include "oracles.hpp"

using namespace nnsr;

TEST_CASE("construction validates and coalesces atoms") {
    CHECK_THROWS_AS(DiscreteMeasure({0.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure({0.5}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure({0.5, 0.6}, {1.0}), std::invalid_argument);

    DiscreteMeasure mu({0.7, 0.3, 0.7}, {1.0, 2.0, 0.5});
    REQUIRE(mu.size() == 2);
    CHECK(mu.locations()[0] == 0.3);
    CHECK(mu.weights()[1] == doctest::Approx(1.5));
}

TEST_CASE("tv_norm") {
    CHECK(tv_norm(DiscreteMeasure({0.1, 0.2, 0.3}, {1, 2, 3})) == doctest::Approx(6.0));
    CHECK(tv_norm(DiscreteMeasure()) == 0.0);
    CHECK(tv_norm(DiscreteMeasure({0.4, 0.6}, {0.5, 0.5})) == doctest::Approx(1.0));
}

TEST_CASE("min_separation") {
    CHECK(min_separation(DiscreteMeasure({0.5}, {1})) == doctest::Approx(0.5));
    CHECK(min_separation(DiscreteMeasure({0.27, 0.59, 0.82}, {1, 1, 1})) == doctest::Approx(0.18));
    CHECK(min_separation(DiscreteMeasure({0.1, 0.9}, {1, 1})) == doctest::Approx(0.1));
    CHECK_THROWS_WITH(min_separation(DiscreteMeasure()), "no sources");
}

TEST_CASE("min_separation is reflection invariant") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const DiscreteMeasure mu = oracle::random_measure(rng, 6, false);
        std::vector<double> r;
        for (double t : mu.locations()) r.push_back(1.0 - t);
        const DiscreteMeasure mirrored(r, mu.weights());
        CHECK(min_separation(mirrored) == doctest::Approx(min_separation(mu)).epsilon(1e-12));
    }
}

TEST_CASE("neighborhoods") {
    auto n = neighborhoods(DiscreteMeasure({0.5}, {1}), 0.1);
    REQUIRE(n.intervals.size() == 1);
    CHECK(n.intervals[0].lo == doctest::Approx(0.4));
    CHECK(n.intervals[0].hi == doctest::Approx(0.6));
    CHECK(n.disjoint);

    n = neighborhoods(DiscreteMeasure({0.27, 0.59, 0.82}, {1, 1, 1}), 0.09);
    CHECK(n.intervals.size() == 3);
    CHECK(n.disjoint);
    CHECK(n.index_of(0.6) == 1);
    CHECK(n.index_of(0.45) == -1);

    n = neighborhoods(DiscreteMeasure({0.4, 0.45}, {1, 1}), 0.05);
    CHECK_FALSE(n.disjoint);

    n = neighborhoods(DiscreteMeasure({0.02}, {1}), 0.05);
    CHECK(n.intervals[0].lo == 0.0);
}

TEST_CASE("neighborhoods are disjoint for eps up to half the separation") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const DiscreteMeasure mu = oracle::random_measure(rng, 6, false);
        const auto n = neighborhoods(mu, 0.999 * min_separation(mu) / 2.0);
        CHECK(n.disjoint);
        for (std::size_t j = 1; j < n.intervals.size(); ++j) CHECK(n.intervals[j - 1].hi < n.intervals[j].lo);
    }
}

TEST_CASE("group_partition") {
    auto g = group_partition(DiscreteMeasure({0.2, 0.21, 0.8}, {1, 1, 1}), 0.05);
    REQUIRE(g.groups.size() == 2);
    CHECK(g.groups[0].members.size() == 2);
    CHECK(g.groups[0].weight == doctest::Approx(2.0));
    CHECK(g.groups[0].representative == doctest::Approx(0.205));

    CHECK(group_partition(DiscreteMeasure({0.5}, {1}), 0.3).groups.size() == 1);
    CHECK(group_partition(DiscreteMeasure({0.27, 0.59, 0.82}, {1, 1, 1}), 0.09).groups.size() == 3);

    // a gap of exactly 2 eps does not merge
    CHECK(group_partition(DiscreteMeasure({0.25, 0.75}, {1, 1}), 0.25).groups.size() == 2);
}

TEST_CASE("group weights sum to the total mass") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> eps(0.001, 0.3);
    for (int i = 0; i < 200; ++i) {
        const DiscreteMeasure mu = oracle::random_measure(rng, 8, false);
        const auto g = group_partition(mu, eps(rng));
        double w = 0.0;
        std::size_t members = 0;
        for (const auto& grp : g.groups) {
            w += grp.weight;
            members += grp.members.size();
        }
        CHECK(w == doctest::Approx(tv_norm(mu)).epsilon(1e-12));
        CHECK(members == mu.size());
        for (std::size_t j = 1; j < g.groups.size(); ++j) {
            const double left = mu.locations()[g.groups[j - 1].members.back()];
            const double right = mu.locations()[g.groups[j].members.front()];
            CHECK(right - left >= 2.0 * g.epsilon);
        }
    }
}

TEST_CASE("local_mass") {
    const DiscreteMeasure one({0.5}, {2.0});
    CHECK(local_mass(one, {0.4, 0.6}) == doctest::Approx(2.0));
    CHECK(local_mass(one, {0.6, 0.7}) == 0.0);
    CHECK(local_mass(DiscreteMeasure({0.3, 0.7}, {1, 1}), {0.25, 0.35}) == doctest::Approx(1.0));

    std::mt19937_64 rng(14);
    for (int i = 0; i < 100; ++i) {
        const DiscreteMeasure mu = oracle::random_measure(rng, 8, true);
        // half-open partition built from closed intervals with nudged edges
        const double cut = 0.37;
        const double total = local_mass(mu, {0.0, cut}) + local_mass(mu, {std::nextafter(cut, 1.0), 1.0});
        CHECK(total == doctest::Approx(tv_norm(mu)).epsilon(1e-12));
    }
}

TEST_CASE("csv round trip") {
    const DiscreteMeasure mu({0.123456789012345, 0.9}, {1.0 / 3.0, 2.0});
    const DiscreteMeasure back = measure_from_csv(to_csv(mu));
    REQUIRE(back.size() == 2);
    CHECK(back.locations()[0] == mu.locations()[0]);
    CHECK(back.weights()[0] == mu.weights()[0]);
    CHECK(to_csv(DiscreteMeasure()) == "location,weight\n");
}
