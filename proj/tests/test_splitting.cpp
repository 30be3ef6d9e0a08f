#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "conewalk/lattice_dp.hpp"
#include "conewalk/splitting.hpp"
#include "conewalk/walk.hpp"

using namespace conewalk;

TEST_CASE("splitting matches plain Monte Carlo on a reachable regime") {
    auto d2 = HarmonicCone::weyl_chamber(ChamberFamily::D, 2);
    auto rad = IncrementDistribution::rademacher();
    std::vector<long long> levels{4, 16, 64};
    auto sp = estimate_survival_splitting(d2, {0.0, 1.0}, rad, levels, 40000, 99);
    auto mc = estimate_survival(d2, {0.0, 1.0}, rad, levels, 400000, 98, 4);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        double se = std::hypot(sp.std_errors[i], mc.std_errors[i]);
        INFO("level " << levels[i]);
        REQUIRE(std::fabs(sp.estimates[i] - mc.estimates[i]) <= 4 * se);
    }
}

TEST_CASE("splitting matches the exact oracle deep in the tail") {
    auto c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2);
    auto lazy = IncrementDistribution::lazy_rademacher(Rational(1, 2));
    double m = std::sqrt(2.0);
    std::vector<double> x{m, 2 * m};
    std::vector<long long> levels{4, 16, 64, 256};
    auto dp = dp_survival_prob(c2, x, lazy, levels);
    auto sp = estimate_survival_splitting(c2, x, lazy, levels, 40000, 123);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        INFO("level " << levels[i] << " dp=" << dp.estimates[i] << " sp=" << sp.estimates[i]);
        REQUIRE(std::fabs(sp.estimates[i] - dp.estimates[i]) <= 4 * sp.std_errors[i]);
    }
    // the deep level is far beyond plain-MC reach but has a usable SE
    REQUIRE(dp.estimates.back() < 1e-4);
    REQUIRE(sp.std_errors.back() / sp.estimates.back() < 0.2);
}

TEST_CASE("particle floor is enforced") {
    auto cone = HarmonicCone::weyl_chamber(ChamberFamily::C, 1);
    auto rad = IncrementDistribution::rademacher();
    REQUIRE_THROWS_AS(estimate_survival_splitting(cone, {1.0}, rad, {4}, 1, 5),
                      std::invalid_argument);
}

TEST_CASE("extinction is flagged, not silently zero") {
    // a single huge level starved of particles: every particle dies
    auto c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2);
    auto rad = IncrementDistribution::rademacher();
    auto sp = estimate_survival_splitting(c2, {1.0, 2.0}, rad, {4096}, 100, 7);
    REQUIRE(sp.extinct_at.has_value());
    REQUIRE(sp.estimates.back() == 0.0);
}

TEST_CASE("splitting is reproducible") {
    auto d2 = HarmonicCone::weyl_chamber(ChamberFamily::D, 2);
    auto rad = IncrementDistribution::rademacher();
    auto a = estimate_survival_splitting(d2, {0.0, 1.0}, rad, {8, 32}, 5000, 42);
    auto b = estimate_survival_splitting(d2, {0.0, 1.0}, rad, {8, 32}, 5000, 42);
    REQUIRE(a.estimates == b.estimates);
}
