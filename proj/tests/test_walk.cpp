#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "conewalk/lattice_dp.hpp"
#include "conewalk/walk.hpp"

using namespace conewalk;

namespace {
HarmonicCone half_line() { return HarmonicCone::weyl_chamber(ChamberFamily::C, 1); }
}  // namespace

TEST_CASE("simulate_exit basics") {
    auto cone = half_line();
    auto rad = IncrementDistribution::rademacher();
    RngStream rng(1, 0, 0);
    auto rec = simulate_exit(cone, {1.0}, rad, 16, rng);
    REQUIRE(rec.exit_time >= 1);
    if (rec.survived) {
        REQUIRE(rec.exit_time == 16);
        REQUIRE(cone.contains(rec.final_position));
    } else {
        REQUIRE_FALSE(cone.contains(rec.final_position));
    }
    REQUIRE_THROWS_AS(simulate_exit(cone, {0.0}, rad, 4, rng), std::domain_error);
    REQUIRE_THROWS_AS(simulate_exit(cone, {1.0}, rad, 0, rng), std::invalid_argument);
}

TEST_CASE("half-line survival matches the enumerated values") {
    auto cone = half_line();
    auto rad = IncrementDistribution::rademacher();
    auto sc = estimate_survival(cone, {1.0}, rad, {1, 2, 3}, 1000000, 2024, 4);
    double expect[3] = {0.5, 0.5, 0.375};
    for (int i = 0; i < 3; ++i)
        REQUIRE(std::fabs(sc.estimates[i] - expect[i]) <= 4 * sc.std_errors[i]);
}

TEST_CASE("two-walker survival at one step") {
    auto a2 = HarmonicCone::weyl_chamber(ChamberFamily::A, 2);
    auto rad = IncrementDistribution::rademacher();
    auto sc = estimate_survival(a2, {0.0, 2.0}, rad, {1}, 400000, 7, 4);
    REQUIRE(std::fabs(sc.estimates[0] - 0.75) <= 4 * sc.std_errors[0]);
}

TEST_CASE("trials must be positive") {
    auto cone = half_line();
    auto rad = IncrementDistribution::rademacher();
    REQUIRE_THROWS_AS(estimate_survival(cone, {1.0}, rad, {1}, 0, 1, 1),
                      std::invalid_argument);
}

TEST_CASE("monte carlo agrees with the exact oracle on random configurations") {
    auto rad = IncrementDistribution::rademacher();
    auto lazy = IncrementDistribution::lazy_rademacher(Rational(1, 2));
    auto asym = IncrementDistribution::asymmetric_three_point();
    struct Cfg {
        HarmonicCone cone;
        std::vector<double> x;
        const IncrementDistribution* dist;
    };
    std::vector<Cfg> cfgs;
    double c = std::sqrt(2.5), s2 = std::sqrt(2.0);
    cfgs.push_back({half_line(), {1.0}, &rad});
    cfgs.push_back({half_line(), {2.0}, &rad});
    cfgs.push_back({half_line(), {c}, &asym});
    cfgs.push_back({half_line(), {s2}, &lazy});
    cfgs.push_back({HarmonicCone::weyl_chamber(ChamberFamily::A, 2), {0.0, 2.0}, &rad});
    cfgs.push_back({HarmonicCone::weyl_chamber(ChamberFamily::A, 2), {0.0, 2 * c}, &asym});
    cfgs.push_back({HarmonicCone::weyl_chamber(ChamberFamily::C, 2), {1.0, 2.0}, &rad});
    cfgs.push_back({HarmonicCone::weyl_chamber(ChamberFamily::C, 2), {s2, 3 * s2}, &lazy});
    cfgs.push_back({HarmonicCone::weyl_chamber(ChamberFamily::D, 2), {0.0, 1.0}, &rad});
    cfgs.push_back({HarmonicCone::weyl_chamber(ChamberFamily::D, 2), {c, 3 * c}, &asym});
    RngStream pick(404, 0, 0);
    int checks = 0;
    for (const auto& cfg : cfgs) {
        for (long long n : {8LL + static_cast<long long>(pick.below(9)),
                            24LL + static_cast<long long>(pick.below(17))}) {
            auto dp = dp_survival_prob(cfg.cone, cfg.x, *cfg.dist, {n});
            auto mc = estimate_survival(cfg.cone, cfg.x, *cfg.dist, {n}, 200000,
                                        9000 + checks, 4);
            INFO(cfg.cone.label() << " " << cfg.dist->name() << " n=" << n);
            REQUIRE(std::fabs(mc.estimates[0] - dp.estimates[0]) <=
                    4 * mc.std_errors[0] + 1e-12);
            ++checks;
        }
    }
    REQUIRE(checks == 20);
}

TEST_CASE("free-walk conservation of h for the ordered chamber, asymmetric law") {
    auto a2 = HarmonicCone::weyl_chamber(ChamberFamily::A, 2);
    auto expc = IncrementDistribution::exp_centered();
    std::vector<double> x{0.0, 2.0};
    double hx = a2.evaluate_h(x);
    for (long long n : {1LL, 4LL, 16LL}) {
        auto [mean, se] = estimate_free_h(a2, x, expc, n, 400000, 31 + n, 4);
        INFO("n=" << n);
        REQUIRE(std::fabs(mean - hx) <= 4 * se);
    }
}

TEST_CASE("curves are monotone by construction and reproducible") {
    auto c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2);
    auto rad = IncrementDistribution::rademacher();
    auto a = estimate_survival(c2, {1.0, 2.0}, rad, {1, 2, 4, 8, 16, 32}, 50000, 555, 3);
    for (std::size_t i = 1; i < a.estimates.size(); ++i)
        REQUIRE(a.estimates[i] <= a.estimates[i - 1]);
    auto b = estimate_survival(c2, {1.0, 2.0}, rad, {1, 2, 4, 8, 16, 32}, 50000, 555, 3);
    REQUIRE(a.estimates == b.estimates);
    // worker count does not change the result (batch-keyed streams)
    auto cjw = estimate_survival(c2, {1.0, 2.0}, rad, {1, 2, 4, 8, 16, 32}, 50000, 555, 7);
    REQUIRE(a.estimates == cjw.estimates);
}

TEST_CASE("translation along the interior direction is monotone under coupling") {
    auto c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2);
    auto rad = IncrementDistribution::rademacher();
    std::vector<double> x{1.0, 2.0};
    double prev = -1;
    for (double t : {0.0, 1.0, 2.0, 4.0}) {
        auto xs = c2.shifted(x, t);
        // identical seed couples the trajectories pathwise
        auto sc = estimate_survival(c2, xs, rad, {64}, 100000, 8080, 4);
        REQUIRE(sc.estimates[0] >= prev);
        prev = sc.estimates[0];
    }
}

TEST_CASE("truncated h estimator") {
    auto cone = half_line();
    auto rad = IncrementDistribution::rademacher();
    auto [v0, se0] = estimate_truncated_h(cone, {3.0}, rad, 0, 10, 1, 1);
    REQUIRE(v0 == 3.0);
    REQUIRE(se0 == 0.0);
    auto [v2, se2] = estimate_truncated_h(cone, {1.0}, rad, 2, 400000, 17, 4);
    REQUIRE(std::fabs(v2 - 1.0) <= 4 * se2);
    // against the exact oracle on a lattice config
    auto asym = IncrementDistribution::asymmetric_three_point();
    double c = std::sqrt(2.5);
    double dp = dp_truncated_h(cone, {2 * c}, asym, 16);
    auto [vm, sem] = estimate_truncated_h(cone, {2 * c}, asym, 16, 400000, 23, 4);
    REQUIRE(std::fabs(vm - dp) <= 4 * sem);
}
