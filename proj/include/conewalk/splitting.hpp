#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "conewalk/cone.hpp"
#include "conewalk/increments.hpp"
#include "conewalk/rng.hpp"
#include "conewalk/survival.hpp"

namespace conewalk {

/// Fixed-effort multilevel splitting over time levels. At each level the
/// surviving trajectories are resampled with replacement back to the particle
/// budget and the survival fraction per level is multiplied; the product is
/// an unbiased estimator of P(tau > level). Standard errors come from the
/// level-wise delta method treating level fractions as independent binomials.
/// Shipped configurations place the levels at powers of two.
inline SurvivalCurve estimate_survival_splitting(const HarmonicCone& cone,
                                                 const std::vector<double>& x,
                                                 const IncrementDistribution& dist,
                                                 const std::vector<long long>& horizons,
                                                 long long particles,
                                                 std::uint64_t master_seed) {
    if (particles < 100)
        throw std::invalid_argument("estimate_survival_splitting: need at least 100 particles");
    if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end()))
        throw std::invalid_argument("estimate_survival_splitting: horizons must be sorted");
    if (!cone.contains(x)) throw std::domain_error("estimate_survival_splitting: start outside");

    SurvivalCurve sc;
    sc.cone_label = cone.label();
    sc.start = x;
    sc.method = "splitting";
    sc.trials = particles;
    sc.seed = master_seed;

    std::vector<std::vector<double>> live(particles, x);
    double log_product = 0;
    double rel_var = 0;  // sum of (1 - f_j) / (f_j * N)
    bool extinct = false;
    long long prev = 0;
    std::uint64_t stage = 0;
    for (std::size_t li = 0; li < horizons.size(); ++li) {
        long long target = horizons[li];
        if (!extinct) {
            std::vector<std::vector<double>> next;
            next.reserve(live.size());
            for (std::size_t i = 0; i < live.size(); ++i) {
                RngStream rng(master_seed, 2 * stage, static_cast<std::uint64_t>(i));
                std::vector<double> pos = live[i];
                bool alive = true;
                for (long long k = prev; k < target && alive; ++k) {
                    for (auto& c : pos) c += dist.sample(rng);
                    alive = cone.contains(pos);
                }
                if (alive) next.push_back(std::move(pos));
            }
            double frac =
                static_cast<double>(next.size()) / static_cast<double>(live.size());
            if (next.empty()) {
                extinct = true;
                sc.extinct_at = target;
            } else {
                log_product += std::log(frac);
                rel_var += (1.0 - frac) / (frac * static_cast<double>(live.size()));
                // resample with replacement back to the particle budget
                RngStream rng(master_seed, 2 * stage + 1, 0);
                std::vector<std::vector<double>> pool(particles);
                for (long long i = 0; i < particles; ++i)
                    pool[i] = next[rng.below(next.size())];
                live = std::move(pool);
            }
        }
        double est = extinct ? 0.0 : std::exp(log_product);
        sc.horizons.push_back(target);
        sc.estimates.push_back(est);
        sc.std_errors.push_back(extinct ? 0.0 : est * std::sqrt(rel_var));
        prev = target;
        ++stage;
    }
    sc.validate();
    return sc;
}

}  // namespace conewalk
