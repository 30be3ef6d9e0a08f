#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "conewalk/cone.hpp"
#include "conewalk/increments.hpp"
#include "conewalk/rng.hpp"
#include "conewalk/survival.hpp"

namespace conewalk {

/// One trajectory of x + S(n), stopped at the first step leaving the cone
/// or at the horizon.
inline ExitRecord simulate_exit(const HarmonicCone& cone, const std::vector<double>& x,
                                const IncrementDistribution& dist, long long horizon,
                                RngStream& rng) {
    if (horizon < 1) throw std::invalid_argument("simulate_exit: horizon must be >= 1");
    if (!cone.contains(x)) throw std::domain_error("simulate_exit: start outside the cone");
    ExitRecord rec;
    std::vector<double> pos(x);
    for (long long n = 1; n <= horizon; ++n) {
        for (auto& c : pos) c += dist.sample(rng);
        if (!cone.contains(pos)) {
            rec.exit_time = n;
            rec.survived = false;
            rec.final_position = pos;
            return rec;
        }
    }
    rec.exit_time = horizon;
    rec.survived = true;
    rec.final_position = pos;
    return rec;
}

namespace walkdetail {

constexpr long long kBatchSize = 4096;

/// Exit-time counting shared by the estimators: trajectory t uses the
/// stream keyed (seed, batch, index-in-batch), so results are identical for
/// any worker count.
template <typename PerTrajectory>
void run_batches(long long trials, std::uint64_t seed, int workers, PerTrajectory&& fn) {
    if (trials < 1) throw std::invalid_argument("walk_engine: trials must be >= 1");
    if (workers < 1) workers = 1;
    long long batches = (trials + kBatchSize - 1) / kBatchSize;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (long long b = w; b < batches; b += workers) {
                long long lo = b * kBatchSize;
                long long hi = std::min(trials, lo + kBatchSize);
                for (long long t = lo; t < hi; ++t) {
                    RngStream rng(seed, static_cast<std::uint64_t>(b),
                                  static_cast<std::uint64_t>(t - lo));
                    fn(b, t, rng);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace walkdetail

/// Monte Carlo survival curve: one trajectory serves all horizons (its exit
/// time is recorded once), so the curve is monotone by construction.
inline SurvivalCurve estimate_survival(const HarmonicCone& cone, const std::vector<double>& x,
                                       const IncrementDistribution& dist,
                                       const std::vector<long long>& horizons, long long trials,
                                       std::uint64_t master_seed, int workers = 1) {
    if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end()))
        throw std::invalid_argument("estimate_survival: horizons must be sorted and nonempty");
    if (trials < 1) throw std::invalid_argument("estimate_survival: trials must be >= 1");
    long long maxh = horizons.back();
    long long batches = (trials + walkdetail::kBatchSize - 1) / walkdetail::kBatchSize;
    // per-batch histogram of capped exit times; merged in batch order
    std::vector<std::vector<long long>> batch_counts(
        batches, std::vector<long long>(horizons.size(), 0));
    walkdetail::run_batches(trials, master_seed, workers,
                            [&](long long b, long long, RngStream& rng) {
                                auto rec = simulate_exit(cone, x, dist, maxh, rng);
                                for (std::size_t i = 0; i < horizons.size(); ++i)
                                    if (rec.survived || rec.exit_time > horizons[i])
                                        batch_counts[b][i] += 1;
                            });
    SurvivalCurve sc;
    sc.cone_label = cone.label();
    sc.start = x;
    sc.method = "mc";
    sc.trials = trials;
    sc.seed = master_seed;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        long long alive = 0;
        for (long long b = 0; b < batches; ++b) alive += batch_counts[b][i];
        double p = static_cast<double>(alive) / static_cast<double>(trials);
        sc.horizons.push_back(horizons[i]);
        sc.estimates.push_back(p);
        sc.std_errors.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(trials)));
    }
    sc.validate();
    return sc;
}

/// Sample mean of h(x + S(n)) 1{tau_x > n}.
inline std::pair<double, double> estimate_truncated_h(const HarmonicCone& cone,
                                                      const std::vector<double>& x,
                                                      const IncrementDistribution& dist,
                                                      long long n, long long trials,
                                                      std::uint64_t master_seed,
                                                      int workers = 1) {
    if (trials < 1) throw std::invalid_argument("estimate_truncated_h: trials must be >= 1");
    if (n == 0) return {cone.evaluate_h(x), 0.0};
    long long batches = (trials + walkdetail::kBatchSize - 1) / walkdetail::kBatchSize;
    std::vector<double> sums(batches, 0.0), sums2(batches, 0.0);
    walkdetail::run_batches(trials, master_seed, workers,
                            [&](long long b, long long, RngStream& rng) {
                                auto rec = simulate_exit(cone, x, dist, n, rng);
                                if (rec.survived) {
                                    double v = cone.evaluate_h(rec.final_position);
                                    sums[b] += v;
                                    sums2[b] += v * v;
                                }
                            });
    double s = 0, s2 = 0;
    for (long long b = 0; b < batches; ++b) {
        s += sums[b];
        s2 += sums2[b];
    }
    double mean = s / static_cast<double>(trials);
    double var = std::max(0.0, s2 / static_cast<double>(trials) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(trials))};
}

/// Sample mean of h(x + S(n)) for the free (unkilled) walk; h is conserved
/// for laws whose free drift vanishes.
inline std::pair<double, double> estimate_free_h(const HarmonicCone& cone,
                                                 const std::vector<double>& x,
                                                 const IncrementDistribution& dist, long long n,
                                                 long long trials, std::uint64_t master_seed,
                                                 int workers = 1) {
    if (trials < 1) throw std::invalid_argument("estimate_free_h: trials must be >= 1");
    long long batches = (trials + walkdetail::kBatchSize - 1) / walkdetail::kBatchSize;
    std::vector<double> sums(batches, 0.0), sums2(batches, 0.0);
    walkdetail::run_batches(trials, master_seed, workers,
                            [&](long long b, long long, RngStream& rng) {
                                std::vector<double> pos(x);
                                for (long long k = 0; k < n; ++k)
                                    for (auto& c : pos) c += dist.sample(rng);
                                double v = cone.evaluate_h(pos);
                                sums[b] += v;
                                sums2[b] += v * v;
                            });
    double s = 0, s2 = 0;
    for (long long b = 0; b < batches; ++b) {
        s += sums[b];
        s2 += sums2[b];
    }
    double mean = s / static_cast<double>(trials);
    double var = std::max(0.0, s2 / static_cast<double>(trials) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(trials))};
}

}  // namespace conewalk
