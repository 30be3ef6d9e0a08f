#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "conewalk/cone.hpp"
#include "conewalk/increments.hpp"
#include "conewalk/lattice_dp.hpp"
#include "conewalk/rng.hpp"

namespace conewalk {

/// One-step defect f(x) = E[h(x+X); x+X in K] - h(x), split into the free
/// drift E[h(x+X)] - h(x) and the boundary part E[h(x+X); x+X outside K].
struct DefectDecomposition {
    double drift_part = 0;
    double boundary_part = 0;
    double boundary_std_error = 0;
    bool boundary_exact = false;
    double f_value = 0;         // drift_part - boundary_part
    double normalized_decay = 0;  // |f| delta(x)^2 / h(x)
};

/// The free-walk drift E[h(x+X)] - h(x) as an exact polynomial in x:
/// sum over multi-indices 1 <= |a| <= p of (d^a h) * prod_j m_{a_j} / a!.
/// The expansion is finite and exact because derivatives beyond degree p
/// vanish. Throws MomentUnavailable when the law lacks a needed moment.
inline SparsePolynomial<QuadExt> free_drift_polynomial(const HarmonicCone& cone,
                                                       const IncrementDistribution& dist) {
    int d = cone.dim();
    int p = cone.degree_p();
    int r = cone.degree_r();
    SparsePolynomial<QuadExt> acc(d);
    MultiIndex alpha(d, 0);
    std::function<void(int, int)> rec = [&](int j, int total) {
        if (j == d) {
            if (total == 0) return;
            auto deriv = partial_derivative(cone.h_expanded(), alpha);
            if (deriv.is_zero()) return;
            QuadExt factor(1);
            for (int i = 0; i < d; ++i) {
                factor *= dist.moment_exact(alpha[i]);
                Rational fact = 1;
                for (int k = 2; k <= alpha[i]; ++k) fact *= k;
                factor /= QuadExt(fact);
            }
            if (factor.is_zero()) return;
            deriv *= factor;
            acc += deriv;
            return;
        }
        for (int e = 0; e + total <= p && e <= r; ++e) {
            alpha[j] = e;
            rec(j + 1, total + e);
        }
        alpha[j] = 0;
    };
    rec(0, 0);
    return acc;
}

inline double free_drift_g1(const HarmonicCone& cone, const IncrementDistribution& dist,
                            std::span<const double> x) {
    return free_drift_polynomial(cone, dist).evaluate_double(x);
}

inline QuadExt free_drift_g1_exact(const HarmonicCone& cone, const IncrementDistribution& dist,
                                   const std::vector<Rational>& x) {
    std::vector<QuadExt> xe(x.begin(), x.end());
    return free_drift_polynomial(cone, dist).evaluate<QuadExt>(xe);
}

/// Signed boundary defect E[h(x+X); x+X outside K]. Lattice laws are
/// enumerated over the product support (no statistical error); other laws
/// fall back to Monte Carlo over `budget` samples.
inline DefectDecomposition boundary_defect_g2(const HarmonicCone& cone,
                                              const IncrementDistribution& dist,
                                              std::span<const double> x, long long budget = 1,
                                              std::uint64_t seed = 0) {
    DefectDecomposition out;
    int d = cone.dim();
    if (dist.lattice()) {
        const auto& lat = *dist.lattice();
        std::size_t m = lat.unit_support.size();
        std::size_t count = 1;
        for (int j = 0; j < d; ++j) count *= m;
        double acc = 0;
        std::vector<double> y(d);
        for (std::size_t idx = 0; idx < count; ++idx) {
            std::size_t rem = idx;
            double prob = 1;
            for (int j = 0; j < d; ++j) {
                std::size_t pick = rem % m;
                rem /= m;
                y[j] = x[j] + lat.mesh * static_cast<double>(lat.unit_support[pick]);
                prob *= to_double(lat.unit_probs[pick]);
            }
            if (!cone.contains(y)) acc += prob * cone.evaluate_h(y);
        }
        out.boundary_part = acc;
        out.boundary_std_error = 0;
        out.boundary_exact = true;
        return out;
    }
    if (budget < 1) throw std::invalid_argument("boundary_defect_g2: budget must be >= 1");
    RngStream rng(seed, 0x67, 0);
    double s = 0, s2 = 0;
    std::vector<double> y(d);
    for (long long i = 0; i < budget; ++i) {
        for (int j = 0; j < d; ++j) y[j] = x[j] + dist.sample(rng);
        double v = cone.contains(y) ? 0.0 : cone.evaluate_h(y);
        s += v;
        s2 += v * v;
    }
    double mean = s / static_cast<double>(budget);
    double var = std::max(0.0, s2 / static_cast<double>(budget) - mean * mean);
    out.boundary_part = mean;
    out.boundary_std_error = std::sqrt(var / static_cast<double>(budget));
    out.boundary_exact = false;
    return out;
}

inline DefectDecomposition one_step_defect(const HarmonicCone& cone,
                                           const IncrementDistribution& dist,
                                           std::span<const double> x, long long budget = 1,
                                           std::uint64_t seed = 0) {
    DefectDecomposition out = boundary_defect_g2(cone, dist, x, budget, seed);
    out.drift_part = free_drift_g1(cone, dist, x);
    out.f_value = out.drift_part - out.boundary_part;
    double delta = cone.boundary_distance(x);
    out.normalized_decay = std::fabs(out.f_value) * delta * delta / cone.evaluate_h(x);
    return out;
}

}  // namespace conewalk
