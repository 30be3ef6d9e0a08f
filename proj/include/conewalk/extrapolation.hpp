#pragma once

#include <cmath>
#include <vector>

namespace conewalk {

struct ExtrapolationResult {
    double value = 0;
    double error_estimate = 0;
    bool reliable = false;
};

/// Richardson extrapolation of a sequence sampled at doubling arguments
/// n_j = n_0 * 2^j, assuming corrections on the half-integer power ladder
/// n^{-1/2}, n^{-1}, n^{-3/2}, ... Successive difference tables eliminate one
/// exponent per level; the error estimate is the spread of the deepest
/// levels. Exactly convergent sequences pass through unchanged.
inline ExtrapolationResult richardson_doubling(const std::vector<double>& values,
                                               int max_levels = 6) {
    ExtrapolationResult out;
    if (values.empty()) return out;
    if (values.size() == 1) {
        out.value = values[0];
        return out;
    }
    std::vector<double> row = values;
    double prev_tail = row.back();
    out.value = row.back();
    out.error_estimate = std::fabs(row.back() - row[row.size() - 2]);
    int levels = std::min<int>(max_levels, static_cast<int>(values.size()) - 1);
    for (int m = 1; m <= levels; ++m) {
        double ratio = std::pow(2.0, 0.5 * m);
        std::vector<double> next(row.size() - 1);
        for (std::size_t j = 0; j + 1 < row.size(); ++j)
            next[j] = (ratio * row[j + 1] - row[j]) / (ratio - 1.0);
        row = std::move(next);
        double tail = row.back();
        double step = std::fabs(tail - prev_tail);
        double intra = row.size() >= 2 ? std::fabs(row.back() - row[row.size() - 2]) : step;
        // keep the level that minimizes the apparent residual
        double err = std::max(step, intra);
        if (m == 1 || err <= out.error_estimate) {
            out.value = tail;
            out.error_estimate = err;
        }
        prev_tail = tail;
    }
    out.reliable = true;
    return out;
}

}  // namespace conewalk
