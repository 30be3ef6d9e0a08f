#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace conewalk {

/// Outcome of one simulated trajectory, horizon-capped.
struct ExitRecord {
    long long exit_time = 0;  // exit step if <= horizon, else horizon
    bool survived = false;    // exit time > horizon
    std::vector<double> final_position;
};

/// P(tau_x > n) estimates over a horizon grid.
struct SurvivalCurve {
    std::string cone_label;
    std::vector<double> start;
    std::vector<long long> horizons;
    std::vector<double> estimates;
    std::vector<double> std_errors;
    std::string method;  // "mc" | "splitting" | "dp_exact"
    long long trials = 0;
    std::uint64_t seed = 0;
    std::optional<long long> extinct_at;  // splitting only: level where all particles died

    void validate() const {
        if (horizons.size() != estimates.size() || horizons.size() != std_errors.size())
            throw std::logic_error("SurvivalCurve: ragged columns");
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            if (i > 0 && horizons[i] <= horizons[i - 1])
                throw std::logic_error("SurvivalCurve: horizons not increasing");
            if (i > 0 && estimates[i] > estimates[i - 1] + 1e-15)
                throw std::logic_error("SurvivalCurve: estimates increase with horizon");
            if (estimates[i] < 0 || estimates[i] > 1)
                throw std::logic_error("SurvivalCurve: estimate outside [0,1]");
            if (std_errors[i] < 0) throw std::logic_error("SurvivalCurve: negative std error");
            if (method == "dp_exact" && std_errors[i] != 0)
                throw std::logic_error("SurvivalCurve: dp_exact must have zero std errors");
        }
    }
};

inline std::string join_coords(const std::vector<double>& x, char sep = ';') {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << sep;
        os << x[i];
    }
    return os.str();
}

inline void write_survival_csv(std::ostream& os, const std::vector<SurvivalCurve>& curves,
                               const std::string& header_comment = {}) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "cone_label,x,n,estimate,std_error,method,trials,seed\n";
    os.precision(17);
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.horizons.size(); ++i) {
            os << c.cone_label << "," << join_coords(c.start) << "," << c.horizons[i] << ","
               << c.estimates[i] << "," << c.std_errors[i] << "," << c.method << "," << c.trials
               << "," << c.seed << "\n";
        }
    }
}

}  // namespace conewalk
