#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conewalk/cone.hpp"
#include "conewalk/increments.hpp"
#include "conewalk/rng.hpp"
#include "conewalk/survival.hpp"

namespace conewalk {

/// Sub-probability mass function mu_n(y) = P(x + S(n) = y, tau_x > n),
/// keyed by integer lattice offsets from the origin (in mesh units).
struct LatticeMeasure {
    long long step_index = 0;
    std::vector<double> origin;
    double mesh = 0;
    int dim = 0;
    std::vector<std::vector<long long>> points;
    std::vector<double> masses;
    double total = 0;

    std::vector<double> position(std::size_t i) const {
        std::vector<double> p(origin);
        for (int j = 0; j < dim; ++j) p[j] += mesh * static_cast<double>(points[i][j]);
        return p;
    }
};

/// Endpoint law normalized to total mass 1, points divided by sqrt(n).
struct ScaledLaw {
    int dim = 0;
    long long step_index = 0;
    std::vector<std::vector<double>> points;
    std::vector<double> probs;
};

namespace dpdetail {

constexpr int kMaxDim = 3;

/// Internal lattice-walk representation. Active coordinates occupy the TAIL
/// of the padded arrays (slots off() .. kMaxDim-1) so the last, contiguous
/// array dimension is always a real coordinate.
struct Problem {
    int dim = 0;  // active dimension, 1..3
    double mesh = 0;
    std::array<double, kMaxDim> base{};
    std::vector<std::array<int, kMaxDim>> deltas;
    std::vector<double> probs;
    std::vector<Rational> probs_q;
    struct Form {
        double bias = 0;
        std::array<double, kMaxDim> slope{};  // per unit lattice step
    };
    std::vector<Form> forms;
    std::function<double(const std::array<double, kMaxDim>&)> h;  // padded continuous point
    bool gap_reduced = false;
    int full_dim = 0;

    // exact layer (values in mesh units; requires rational geometry)
    bool exact_ok = false;
    std::array<Rational, kMaxDim> base_units{};
    struct FormQ {
        Rational bias;
        std::array<Rational, kMaxDim> slope{};
    };
    std::vector<FormQ> forms_q;
    std::function<Rational(const std::array<Rational, kMaxDim>&)> h_units;

    int off() const { return kMaxDim - dim; }

    std::array<double, kMaxDim> point(const std::array<long long, kMaxDim>& u) const {
        std::array<double, kMaxDim> p{};
        for (int j = 0; j < kMaxDim; ++j) p[j] = base[j] + mesh * static_cast<double>(u[j]);
        return p;
    }
    bool inside(const std::array<long long, kMaxDim>& u) const {
        for (const auto& f : forms) {
            double v = f.bias;
            for (int j = 0; j < kMaxDim; ++j) v += f.slope[j] * static_cast<double>(u[j]);
            if (!(v > 0)) return false;
        }
        return true;
    }
    /// Forms at a padded continuous point (slopes are per unit step).
    bool inside_cont(const std::array<double, kMaxDim>& p) const {
        for (const auto& f : forms) {
            double v = f.bias;
            for (int j = 0; j < kMaxDim; ++j) v += f.slope[j] * ((p[j] - base[j]) / mesh);
            if (!(v > 0)) return false;
        }
        return true;
    }
    /// Exact membership at integer offsets from the base (the bias already
    /// carries the base point).
    bool inside_q_offsets(const std::array<Rational, kMaxDim>& u) const {
        for (const auto& f : forms_q) {
            Rational v = f.bias;
            for (int j = 0; j < kMaxDim; ++j)
                if (f.slope[j] != 0) v += f.slope[j] * u[j];
            if (!(v > 0)) return false;
        }
        return true;
    }
    double h_at(const std::array<long long, kMaxDim>& u) const { return h(point(u)); }

    /// Active coordinates of a padded integer point.
    std::vector<long long> active(const std::array<long long, kMaxDim>& u) const {
        return std::vector<long long>(u.begin() + off(), u.end());
    }
};

inline const LatticeInfo& require_lattice(const IncrementDistribution& dist) {
    if (!dist.lattice())
        throw std::invalid_argument(
            "exact_oracle: " + dist.name() +
            " is not a lattice law; use the walk_engine Monte Carlo estimators instead");
    return *dist.lattice();
}

/// Joint step law over d coordinates from the product of the 1-d unit law,
/// written into padded tail slots starting at `off`.
inline void product_steps(const LatticeInfo& lat, int d, int off,
                          std::vector<std::array<int, kMaxDim>>& deltas,
                          std::vector<double>& probs, std::vector<Rational>& probs_q) {
    std::size_t m = lat.unit_support.size();
    std::size_t count = 1;
    for (int j = 0; j < d; ++j) count *= m;
    deltas.clear();
    probs.clear();
    probs_q.clear();
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::array<int, kMaxDim> del{};
        Rational pq = 1;
        std::size_t rem = idx;
        for (int j = 0; j < d; ++j) {
            std::size_t pick = rem % m;
            rem /= m;
            del[off + j] = static_cast<int>(lat.unit_support[pick]);
            pq *= lat.unit_probs[pick];
        }
        deltas.push_back(del);
        probs_q.push_back(pq);
        probs.push_back(to_double(pq));
    }
}

inline double vandermonde_from_gaps(const double* g, int ngaps) {
    double prod = 1;
    for (int i = 0; i < ngaps; ++i) {
        double s = 0;
        for (int j = i; j < ngaps; ++j) {
            s += g[j];
            prod *= s;
        }
    }
    return prod;
}

inline Problem make_direct_problem(const HarmonicCone& cone, const IncrementDistribution& dist,
                                   const std::vector<double>& x,
                                   const std::vector<Rational>* x_units = nullptr) {
    const LatticeInfo& lat = require_lattice(dist);
    if (cone.dim() > kMaxDim)
        throw std::invalid_argument("exact_oracle: dynamic programming supports dimension <= 3");
    if (static_cast<int>(x.size()) != cone.dim())
        throw std::invalid_argument("dp: start dimension mismatch");
    if (!cone.contains(x)) throw std::domain_error("dp: start not strictly inside the cone");
    Problem pr;
    pr.dim = cone.dim();
    pr.full_dim = cone.dim();
    pr.mesh = lat.mesh;
    int off = pr.off();
    for (int j = 0; j < pr.dim; ++j) pr.base[off + j] = x[j];
    product_steps(lat, pr.dim, off, pr.deltas, pr.probs, pr.probs_q);
    for (const auto& lf : cone.forms()) {
        Problem::Form f{};
        f.bias = lf.value(x);
        for (int j = 0; j < pr.dim; ++j) f.slope[off + j] = lat.mesh * lf.coefficients_double()[j];
        pr.forms.push_back(f);
    }
    const HarmonicCone* cp = &cone;
    int d = pr.dim;
    pr.h = [cp, d, off](const std::array<double, kMaxDim>& p) {
        return cp->evaluate_h(std::span<const double>(p.data() + off, d));
    };
    if (x_units) {
        pr.exact_ok = true;
        for (int j = 0; j < pr.dim; ++j) pr.base_units[off + j] = (*x_units)[j];
        for (const auto& lf : cone.forms()) {
            Problem::FormQ f{};
            Rational bias = 0;
            for (int j = 0; j < pr.dim; ++j) {
                if (!lf.coefficients()[j].is_rational())
                    throw std::invalid_argument("exact mode requires rational form coefficients");
                f.slope[off + j] = lf.coefficients()[j].as_rational();
                bias += f.slope[off + j] * (*x_units)[j];
            }
            f.bias = bias;
            pr.forms_q.push_back(f);
        }
        pr.h_units = [cp, d, off](const std::array<Rational, kMaxDim>& u) {
            Rational prod = 1;
            for (const auto& lf : cp->forms()) {
                Rational v = 0;
                for (int j = 0; j < d; ++j) v += lf.coefficients()[j].as_rational() * u[off + j];
                prod *= v;
            }
            return prod;
        };
    }
    return pr;
}

/// Ordered chambers factor through the consecutive gaps: killing, h and the
/// exit geometry depend on (x_{j+1} - x_j) only, so the chain projects
/// exactly onto a (d-1)-dimensional lattice walk on the positive orthant.
inline Problem make_gap_problem(const HarmonicCone& cone, const IncrementDistribution& dist,
                                const std::vector<double>& x,
                                const std::vector<Rational>* x_units = nullptr) {
    if (cone.family() != ChamberFamily::A)
        throw std::logic_error("gap reduction applies to ordered (type A) chambers only");
    const LatticeInfo& lat = require_lattice(dist);
    int d = cone.dim();
    int ng = d - 1;
    if (ng < 1 || ng > kMaxDim) throw std::invalid_argument("gap reduction: unsupported dimension");
    if (!cone.contains(x)) throw std::domain_error("dp: start not strictly inside the cone");
    Problem pr;
    pr.dim = ng;
    pr.full_dim = d;
    pr.gap_reduced = true;
    pr.mesh = lat.mesh;
    int off = pr.off();
    for (int j = 0; j < ng; ++j) pr.base[off + j] = x[j + 1] - x[j];

    std::vector<std::array<int, kMaxDim>> full_deltas;
    std::vector<double> full_probs;
    std::vector<Rational> full_probs_q;
    product_steps(lat, d, 0, full_deltas, full_probs, full_probs_q);
    std::map<std::array<int, kMaxDim>, Rational> agg;
    for (std::size_t i = 0; i < full_deltas.size(); ++i) {
        std::array<int, kMaxDim> g{};
        for (int j = 0; j < ng; ++j) g[off + j] = full_deltas[i][j + 1] - full_deltas[i][j];
        agg[g] += full_probs_q[i];
    }
    for (const auto& [g, pq] : agg) {
        pr.deltas.push_back(g);
        pr.probs_q.push_back(pq);
        pr.probs.push_back(to_double(pq));
    }
    for (int j = 0; j < ng; ++j) {
        Problem::Form f{};
        f.bias = pr.base[off + j];
        f.slope[off + j] = lat.mesh;
        pr.forms.push_back(f);
    }
    pr.h = [ng, off](const std::array<double, kMaxDim>& g) {
        return vandermonde_from_gaps(g.data() + off, ng);
    };
    if (x_units) {
        pr.exact_ok = true;
        for (int j = 0; j < ng; ++j) pr.base_units[off + j] = (*x_units)[j + 1] - (*x_units)[j];
        for (int j = 0; j < ng; ++j) {
            Problem::FormQ f{};
            f.bias = pr.base_units[off + j];
            f.slope[off + j] = 1;
            pr.forms_q.push_back(f);
        }
        pr.h_units = [ng, off](const std::array<Rational, kMaxDim>& g) {
            Rational prod = 1;
            for (int i = 0; i < ng; ++i) {
                Rational s = 0;
                for (int j = i; j < ng; ++j) {
                    s += g[off + j];
                    prod *= s;
                }
            }
            return prod;
        };
    }
    return pr;
}

inline Problem make_problem(const HarmonicCone& cone, const IncrementDistribution& dist,
                            const std::vector<double>& x, bool allow_gap,
                            const std::vector<Rational>* x_units = nullptr) {
    if (allow_gap && cone.family() == ChamberFamily::A && cone.dim() >= 2 &&
        cone.dim() - 1 <= kMaxDim)
        return make_gap_problem(cone, dist, x, x_units);
    return make_direct_problem(cone, dist, x, x_units);
}

struct DpOptions {
    long long n_max = 0;
    std::vector<long long> checkpoints;  // truncated-h evaluation points
    bool want_exit_h = false;            // per-step E[h(x+S(k)); tau = k]
    bool corrected = false;              // shifted exit h_+ and f occupation
    std::array<double, kMaxDim> shift{};
    std::function<double(const std::array<double, kMaxDim>&)> g1;  // optional occupation
    bool keep_measures = false;
    bool want_final_measure = false;
    std::size_t memory_cap_bytes = std::size_t(3) << 30;
};

struct DpCurve {
    std::vector<double> survival;
    std::vector<double> exit_h;
    std::vector<double> exit_hplus_shifted;
    std::vector<double> f_occupation;
    std::vector<double> g1_occupation;
    std::map<long long, double> truncated_h;
    struct Snapshot {
        std::array<long long, kMaxDim> lo{};
        std::array<long long, kMaxDim> hi{};
        std::vector<double> data;

        std::size_t cells() const {
            std::size_t c = 1;
            for (int j = 0; j < kMaxDim; ++j) c *= static_cast<std::size_t>(hi[j] - lo[j] + 1);
            return c;
        }
        double at(const std::array<long long, kMaxDim>& u) const {
            for (int j = 0; j < kMaxDim; ++j)
                if (u[j] < lo[j] || u[j] > hi[j]) return 0.0;
            std::size_t w1 = static_cast<std::size_t>(hi[1] - lo[1] + 1);
            std::size_t w2 = static_cast<std::size_t>(hi[2] - lo[2] + 1);
            return data[(static_cast<std::size_t>(u[0] - lo[0]) * w1 +
                         static_cast<std::size_t>(u[1] - lo[1])) *
                            w2 +
                        static_cast<std::size_t>(u[2] - lo[2])];
        }
        template <typename F>
        void for_each(F&& fn) const {
            std::size_t idx = 0;
            for (long long p0 = lo[0]; p0 <= hi[0]; ++p0)
                for (long long p1 = lo[1]; p1 <= hi[1]; ++p1)
                    for (long long p2 = lo[2]; p2 <= hi[2]; ++p2) {
                        double m = data[idx++];
                        if (m > 0) fn(std::array<long long, kMaxDim>{p0, p1, p2}, m);
                    }
        }
    };
    std::vector<Snapshot> snapshots;
    Snapshot final_snapshot;
    bool has_final = false;
};

/// Dense killed-lattice dynamic programming over a box, with per-row inside
/// intervals (the cones are convex, so each row meets K in one segment).
class DenseEngine {
public:
    DenseEngine(const Problem& pr, const DpOptions& opt) : pr_(pr), opt_(opt) {
        long long n = std::max<long long>(opt.n_max, 1);
        for (int j = 0; j < kMaxDim; ++j) {
            int mind = 0, maxd = 0;
            for (const auto& d : pr.deltas) {
                mind = std::min(mind, d[j]);
                maxd = std::max(maxd, d[j]);
            }
            mind_[j] = mind;
            maxd_[j] = maxd;
            lo_[j] = static_cast<long long>(mind) * n - 1;
            hi_[j] = static_cast<long long>(maxd) * n + 1;
            size_[j] = hi_[j] - lo_[j] + 1;
        }
        std::size_t cells = 1;
        for (int j = 0; j < kMaxDim; ++j) cells *= static_cast<std::size_t>(size_[j]);
        std::size_t bytes = cells * sizeof(double) * 2;
        if (bytes > opt.memory_cap_bytes) {
            std::ostringstream os;
            os << "dp: horizon " << opt.n_max << " needs about " << (bytes >> 20)
               << " MiB of state (cap " << (opt.memory_cap_bytes >> 20)
               << " MiB); reduce the horizon or raise the memory cap";
            throw std::invalid_argument(os.str());
        }
        cur_.assign(cells, 0.0);
        nxt_.assign(cells, 0.0);
        rows_ = static_cast<std::size_t>(size_[0]) * static_cast<std::size_t>(size_[1]);
        rowA_.assign(rows_, 1);
        rowB_.assign(rows_, 0);
        precompute_rows();
    }

    DpCurve run() {
        DpCurve out;
        long long n = opt_.n_max;
        out.survival.assign(n + 1, 0.0);
        out.exit_h.assign(n + 1, 0.0);
        out.exit_hplus_shifted.assign(n + 1, 0.0);
        out.f_occupation.assign(n + 1, 0.0);
        out.g1_occupation.assign(n + 1, 0.0);

        std::array<long long, kMaxDim> zero{};
        if (!pr_.inside(zero))
            throw std::domain_error("dp: starting point not strictly inside the cone");
        cur_[index_of(zero)] = 1.0;
        out.survival[0] = 1.0;
        std::set<long long> cps(opt_.checkpoints.begin(), opt_.checkpoints.end());
        if (cps.count(0)) out.truncated_h[0] = pr_.h_at(zero);
        if (opt_.keep_measures) out.snapshots.push_back(snapshot(0));
        if (opt_.corrected) out.f_occupation[0] = f_occupation_sum(0);
        if (opt_.g1) out.g1_occupation[0] = g1_occupation_sum(0);

        for (long long k = 1; k <= n; ++k) {
            double outflow = 0, eh = 0, ehp = 0;
            step(k, outflow, eh, ehp);
            out.survival[k] = std::max(0.0, out.survival[k - 1] - outflow);
            out.exit_h[k] = eh;
            out.exit_hplus_shifted[k] = ehp;
            std::swap(cur_, nxt_);
            if (cps.count(k)) out.truncated_h[k] = weighted_h_sum(k);
            if (opt_.keep_measures) out.snapshots.push_back(snapshot(k));
            if (k < n) {
                if (opt_.corrected) out.f_occupation[k] = f_occupation_sum(k);
                if (opt_.g1) out.g1_occupation[k] = g1_occupation_sum(k);
            }
        }
        if (opt_.want_final_measure) {
            out.final_snapshot = snapshot(n);
            out.has_final = true;
        }
        return out;
    }

    static std::size_t estimate_bytes(const Problem& pr, long long n) {
        std::size_t cells = 1;
        for (int j = 0; j < kMaxDim; ++j) {
            int mind = 0, maxd = 0;
            for (const auto& d : pr.deltas) {
                mind = std::min(mind, d[j]);
                maxd = std::max(maxd, d[j]);
            }
            cells *= static_cast<std::size_t>((maxd - mind) * n + 3);
        }
        return cells * sizeof(double) * 2;
    }

private:
    std::size_t index_of(const std::array<long long, kMaxDim>& u) const {
        return (static_cast<std::size_t>(u[0] - lo_[0]) * size_[1] +
                static_cast<std::size_t>(u[1] - lo_[1])) *
                   size_[2] +
               static_cast<std::size_t>(u[2] - lo_[2]);
    }

    void precompute_rows() {
        for (long long p0 = lo_[0]; p0 <= hi_[0]; ++p0) {
            for (long long p1 = lo_[1]; p1 <= hi_[1]; ++p1) {
                long long a = lo_[2], b = hi_[2];
                bool empty = false;
                for (const auto& f : pr_.forms) {
                    double partial = f.bias + f.slope[0] * static_cast<double>(p0) +
                                     f.slope[1] * static_cast<double>(p1);
                    double s = f.slope[2];
                    if (s == 0) {
                        if (!(partial > 0)) {
                            empty = true;
                            break;
                        }
                    } else {
                        double t = -partial / s;
                        double eps = 1e-9 * std::max(1.0, std::fabs(t));
                        if (s > 0)
                            a = std::max(a, static_cast<long long>(std::ceil(t + eps)));
                        else
                            b = std::min(b, static_cast<long long>(std::floor(t - eps)));
                    }
                }
                std::size_t r = static_cast<std::size_t>(p0 - lo_[0]) * size_[1] +
                                static_cast<std::size_t>(p1 - lo_[1]);
                if (empty || a > b) {
                    rowA_[r] = 1;
                    rowB_[r] = 0;
                } else {
                    rowA_[r] = a;
                    rowB_[r] = b;
                }
            }
        }
    }

    void step(long long k, double& outflow, double& eh, double& ehp) {
        for (long long p0 = k * mind_[0]; p0 <= k * maxd_[0]; ++p0)
            for (long long p1 = k * mind_[1]; p1 <= k * maxd_[1]; ++p1) {
                std::size_t base = (static_cast<std::size_t>(p0 - lo_[0]) * size_[1] +
                                    static_cast<std::size_t>(p1 - lo_[1])) *
                                   size_[2];
                long long wa = k * mind_[2], wb = k * maxd_[2];
                std::memset(nxt_.data() + base + (wa - lo_[2]), 0,
                            sizeof(double) * static_cast<std::size_t>(wb - wa + 1));
            }
        long long km1 = k - 1;
        for (long long p0 = km1 * mind_[0]; p0 <= km1 * maxd_[0]; ++p0) {
            for (long long p1 = km1 * mind_[1]; p1 <= km1 * maxd_[1]; ++p1) {
                std::size_t r = static_cast<std::size_t>(p0 - lo_[0]) * size_[1] +
                                static_cast<std::size_t>(p1 - lo_[1]);
                long long sa = std::max(rowA_[r], km1 * mind_[2]);
                long long sb = std::min(rowB_[r], km1 * maxd_[2]);
                if (sa > sb) continue;
                const double* src = cur_.data() + r * size_[2] + (sa - lo_[2]);
                for (std::size_t si = 0; si < pr_.deltas.size(); ++si) {
                    const auto& d = pr_.deltas[si];
                    double q = pr_.probs[si];
                    long long q0 = p0 + d[0], q1 = p1 + d[1];
                    std::size_t rr = static_cast<std::size_t>(q0 - lo_[0]) * size_[1] +
                                     static_cast<std::size_t>(q1 - lo_[1]);
                    long long ja = std::max(sa, rowA_[rr] - d[2]);
                    long long jb = std::min(sb, rowB_[rr] - d[2]);
                    if (ja <= jb) {
                        double* dst = nxt_.data() + rr * size_[2] + (ja + d[2] - lo_[2]);
                        const double* s2 = src + (ja - sa);
                        std::size_t m = static_cast<std::size_t>(jb - ja + 1);
                        for (std::size_t t = 0; t < m; ++t) dst[t] += q * s2[t];
                    }
                    auto handle_exit = [&](long long from, long long to) {
                        for (long long j = from; j <= to; ++j) {
                            double mass = src[j - sa];
                            if (mass == 0.0) continue;
                            double flow = q * mass;
                            outflow += flow;
                            if (opt_.want_exit_h || opt_.corrected) {
                                std::array<long long, kMaxDim> u{p0 + d[0], p1 + d[1], j + d[2]};
                                if (opt_.want_exit_h) eh += flow * pr_.h_at(u);
                                if (opt_.corrected) {
                                    auto p = pr_.point(u);
                                    for (int jj = 0; jj < kMaxDim; ++jj) p[jj] += opt_.shift[jj];
                                    if (pr_.inside_cont(p)) ehp += flow * pr_.h(p);
                                }
                            }
                        }
                    };
                    if (ja > jb) {
                        handle_exit(sa, sb);
                    } else {
                        if (sa < ja) handle_exit(sa, ja - 1);
                        if (jb < sb) handle_exit(jb + 1, sb);
                    }
                }
            }
        }
    }

    double weighted_h_sum(long long k) const {
        double acc = 0;
        for_each_mass(k, [&](const std::array<long long, kMaxDim>& u, double m) {
            acc += m * pr_.h_at(u);
        });
        return acc;
    }

    double f_occupation_sum(long long k) const {
        double acc = 0;
        for_each_mass(k, [&](const std::array<long long, kMaxDim>& u, double m) {
            auto p = pr_.point(u);
            for (int j = 0; j < kMaxDim; ++j) p[j] += opt_.shift[j];
            acc += m * one_step_defect_at(p);
        });
        return acc;
    }

    double g1_occupation_sum(long long k) const {
        double acc = 0;
        for_each_mass(k, [&](const std::array<long long, kMaxDim>& u, double m) {
            acc += m * opt_.g1(pr_.point(u));
        });
        return acc;
    }

    // f(z) = E[h(z + X); z + X in K] - h(z) by support enumeration
    double one_step_defect_at(const std::array<double, kMaxDim>& z) const {
        double acc = -pr_.h(z);
        for (std::size_t si = 0; si < pr_.deltas.size(); ++si) {
            std::array<double, kMaxDim> p = z;
            for (int j = 0; j < kMaxDim; ++j)
                p[j] += pr_.mesh * static_cast<double>(pr_.deltas[si][j]);
            if (pr_.inside_cont(p)) acc += pr_.probs[si] * pr_.h(p);
        }
        return acc;
    }

    template <typename F>
    void for_each_mass(long long k, F&& fn) const {
        for (long long p0 = k * mind_[0]; p0 <= k * maxd_[0]; ++p0) {
            for (long long p1 = k * mind_[1]; p1 <= k * maxd_[1]; ++p1) {
                std::size_t r = static_cast<std::size_t>(p0 - lo_[0]) * size_[1] +
                                static_cast<std::size_t>(p1 - lo_[1]);
                long long a = std::max(rowA_[r], k * mind_[2]);
                long long b = std::min(rowB_[r], k * maxd_[2]);
                const double* src = cur_.data() + r * size_[2];
                for (long long j = a; j <= b; ++j) {
                    double m = src[j - lo_[2]];
                    if (m != 0.0) fn(std::array<long long, kMaxDim>{p0, p1, j}, m);
                }
            }
        }
    }

    DpCurve::Snapshot snapshot(long long k) const {
        DpCurve::Snapshot s;
        for (int j = 0; j < kMaxDim; ++j) {
            s.lo[j] = std::max(lo_[j], k * mind_[j]);
            s.hi[j] = std::min(hi_[j], k * maxd_[j]);
        }
        s.data.assign(s.cells(), 0.0);
        std::size_t w1 = static_cast<std::size_t>(s.hi[1] - s.lo[1] + 1);
        std::size_t w2 = static_cast<std::size_t>(s.hi[2] - s.lo[2] + 1);
        for_each_mass(k, [&](const std::array<long long, kMaxDim>& u, double m) {
            s.data[(static_cast<std::size_t>(u[0] - s.lo[0]) * w1 +
                    static_cast<std::size_t>(u[1] - s.lo[1])) *
                       w2 +
                   static_cast<std::size_t>(u[2] - s.lo[2])] = m;
        });
        return s;
    }

    const Problem& pr_;
    const DpOptions& opt_;
    std::array<long long, kMaxDim> lo_{}, hi_{}, size_{};
    std::array<int, kMaxDim> mind_{}, maxd_{};
    std::vector<double> cur_, nxt_;
    std::size_t rows_ = 0;
    std::vector<long long> rowA_, rowB_;
};

struct ExactResult {
    Rational survival;
    Rational truncated_h_units;
    std::map<std::vector<long long>, Rational> endpoint;  // active offsets
    std::vector<Rational> per_step_survival;
    std::vector<Rational> per_step_exit_h_units;
    std::vector<Rational> per_step_truncated_h_units;
    std::vector<std::map<std::vector<long long>, Rational>> measures;  // when kept
};

/// Exact sparse dynamic programming over rational masses. Used for the
/// bit-exactness gate and the small-n martingale identities; capped to
/// modest n by design.
inline ExactResult dp_exact_run(const Problem& pr, long long n, bool want_exit_h,
                                bool keep_measures = false) {
    if (!pr.exact_ok) throw std::logic_error("dp_exact_run: problem lacks exact layer");
    using Key = std::vector<long long>;
    std::map<Key, Rational> cur;
    cur[Key(pr.dim, 0)] = 1;
    ExactResult out;
    out.per_step_survival.assign(n + 1, Rational(0));
    out.per_step_exit_h_units.assign(n + 1, Rational(0));
    out.per_step_truncated_h_units.assign(n + 1, Rational(0));
    out.per_step_survival[0] = 1;
    int off = pr.off();
    auto h_at = [&](const Key& u) {
        std::array<Rational, kMaxDim> p{};
        for (int j = 0; j < pr.dim; ++j) p[off + j] = pr.base_units[off + j] + u[j];
        return pr.h_units(p);
    };
    auto inside = [&](const Key& u) {
        std::array<Rational, kMaxDim> p{};
        for (int j = 0; j < pr.dim; ++j) p[off + j] = u[j];
        return pr.inside_q_offsets(p);
    };
    if (!inside(Key(pr.dim, 0)))
        throw std::domain_error("dp_exact: starting point not strictly inside the cone");
    out.per_step_truncated_h_units[0] = h_at(Key(pr.dim, 0));
    if (keep_measures) out.measures.push_back(cur);
    for (long long k = 1; k <= n; ++k) {
        std::map<Key, Rational> nxt;
        Rational exit_h = 0, alive = 0, trunc = 0;
        for (const auto& [u, m] : cur) {
            for (std::size_t si = 0; si < pr.deltas.size(); ++si) {
                Key v(u);
                for (int j = 0; j < pr.dim; ++j) v[j] += pr.deltas[si][off + j];
                Rational flow = m * pr.probs_q[si];
                if (inside(v)) {
                    nxt[v] += flow;
                } else if (want_exit_h) {
                    exit_h += flow * h_at(v);
                }
            }
        }
        for (const auto& [u, m] : nxt) {
            alive += m;
            trunc += m * h_at(u);
        }
        out.per_step_survival[k] = alive;
        out.per_step_exit_h_units[k] = exit_h;
        out.per_step_truncated_h_units[k] = trunc;
        cur = std::move(nxt);
        if (keep_measures) out.measures.push_back(cur);
    }
    out.survival = out.per_step_survival[n];
    out.truncated_h_units = out.per_step_truncated_h_units[n];
    out.endpoint = std::move(cur);
    return out;
}

}  // namespace dpdetail

// ---------------------------------------------------------------------------
// public exact-oracle interface
// ---------------------------------------------------------------------------

inline LatticeMeasure measure_from_snapshot(const dpdetail::Problem& pr,
                                            const dpdetail::DpCurve::Snapshot& s,
                                            long long step_index) {
    LatticeMeasure out;
    out.step_index = step_index;
    out.origin.assign(pr.base.begin() + pr.off(), pr.base.end());
    out.mesh = pr.mesh;
    out.dim = pr.dim;
    double total = 0;
    s.for_each([&](const std::array<long long, dpdetail::kMaxDim>& u, double m) {
        if (!pr.inside(u))
            throw std::logic_error("lattice measure: support touches the boundary");
        out.points.push_back(pr.active(u));
        out.masses.push_back(m);
        total += m;
    });
    out.total = total;
    return out;
}

/// mu_n as a float measure over original lattice coordinates.
inline LatticeMeasure dp_survival_measure(const HarmonicCone& cone,
                                          const std::vector<double>& x,
                                          const IncrementDistribution& dist, long long n,
                                          std::size_t memory_cap_bytes = std::size_t(3) << 30) {
    auto pr = dpdetail::make_direct_problem(cone, dist, x);
    dpdetail::DpOptions opt;
    opt.n_max = n;
    opt.want_final_measure = true;
    opt.memory_cap_bytes = memory_cap_bytes;
    dpdetail::DenseEngine eng(pr, opt);
    auto curve = eng.run();
    return measure_from_snapshot(pr, curve.final_snapshot, n);
}

/// Exact survival curve (method dp_exact, zero standard errors). Ordered
/// chambers run in gap coordinates; the reduction is validated in tests.
inline SurvivalCurve dp_survival_prob(const HarmonicCone& cone, const std::vector<double>& x,
                                      const IncrementDistribution& dist,
                                      const std::vector<long long>& horizons,
                                      std::size_t memory_cap_bytes = std::size_t(3) << 30) {
    if (horizons.empty()) throw std::invalid_argument("dp_survival_prob: no horizons");
    auto pr = dpdetail::make_problem(cone, dist, x, /*allow_gap=*/true);
    dpdetail::DpOptions opt;
    opt.n_max = horizons.back();
    opt.memory_cap_bytes = memory_cap_bytes;
    dpdetail::DenseEngine eng(pr, opt);
    auto curve = eng.run();
    SurvivalCurve sc;
    sc.cone_label = cone.label();
    sc.start = x;
    sc.method = "dp_exact";
    for (long long h : horizons) {
        if (h < 0 || h > opt.n_max) throw std::invalid_argument("dp_survival_prob: bad horizon");
        sc.horizons.push_back(h);
        sc.estimates.push_back(curve.survival[h]);
        sc.std_errors.push_back(0.0);
    }
    sc.validate();
    return sc;
}

inline double dp_truncated_h(const HarmonicCone& cone, const std::vector<double>& x,
                             const IncrementDistribution& dist, long long n,
                             std::size_t memory_cap_bytes = std::size_t(3) << 30) {
    auto pr = dpdetail::make_problem(cone, dist, x, true);
    dpdetail::DpOptions opt;
    opt.n_max = n;
    opt.checkpoints = {n};
    opt.memory_cap_bytes = memory_cap_bytes;
    dpdetail::DenseEngine eng(pr, opt);
    return eng.run().truncated_h.at(n);
}

/// Endpoint law given survival, points scaled by sqrt(n), original coordinates.
inline ScaledLaw dp_conditional_endpoint(const HarmonicCone& cone, const std::vector<double>& x,
                                         const IncrementDistribution& dist, long long n) {
    auto mu = dp_survival_measure(cone, x, dist, n);
    if (!(mu.total > 0)) throw std::domain_error("dp_conditional_endpoint: zero survival mass");
    ScaledLaw law;
    law.dim = mu.dim;
    law.step_index = n;
    double sq = std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < mu.points.size(); ++i) {
        auto p = mu.position(i);
        for (auto& c : p) c /= sq;
        law.points.push_back(std::move(p));
        law.probs.push_back(mu.masses[i] / mu.total);
    }
    return law;
}

/// Endpoint law of the consecutive gaps for ordered chambers, scaled by sqrt(n).
inline ScaledLaw dp_conditional_endpoint_gaps(const HarmonicCone& cone,
                                              const std::vector<double>& x,
                                              const IncrementDistribution& dist, long long n,
                                              std::size_t memory_cap_bytes = std::size_t(3)
                                                                             << 30) {
    auto pr = dpdetail::make_gap_problem(cone, dist, x);
    dpdetail::DpOptions opt;
    opt.n_max = n;
    opt.want_final_measure = true;
    opt.memory_cap_bytes = memory_cap_bytes;
    dpdetail::DenseEngine eng(pr, opt);
    auto curve = eng.run();
    auto mu = measure_from_snapshot(pr, curve.final_snapshot, n);
    if (!(mu.total > 0)) throw std::domain_error("dp_conditional_endpoint: zero survival mass");
    ScaledLaw law;
    law.dim = mu.dim;
    law.step_index = n;
    double sq = std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < mu.points.size(); ++i) {
        auto p = mu.position(i);
        for (auto& c : p) c /= sq;
        law.points.push_back(std::move(p));
        law.probs.push_back(mu.masses[i] / mu.total);
    }
    return law;
}

// exact variants -------------------------------------------------------------

struct ExactOracleResult {
    Rational survival;
    Rational truncated_h_units;  // h in mesh units: actual h = mesh^p * value
    QuadExt truncated_h;
    std::map<std::vector<long long>, Rational> endpoint;
};

inline ExactOracleResult dp_exact(const HarmonicCone& cone, const std::vector<Rational>& x_units,
                                  const IncrementDistribution& dist, long long n,
                                  bool use_gap = false) {
    const auto& lat = dpdetail::require_lattice(dist);
    std::vector<double> x(cone.dim());
    for (int j = 0; j < cone.dim(); ++j) x[j] = to_double(x_units[j]) * lat.mesh;
    auto pr = use_gap ? dpdetail::make_gap_problem(cone, dist, x, &x_units)
                      : dpdetail::make_direct_problem(cone, dist, x, &x_units);
    auto res = dpdetail::dp_exact_run(pr, n, false);
    ExactOracleResult out;
    out.survival = res.survival;
    out.truncated_h_units = res.truncated_h_units;
    out.truncated_h = radical_power(lat.mesh_sq, cone.degree_p()) * QuadExt(res.truncated_h_units);
    out.endpoint = std::move(res.endpoint);
    return out;
}

/// Exhaustive enumeration over step sequences: the oracle of last resort.
inline ExactOracleResult brute_force_enumerate(const HarmonicCone& cone,
                                               const std::vector<Rational>& x_units,
                                               const IncrementDistribution& dist, long long n,
                                               double budget = 1e8) {
    const auto& lat = dpdetail::require_lattice(dist);
    std::vector<double> x(cone.dim());
    for (int j = 0; j < cone.dim(); ++j) x[j] = to_double(x_units[j]) * lat.mesh;
    auto pr = dpdetail::make_direct_problem(cone, dist, x, &x_units);
    double paths = std::pow(static_cast<double>(pr.deltas.size()), static_cast<double>(n));
    if (paths > budget) {
        std::ostringstream os;
        os << "brute_force_enumerate: " << pr.deltas.size() << "^" << n
           << " step sequences exceed the budget " << budget;
        throw std::invalid_argument(os.str());
    }
    int off = pr.off();
    ExactOracleResult out;
    out.survival = 0;
    out.truncated_h_units = 0;
    auto position_units = [&](const std::vector<long long>& v) {
        std::array<Rational, dpdetail::kMaxDim> p{};
        for (int j = 0; j < pr.dim; ++j) p[off + j] = pr.base_units[off + j] + v[j];
        return p;
    };
    auto inside = [&](const std::vector<long long>& v) {
        std::array<Rational, dpdetail::kMaxDim> p{};
        for (int j = 0; j < pr.dim; ++j) p[off + j] = v[j];
        return pr.inside_q_offsets(p);
    };
    std::vector<long long> u(pr.dim, 0);
    std::function<void(long long, std::vector<long long>&, const Rational&)> rec =
        [&](long long k, std::vector<long long>& pos, const Rational& prob) {
            if (k == n) {
                out.survival += prob;
                out.truncated_h_units += prob * pr.h_units(position_units(pos));
                out.endpoint[pos] += prob;
                return;
            }
            for (std::size_t si = 0; si < pr.deltas.size(); ++si) {
                for (int j = 0; j < pr.dim; ++j) pos[j] += pr.deltas[si][off + j];
                if (inside(pos)) rec(k + 1, pos, prob * pr.probs_q[si]);
                for (int j = 0; j < pr.dim; ++j) pos[j] -= pr.deltas[si][off + j];
            }
        };
    rec(0, u, Rational(1));
    out.truncated_h = radical_power(lat.mesh_sq, cone.degree_p()) * QuadExt(out.truncated_h_units);
    return out;
}

}  // namespace conewalk
