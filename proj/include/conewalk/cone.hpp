#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conewalk/polynomial.hpp"
#include "conewalk/rational.hpp"

namespace conewalk {

/// One linear form <x, alpha> of the cone's defining product.
class LinearForm {
public:
    explicit LinearForm(std::vector<QuadExt> coeffs) : exact_(std::move(coeffs)) {
        bool nonzero = false;
        dbl_.reserve(exact_.size());
        double s = 0;
        for (const auto& c : exact_) {
            if (!c.is_zero()) nonzero = true;
            double v = c.value();
            dbl_.push_back(v);
            s += v * v;
        }
        if (!nonzero) throw std::invalid_argument("LinearForm: all coefficients zero");
        norm_ = std::sqrt(s);
    }

    static LinearForm from_rationals(const std::vector<Rational>& coeffs) {
        std::vector<QuadExt> c(coeffs.begin(), coeffs.end());
        return LinearForm(std::move(c));
    }

    int dim() const { return static_cast<int>(exact_.size()); }
    const std::vector<QuadExt>& coefficients() const { return exact_; }
    const std::vector<double>& coefficients_double() const { return dbl_; }
    double norm() const { return norm_; }

    double value(std::span<const double> x) const {
        double s = 0;
        for (std::size_t j = 0; j < dbl_.size(); ++j) s += dbl_[j] * x[j];
        return s;
    }

    QuadExt value_exact(std::span<const QuadExt> x) const {
        QuadExt s(0);
        for (std::size_t j = 0; j < exact_.size(); ++j) s += exact_[j] * x[j];
        return s;
    }

private:
    std::vector<QuadExt> exact_;
    std::vector<double> dbl_;
    double norm_;
};

enum class ChamberFamily { A, C, D, General };

inline std::string family_name(ChamberFamily f) {
    switch (f) {
        case ChamberFamily::A: return "A";
        case ChamberFamily::C: return "C";
        case ChamberFamily::D: return "D";
        default: return "general";
    }
}

/// A cone cut out by linear forms together with the product polynomial
/// h(x) = prod <x, alpha_i>, its degrees, an interior direction and the
/// shift radius used by the corrected harmonic-function representation.
class HarmonicCone {
public:
    int dim() const { return dim_; }
    const std::vector<LinearForm>& forms() const { return forms_; }
    const SparsePolynomial<QuadExt>& h_expanded() const { return h_exact_; }
    const SparsePolynomial<double>& h_expanded_double() const { return h_dbl_; }
    int degree_p() const { return degree_p_; }
    int degree_r() const { return degree_r_; }
    const std::vector<double>& interior_direction() const { return x0_; }
    double shift_radius() const { return shift_R_; }
    const std::string& label() const { return label_; }
    ChamberFamily family() const { return family_; }

    /// h(x) evaluated through the factored form; exact zero on any form's
    /// hyperplane, sign = parity of negative factors outside the cone.
    double evaluate_h(std::span<const double> x) const {
        check_dim(x.size());
        double prod = 1;
        for (const auto& f : forms_) prod *= f.value(x);
        return prod;
    }

    QuadExt evaluate_h_exact(std::span<const QuadExt> x) const {
        check_dim(x.size());
        QuadExt prod(1);
        for (const auto& f : forms_) prod *= f.value_exact(x);
        return prod;
    }

    /// Strict membership via the forms (h's sign alone is not sufficient:
    /// an even number of negative factors makes h positive outside K).
    bool contains(std::span<const double> x) const {
        check_dim(x.size());
        for (const auto& f : forms_)
            if (!(f.value(x) > 0)) return false;
        return true;
    }

    bool contains_exact(std::span<const QuadExt> x) const {
        check_dim(x.size());
        for (const auto& f : forms_)
            if (f.value_exact(x).sign() <= 0) return false;
        return true;
    }

    /// min_i <x, alpha_i>/|alpha_i|. Equals dist(x, boundary) for the
    /// ordered-coordinate chambers; a certified lower bound in general.
    double boundary_distance(std::span<const double> x) const {
        if (!contains(x)) throw std::domain_error("boundary_distance: point not inside cone");
        double m = std::numeric_limits<double>::infinity();
        for (const auto& f : forms_) m = std::min(m, f.value(x) / f.norm());
        return m;
    }

    std::vector<double> shifted(std::span<const double> x, double t) const {
        std::vector<double> y(x.begin(), x.end());
        for (int j = 0; j < dim_; ++j) y[j] += t * x0_[j];
        return y;
    }

    static HarmonicCone weyl_chamber(ChamberFamily family, int d);
    static HarmonicCone polynomial_cone(std::vector<LinearForm> forms,
                                        std::optional<std::vector<double>> x0 = std::nullopt,
                                        std::optional<double> R = std::nullopt,
                                        std::string label = {});

private:
    HarmonicCone() = default;

    void check_dim(std::size_t n) const {
        if (static_cast<int>(n) != dim_) throw std::invalid_argument("HarmonicCone: dimension mismatch");
    }

    static void finalize(HarmonicCone& cone, std::optional<std::vector<double>> x0,
                         std::optional<double> R);

    int dim_ = 0;
    ChamberFamily family_ = ChamberFamily::General;
    std::vector<LinearForm> forms_;
    SparsePolynomial<QuadExt> h_exact_;
    SparsePolynomial<double> h_dbl_;
    int degree_p_ = 0;
    int degree_r_ = 0;
    std::vector<double> x0_;
    double shift_R_ = 0;
    std::string label_;
};

namespace detail {

inline std::vector<double> normalized(std::vector<double> v) {
    double s = 0;
    for (double c : v) s += c * c;
    s = std::sqrt(s);
    if (s == 0) throw std::invalid_argument("normalized: zero vector");
    for (double& c : v) c /= s;
    return v;
}

/// Maximize min_i <u, alpha_i/|alpha_i|> over unit u by projected
/// subgradient ascent, started from the normalized sum of normalized forms.
inline std::vector<double> maximin_direction(const std::vector<LinearForm>& forms, int dim) {
    std::vector<double> u(dim, 0.0);
    for (const auto& f : forms)
        for (int j = 0; j < dim; ++j) u[j] += f.coefficients_double()[j] / f.norm();
    u = normalized(std::move(u));
    auto score = [&](const std::vector<double>& v) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& f : forms) m = std::min(m, f.value(v) / f.norm());
        return m;
    };
    double step = 0.5;
    double best = score(u);
    for (int it = 0; it < 400; ++it) {
        // subgradient: normalized coefficients of the active (minimal) form
        std::size_t arg = 0;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < forms.size(); ++i) {
            double v = forms[i].value(u) / forms[i].norm();
            if (v < m) { m = v; arg = i; }
        }
        std::vector<double> cand(u);
        const auto& g = forms[arg].coefficients_double();
        for (int j = 0; j < dim; ++j) cand[j] += step * g[j] / forms[arg].norm();
        cand = normalized(std::move(cand));
        double s = score(cand);
        if (s > best) {
            best = s;
            u = std::move(cand);
        } else {
            step *= 0.7;
        }
    }
    if (!(best > 0))
        throw std::invalid_argument("maximin_direction: no interior direction found (cone empty?)");
    return u;
}

}  // namespace detail

inline void HarmonicCone::finalize(HarmonicCone& cone, std::optional<std::vector<double>> x0,
                                   std::optional<double> R) {
    // expand the product and check harmonicity exactly
    cone.h_exact_ = SparsePolynomial<QuadExt>::constant(cone.dim_, QuadExt(1));
    for (const auto& f : cone.forms_)
        cone.h_exact_ = cone.h_exact_ * SparsePolynomial<QuadExt>::linear(f.coefficients());
    auto lap = laplacian(cone.h_exact_);
    if (!lap.is_zero()) {
        std::ostringstream os;
        os << "polynomial_cone: product of forms is not harmonic; Laplacian residual = "
           << lap.to_string();
        throw std::invalid_argument(os.str());
    }
    cone.h_dbl_ = cone.h_exact_.to_double();
    cone.degree_p_ = static_cast<int>(cone.forms_.size());
    cone.degree_r_ = cone.h_exact_.max_variable_degree();

    cone.x0_ = x0 ? detail::normalized(std::move(*x0))
                  : detail::maximin_direction(cone.forms_, cone.dim_);
    double minval = std::numeric_limits<double>::infinity();
    for (const auto& f : cone.forms_) minval = std::min(minval, f.value(cone.x0_) / f.norm());
    if (!(minval > 0))
        throw std::invalid_argument("HarmonicCone: interior direction not strictly inside");
    double rmin = 1.0 / minval;
    cone.shift_R_ = R ? *R : rmin;
    if (cone.shift_R_ * minval < 1.0 - 1e-9)
        throw std::invalid_argument("HarmonicCone: shift radius too small for this direction");
}

inline HarmonicCone HarmonicCone::weyl_chamber(ChamberFamily family, int d) {
    int dmin = family == ChamberFamily::C ? 1 : 2;
    if (d < dmin)
        throw std::invalid_argument("weyl_chamber: dimension below minimum for family");
    HarmonicCone cone;
    cone.dim_ = d;
    cone.family_ = family;
    auto pair_form = [d](int i, int j, int sign_i) {
        // x_j + sign_i * x_i, i < j
        std::vector<Rational> c(d, 0);
        c[j] = 1;
        c[i] = sign_i;
        return LinearForm::from_rationals(c);
    };
    std::vector<double> x0(d);
    switch (family) {
        case ChamberFamily::A: {
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) cone.forms_.push_back(pair_form(i, j, -1));
            double mean = (d + 1) / 2.0;
            for (int i = 0; i < d; ++i) x0[i] = (i + 1) - mean;
            break;
        }
        case ChamberFamily::D: {
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) {
                    cone.forms_.push_back(pair_form(i, j, -1));
                    cone.forms_.push_back(pair_form(i, j, +1));
                }
            for (int i = 0; i < d; ++i) x0[i] = i;
            break;
        }
        case ChamberFamily::C: {
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) {
                    cone.forms_.push_back(pair_form(i, j, -1));
                    cone.forms_.push_back(pair_form(i, j, +1));
                }
            for (int i = 0; i < d; ++i) {
                std::vector<Rational> c(d, 0);
                c[i] = 1;
                cone.forms_.push_back(LinearForm::from_rationals(c));
            }
            for (int i = 0; i < d; ++i) x0[i] = i + 1;
            break;
        }
        default:
            throw std::invalid_argument("weyl_chamber: invalid family tag");
    }
    cone.label_ = "Weyl" + family_name(family) + "(" + std::to_string(d) + ")";
    finalize(cone, x0, std::nullopt);
    return cone;
}

inline HarmonicCone HarmonicCone::polynomial_cone(std::vector<LinearForm> forms,
                                                  std::optional<std::vector<double>> x0,
                                                  std::optional<double> R, std::string label) {
    if (forms.empty()) throw std::invalid_argument("polynomial_cone: no forms");
    int d = forms.front().dim();
    for (const auto& f : forms)
        if (f.dim() != d) throw std::invalid_argument("polynomial_cone: mixed dimensions");
    HarmonicCone cone;
    cone.dim_ = d;
    cone.family_ = ChamberFamily::General;
    cone.forms_ = std::move(forms);
    cone.label_ = label.empty() ? "cone(d=" + std::to_string(d) + ",p=" +
                                      std::to_string(cone.forms_.size()) + ")"
                                : std::move(label);
    finalize(cone, std::move(x0), R);
    return cone;
}

}  // namespace conewalk
