#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "conewalk/rational.hpp"

namespace conewalk {

using MultiIndex = std::vector<int>;

namespace detail {
inline bool coeff_is_zero(const Rational& c) { return c == 0; }
inline bool coeff_is_zero(const QuadExt& c) { return c.is_zero(); }
inline bool coeff_is_zero(double c) { return c == 0.0; }
inline double coeff_to_double(const Rational& c) { return to_double(c); }
inline double coeff_to_double(const QuadExt& c) { return c.value(); }
inline double coeff_to_double(double c) { return c; }
}  // namespace detail

/// Exact multivariate polynomial: exponent multi-index -> coefficient.
/// Zero coefficients are never stored; all multi-indices have length dim().
template <typename Coeff>
class SparsePolynomial {
public:
    using TermMap = std::map<MultiIndex, Coeff>;

    explicit SparsePolynomial(int dim = 0) : dim_(dim) {
        if (dim < 0) throw std::invalid_argument("SparsePolynomial: negative dimension");
    }

    static SparsePolynomial constant(int dim, Coeff c) {
        SparsePolynomial p(dim);
        p.add_term(MultiIndex(dim, 0), std::move(c));
        return p;
    }

    /// The affine-free linear polynomial <x, coeffs>.
    static SparsePolynomial linear(const std::vector<Coeff>& coeffs) {
        SparsePolynomial p(static_cast<int>(coeffs.size()));
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            MultiIndex mi(coeffs.size(), 0);
            mi[j] = 1;
            p.add_term(mi, coeffs[j]);
        }
        return p;
    }

    int dim() const { return dim_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t num_terms() const { return terms_.size(); }

    void add_term(const MultiIndex& mi, Coeff c) {
        if (static_cast<int>(mi.size()) != dim_)
            throw std::invalid_argument("SparsePolynomial: multi-index length mismatch");
        auto it = terms_.find(mi);
        if (it == terms_.end()) {
            if (!detail::coeff_is_zero(c)) terms_.emplace(mi, std::move(c));
        } else {
            it->second += c;
            if (detail::coeff_is_zero(it->second)) terms_.erase(it);
        }
    }

    Coeff coefficient(const MultiIndex& mi) const {
        auto it = terms_.find(mi);
        return it == terms_.end() ? Coeff(0) : it->second;
    }

    int total_degree() const {
        int deg = 0;
        for (const auto& [mi, c] : terms_) {
            int s = 0;
            for (int e : mi) s += e;
            deg = std::max(deg, s);
        }
        return deg;
    }

    /// Largest exponent of any single variable over all terms.
    int max_variable_degree() const {
        int r = 0;
        for (const auto& [mi, c] : terms_)
            for (int e : mi) r = std::max(r, e);
        return r;
    }

    SparsePolynomial operator-() const {
        SparsePolynomial p(dim_);
        for (const auto& [mi, c] : terms_) p.terms_.emplace(mi, -c);
        return p;
    }
    SparsePolynomial& operator+=(const SparsePolynomial& o) {
        check_dim(o);
        for (const auto& [mi, c] : o.terms_) add_term(mi, c);
        return *this;
    }
    SparsePolynomial& operator-=(const SparsePolynomial& o) {
        check_dim(o);
        for (const auto& [mi, c] : o.terms_) add_term(mi, -c);
        return *this;
    }
    friend SparsePolynomial operator+(SparsePolynomial l, const SparsePolynomial& r) { return l += r; }
    friend SparsePolynomial operator-(SparsePolynomial l, const SparsePolynomial& r) { return l -= r; }

    friend SparsePolynomial operator*(const SparsePolynomial& l, const SparsePolynomial& r) {
        l.check_dim(r);
        SparsePolynomial p(l.dim_);
        MultiIndex mi(l.dim_);
        for (const auto& [ml, cl] : l.terms_) {
            for (const auto& [mr, cr] : r.terms_) {
                for (int j = 0; j < l.dim_; ++j) mi[j] = ml[j] + mr[j];
                p.add_term(mi, cl * cr);
            }
        }
        return p;
    }

    SparsePolynomial& operator*=(const Coeff& s) {
        if (detail::coeff_is_zero(s)) {
            terms_.clear();
            return *this;
        }
        for (auto& [mi, c] : terms_) c *= s;
        return *this;
    }

    bool operator==(const SparsePolynomial& o) const {
        return dim_ == o.dim_ && terms_ == o.terms_;
    }

    template <typename Scalar>
    auto evaluate(std::span<const Scalar> x) const {
        using R = decltype(std::declval<Coeff>() * std::declval<Scalar>());
        if (static_cast<int>(x.size()) != dim_)
            throw std::invalid_argument("SparsePolynomial::evaluate: dimension mismatch");
        R acc(0);
        for (const auto& [mi, c] : terms_) {
            R term(c);
            for (int j = 0; j < dim_; ++j)
                for (int e = 0; e < mi[j]; ++e) term *= x[j];
            acc += term;
        }
        return acc;
    }

    double evaluate_double(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw std::invalid_argument("SparsePolynomial::evaluate_double: dimension mismatch");
        double acc = 0;
        for (const auto& [mi, c] : terms_) {
            double term = detail::coeff_to_double(c);
            for (int j = 0; j < dim_; ++j)
                for (int e = 0; e < mi[j]; ++e) term *= x[j];
            acc += term;
        }
        return acc;
    }

    SparsePolynomial<double> to_double() const {
        SparsePolynomial<double> p(dim_);
        for (const auto& [mi, c] : terms_) p.add_term(mi, detail::coeff_to_double(c));
        return p;
    }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [mi, c] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << "(" << c << ")";
            for (int j = 0; j < dim_; ++j)
                if (mi[j] > 0) os << "*x" << j + 1 << "^" << mi[j];
        }
        return os.str();
    }

private:
    void check_dim(const SparsePolynomial& o) const {
        if (dim_ != o.dim_) throw std::invalid_argument("SparsePolynomial: dimension mismatch");
    }

    int dim_;
    TermMap terms_;
};

/// Exact partial derivative of given order per variable.
template <typename Coeff>
SparsePolynomial<Coeff> partial_derivative(const SparsePolynomial<Coeff>& p, const MultiIndex& order) {
    if (static_cast<int>(order.size()) != p.dim())
        throw std::invalid_argument("partial_derivative: multi-index length mismatch");
    SparsePolynomial<Coeff> out(p.dim());
    for (const auto& [mi, c] : p.terms()) {
        MultiIndex nmi(mi);
        Coeff nc = c;
        bool dead = false;
        for (int j = 0; j < p.dim() && !dead; ++j) {
            for (int k = 0; k < order[j]; ++k) {
                if (nmi[j] == 0) {
                    dead = true;
                    break;
                }
                nc *= Coeff(nmi[j]);
                nmi[j] -= 1;
            }
        }
        if (!dead) out.add_term(nmi, nc);
    }
    return out;
}

/// Sum of second partials, exact.
template <typename Coeff>
SparsePolynomial<Coeff> laplacian(const SparsePolynomial<Coeff>& p) {
    SparsePolynomial<Coeff> out(p.dim());
    for (int j = 0; j < p.dim(); ++j) {
        MultiIndex order(p.dim(), 0);
        order[j] = 2;
        out += partial_derivative(p, order);
    }
    return out;
}

}  // namespace conewalk
