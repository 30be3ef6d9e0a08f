#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace conewalk {

using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline std::string to_string(const Rational& q) {
    std::ostringstream os;
    os << q;
    return os.str();
}

/// Element of the quadratic extension Q(sqrt(d)): value = a + b*sqrt(d).
///
/// d is a non-negative rational carried per value; pure rationals have b == 0
/// and an indifferent d. Mixing two values with incompatible non-trivial d is
/// an error (no tower of extensions).
class QuadExt {
public:
    QuadExt() : a_(0), b_(0), d_(0) {}
    QuadExt(Rational a) : a_(std::move(a)), b_(0), d_(0) {}  // NOLINT(google-explicit-constructor)
    QuadExt(long long a) : a_(a), b_(0), d_(0) {}            // NOLINT(google-explicit-constructor)
    QuadExt(Rational a, Rational b, Rational d)
        : a_(std::move(a)), b_(std::move(b)), d_(std::move(d)) {
        if (d_ < 0) throw std::invalid_argument("QuadExt: negative radicand");
        if (b_ == 0 || d_ == 0) { b_ = 0; d_ = 0; }
    }

    static QuadExt sqrt_of(const Rational& d) { return QuadExt(0, 1, d); }

    const Rational& rational_part() const { return a_; }
    const Rational& radical_part() const { return b_; }
    const Rational& radicand() const { return d_; }

    bool is_rational() const { return b_ == 0; }
    bool is_zero() const { return a_ == 0 && b_ == 0; }

    /// Exact rational value; throws when the value is irrational.
    const Rational& as_rational() const {
        if (!is_rational()) throw std::logic_error("QuadExt: irrational value");
        return a_;
    }

    double value() const {
        double v = conewalk::to_double(a_);
        if (b_ != 0) v += conewalk::to_double(b_) * std::sqrt(conewalk::to_double(d_));
        return v;
    }

    int sign() const {
        auto sgn = [](const Rational& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); };
        int sa = sgn(a_), sb = sgn(b_);
        if (sb == 0) return sa;
        if (sa == 0) return sb;
        if (sa == sb) return sa;
        // a and b*sqrt(d) compete: compare a^2 against b^2 d
        Rational lhs = a_ * a_, rhs = b_ * b_ * d_;
        if (lhs == rhs) return 0;
        return (lhs > rhs) ? sa : sb;
    }

    QuadExt operator-() const { return QuadExt(-a_, -b_, d_); }

    QuadExt& operator+=(const QuadExt& o) {
        align(o);
        a_ += o.a_;
        b_ += o.b_;
        normalize();
        return *this;
    }
    QuadExt& operator-=(const QuadExt& o) { return *this += -o; }
    QuadExt& operator*=(const QuadExt& o) {
        align(o);
        Rational na = a_ * o.a_ + b_ * o.b_ * d_;
        Rational nb = a_ * o.b_ + b_ * o.a_;
        a_ = std::move(na);
        b_ = std::move(nb);
        normalize();
        return *this;
    }
    QuadExt& operator/=(const QuadExt& o) {
        if (o.is_zero()) throw std::domain_error("QuadExt: division by zero");
        align(o);
        // 1/(a + b sqrt d) = (a - b sqrt d) / (a^2 - b^2 d)
        Rational den = o.a_ * o.a_ - o.b_ * o.b_ * d_;
        QuadExt conj(o.a_ / den, -o.b_ / den, d_);
        return *this *= conj;
    }

    friend QuadExt operator+(QuadExt l, const QuadExt& r) { return l += r; }
    friend QuadExt operator-(QuadExt l, const QuadExt& r) { return l -= r; }
    friend QuadExt operator*(QuadExt l, const QuadExt& r) { return l *= r; }
    friend QuadExt operator/(QuadExt l, const QuadExt& r) { return l /= r; }

    friend bool operator==(const QuadExt& l, const QuadExt& r) {
        return (l - r).is_zero();
    }
    friend bool operator!=(const QuadExt& l, const QuadExt& r) { return !(l == r); }

    friend std::ostream& operator<<(std::ostream& os, const QuadExt& q) {
        os << q.a_;
        if (q.b_ != 0) os << (q.b_ > 0 ? "+" : "") << q.b_ << "*sqrt(" << q.d_ << ")";
        return os;
    }

private:
    // Adopt the other operand's radicand when we are pure rational.
    void align(const QuadExt& o) {
        if (o.b_ == 0) return;
        if (b_ == 0) {
            d_ = o.d_;
            return;
        }
        if (d_ != o.d_)
            throw std::logic_error("QuadExt: mixing distinct radicands");
    }
    void normalize() {
        if (b_ == 0) d_ = 0;
    }

    Rational a_, b_, d_;
};

inline double to_double(const QuadExt& q) { return q.value(); }

/// sqrt(d)^k reduced into the extension: even k stays rational.
inline QuadExt radical_power(const Rational& d, int k) {
    if (k < 0) throw std::invalid_argument("radical_power: negative exponent");
    Rational even = 1;
    for (int i = 0; i < k / 2; ++i) even *= d;
    if (k % 2 == 0) return QuadExt(even);
    return QuadExt(0, even, d);
}

}  // namespace conewalk
