#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nlab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Double factorial m(m-2)(m-4)...; by convention (-1)!! = 1 and 0!! = 1.
inline BigInt double_factorial(long m) {
    if (m < -1) throw std::invalid_argument("double_factorial: argument must be >= -1");
    BigInt out = 1;
    for (long v = m; v > 1; v -= 2) out *= v;
    return out;
}

inline BigInt factorial(long m) {
    if (m < 0) throw std::invalid_argument("factorial: argument must be >= 0");
    BigInt out = 1;
    for (long v = 2; v <= m; ++v) out *= v;
    return out;
}

/// Exact scalar of the form value * (4*pi^2/Vol)^monomial_exponent.
///
/// Every combinatorial sum in this library lives on a single such monomial
/// (the exponent is forced by the partition structure), so addition is only
/// defined between scalars of equal exponent.  Exact zero is neutral and may
/// combine with any exponent.
class ExactScalar {
  public:
    ExactScalar() = default;
    explicit ExactScalar(Rational v, int monomial_exponent = 0)
        : value_(std::move(v)), exp_(monomial_exponent) {}

    static ExactScalar zero(int monomial_exponent = 0) {
        return ExactScalar(Rational(0), monomial_exponent);
    }

    const Rational& value() const { return value_; }
    int monomial_exponent() const { return exp_; }
    bool is_zero() const { return value_ == 0; }

    ExactScalar& operator+=(const ExactScalar& o) {
        if (o.is_zero()) return *this;
        if (is_zero()) {
            value_ = o.value_;
            exp_ = o.exp_;
            return *this;
        }
        if (exp_ != o.exp_)
            throw std::invalid_argument("ExactScalar: adding mismatched monomial exponents");
        value_ += o.value_;
        return *this;
    }
    ExactScalar operator+(const ExactScalar& o) const {
        ExactScalar r = *this;
        r += o;
        return r;
    }
    ExactScalar operator-() const { return ExactScalar(-value_, exp_); }
    ExactScalar operator-(const ExactScalar& o) const { return *this + (-o); }
    ExactScalar operator*(const ExactScalar& o) const {
        return ExactScalar(value_ * o.value_, exp_ + o.exp_);
    }
    ExactScalar operator*(const Rational& r) const { return ExactScalar(value_ * r, exp_); }

    bool operator==(const ExactScalar& o) const {
        if (is_zero() && o.is_zero()) return true;
        return value_ == o.value_ && exp_ == o.exp_;
    }
    bool operator!=(const ExactScalar& o) const { return !(*this == o); }

    /// Round-to-nearest conversion with the monomial substituted for a
    /// concrete volume.  Conversion happens only at this API boundary.
    double to_double(double vol) const;

    std::string str() const {
        std::ostringstream os;
        os << value_;
        if (exp_ != 0) os << "*(4*pi^2/Vol)^" << exp_;
        return os.str();
    }

  private:
    Rational value_ = 0;
    int exp_ = 0;
};

}  // namespace nlab
