#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nlab/rational.hpp"

namespace nlab::grassmann {

/// Exterior algebra on m anticommuting generators g_0 < g_1 < ... < g_{m-1},
/// monomials encoded as bitmasks.
struct Algebra {
    int m = 0;
    explicit Algebra(int generators) : m(generators) {
        if (generators < 0 || generators > 64)
            throw std::invalid_argument("Algebra: generator count must be in [0,64]");
    }
    bool operator==(const Algebra& o) const { return m == o.m; }
};

namespace detail {

/// Parity sign from reordering the concatenation of two ascending monomials:
/// (-1)^{#(i in a, j in b, i > j)}.
inline int reorder_sign(std::uint64_t a, std::uint64_t b) {
    int swaps = 0;
    while (b) {
        const int j = std::countr_zero(b);
        b &= b - 1;
        const std::uint64_t above = (j == 63) ? 0 : (a >> (j + 1));
        swaps += std::popcount(above);
    }
    return (swaps & 1) ? -1 : 1;
}

template <class S>
bool scalar_is_zero(const S& s) {
    return s == S(0);
}

template <class S>
S scalar_from_factorial(long k);

template <>
inline double scalar_from_factorial<double>(long k) {
    double f = 1.0;
    for (long v = 2; v <= k; ++v) f *= static_cast<double>(v);
    return f;
}

template <>
inline Rational scalar_from_factorial<Rational>(long k) {
    return Rational(factorial(k));
}

inline double scalar_exp(double x) { return std::exp(x); }
inline Rational scalar_exp(const Rational& x) {
    if (x != 0) throw std::invalid_argument("exponential: exact elements need zero body");
    return Rational(1);
}

}  // namespace detail

/// Element of the algebra: finitely supported map from generator subsets to
/// coefficients, stored as a mask-sorted term vector.
template <class S>
class Element {
  public:
    using Term = std::pair<std::uint64_t, S>;

    Element() = default;
    explicit Element(int m) : m_(m) {}

    static Element zero(int m) { return Element(m); }
    static Element one(int m) { return monomial(m, 0, S(1)); }
    static Element generator(int m, int i) {
        if (i < 0 || i >= m) throw std::invalid_argument("generator index out of range");
        return monomial(m, std::uint64_t(1) << i, S(1));
    }
    static Element monomial(int m, std::uint64_t mask, S coef) {
        Element e(m);
        if (m < 64 && (mask >> m) != 0) throw std::invalid_argument("monomial mask out of range");
        if (!detail::scalar_is_zero(coef)) e.terms_.emplace_back(mask, std::move(coef));
        return e;
    }

    int generators() const { return m_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    S coefficient(std::uint64_t mask) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), mask,
                                   [](const Term& t, std::uint64_t v) { return t.first < v; });
        if (it != terms_.end() && it->first == mask) return it->second;
        return S(0);
    }
    S body() const { return coefficient(0); }

    /// Supported only on even-popcount masks / odd-popcount masks.
    bool is_even() const {
        for (const auto& [mask, c] : terms_)
            if (std::popcount(mask) % 2 != 0) return false;
        return true;
    }
    bool is_odd() const {
        for (const auto& [mask, c] : terms_)
            if (std::popcount(mask) % 2 == 0) return false;
        return true;
    }

    Element operator+(const Element& o) const {
        check_same(o);
        Element out(m_);
        out.terms_.reserve(terms_.size() + o.terms_.size());
        size_t i = 0, j = 0;
        while (i < terms_.size() || j < o.terms_.size()) {
            if (j == o.terms_.size() || (i < terms_.size() && terms_[i].first < o.terms_[j].first)) {
                out.terms_.push_back(terms_[i++]);
            } else if (i == terms_.size() || o.terms_[j].first < terms_[i].first) {
                out.terms_.push_back(o.terms_[j++]);
            } else {
                S c = terms_[i].second + o.terms_[j].second;
                if (!detail::scalar_is_zero(c)) out.terms_.emplace_back(terms_[i].first, std::move(c));
                ++i;
                ++j;
            }
        }
        return out;
    }
    Element operator-() const {
        Element out = *this;
        for (auto& [mask, c] : out.terms_) c = -c;
        return out;
    }
    Element operator-(const Element& o) const { return *this + (-o); }

    Element operator*(const Element& o) const {
        check_same(o);
        std::vector<Term> prod;
        prod.reserve(terms_.size() * o.terms_.size());
        for (const auto& [ma, ca] : terms_)
            for (const auto& [mb, cb] : o.terms_) {
                if (ma & mb) continue;  // repeated generator annihilates
                S c = ca * cb;
                if (detail::reorder_sign(ma, mb) < 0) c = -c;
                prod.emplace_back(ma | mb, std::move(c));
            }
        std::sort(prod.begin(), prod.end(),
                  [](const Term& a, const Term& b) { return a.first < b.first; });
        Element out(m_);
        out.terms_.reserve(prod.size());
        for (auto& t : prod) {
            if (!out.terms_.empty() && out.terms_.back().first == t.first) {
                out.terms_.back().second = out.terms_.back().second + t.second;
                if (detail::scalar_is_zero(out.terms_.back().second)) out.terms_.pop_back();
            } else if (!detail::scalar_is_zero(t.second)) {
                out.terms_.push_back(std::move(t));
            }
        }
        return out;
    }

    Element scaled(const S& s) const {
        Element out(m_);
        if (detail::scalar_is_zero(s)) return out;
        out.terms_.reserve(terms_.size());
        for (const auto& [mask, c] : terms_) out.terms_.emplace_back(mask, c * s);
        return out;
    }

    bool operator==(const Element& o) const { return m_ == o.m_ && terms_ == o.terms_; }

    /// Left odd derivative with respect to generator i.
    Element derivative(int i) const {
        if (i < 0 || i >= m_) throw std::invalid_argument("derivative index out of range");
        const std::uint64_t bit = std::uint64_t(1) << i;
        Element out(m_);
        for (const auto& [mask, c] : terms_) {
            if (!(mask & bit)) continue;
            const int below = std::popcount(mask & (bit - 1));
            out.terms_.emplace_back(mask & ~bit, (below & 1) ? -c : c);
        }
        return out;
    }

  private:
    void check_same(const Element& o) const {
        if (m_ != o.m_) throw std::invalid_argument("elements from mismatched algebras");
    }

    int m_ = 0;
    std::vector<Term> terms_;  // sorted by mask, coefficients nonzero
};

/// exp(body) * sum_k nilpotent^k / k!; the nilpotent series is finite and the
/// truncation is exact.  Exact-coefficient elements require zero body.
template <class S>
Element<S> exponential(const Element<S>& x) {
    const int m = x.generators();
    const S eb = detail::scalar_exp(x.body());
    Element<S> nil = x - Element<S>::monomial(m, 0, x.body());
    Element<S> acc = Element<S>::one(m);
    Element<S> power = Element<S>::one(m);
    for (int k = 1; k <= m; ++k) {
        power = power * nil;
        if (power.is_zero()) break;
        acc = acc + power.scaled(S(1) / detail::scalar_from_factorial<S>(k));
    }
    return acc.scaled(eb);
}

/// Iterated odd derivative d_{over[0]} d_{over[1]} ... applied as written
/// (rightmost acts first).
template <class S>
Element<S> berezin_integral(const Element<S>& x, std::span<const int> over) {
    for (size_t i = 0; i < over.size(); ++i)
        for (size_t j = i + 1; j < over.size(); ++j)
            if (over[i] == over[j]) throw std::invalid_argument("berezin_integral: repeated generator");
    Element<S> cur = x;
    for (size_t i = over.size(); i-- > 0;) cur = cur.derivative(over[i]);
    return cur;
}

/// Coefficient of E_1...E_{n-1} in d_{P_1}...d_{P_{n-1}} exp(c (sum_j P_j E_j)^2)
/// over the algebra on 2(n-1) generators P_1..P_{n-1}, E_1..E_{n-1}.
/// Equals (n-1)!/((n-1)/2)! c^{(n-1)/2} for odd n, 0 for even n.
template <class S>
S leading_constant(int n, const S& c) {
    if (n < 1) throw std::invalid_argument("leading_constant: n must be >= 1");
    const int d = n - 1;
    const int m = 2 * d;
    Element<S> s = Element<S>::zero(m);
    for (int j = 0; j < d; ++j) {
        const std::uint64_t mask = (std::uint64_t(1) << j) | (std::uint64_t(1) << (d + j));
        s = s + Element<S>::monomial(m, mask, S(1));
    }
    const Element<S> ex = exponential((s * s).scaled(c));
    std::vector<int> pis(d);
    for (int j = 0; j < d; ++j) pis[j] = j;
    const Element<S> der = berezin_integral(ex, pis);
    std::uint64_t top = 0;
    for (int j = 0; j < d; ++j) top |= std::uint64_t(1) << (d + j);
    return der.coefficient(top);
}

/// Exact check that sum_{j,k != r} (P_j E_k P_k E_j + P_j E_j P_k E_k)
/// vanishes in the algebra on 2n generators (1-based r).
inline bool quadratic_vanishing_check(int n, int r) {
    if (n < 1) throw std::invalid_argument("quadratic_vanishing_check: n must be >= 1");
    if (r < 1 || r > n) throw std::invalid_argument("quadratic_vanishing_check: r out of range");
    const int m = 2 * n;
    using E = Element<Rational>;
    auto pi = [&](int j) { return E::generator(m, j - 1); };
    auto ee = [&](int j) { return E::generator(m, n + j - 1); };
    E total = E::zero(m);
    for (int j = 1; j <= n; ++j) {
        if (j == r) continue;
        for (int k = 1; k <= n; ++k) {
            if (k == r) continue;
            total = total + pi(j) * ee(k) * pi(k) * ee(j) + pi(j) * ee(j) * pi(k) * ee(k);
        }
    }
    return total.is_zero();
}

/// Coefficient of `top_mask` in (one_forms[0] ^ ... ^ one_forms.back()) ^ omega.
/// A product that never reaches top degree simply yields 0.
template <class S>
S wedge_top_coefficient(std::span<const Element<S>> one_forms, const Element<S>& omega,
                        std::uint64_t top_mask) {
    Element<S> prod = omega;
    for (size_t i = one_forms.size(); i-- > 0;) prod = one_forms[i] * prod;
    return prod.coefficient(top_mask);
}

/// Coefficient-wise verification, up to total degree D, of the formal-series
/// identity exp(-<p|A^{-1}|p>/2) =
///   det(A)^{1/2}/(2 pi)^{N/2} Int exp(i<c,p>) exp(-<c|A|c>/2) dc,
/// with the right-hand moments computed by Wick pairing sums.
bool gaussian_fourier_check(const std::vector<std::vector<double>>& a, int degree);

}  // namespace nlab::grassmann
