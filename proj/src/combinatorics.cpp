#include "nlab/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nlab {

double ExactScalar::to_double(double vol) const {
    const double base = 4.0 * std::numbers::pi * std::numbers::pi / vol;
    return value_.convert_to<double>() * std::pow(base, exp_);
}

}  // namespace nlab

namespace nlab::comb {

namespace {

int multi_index_order(const std::vector<int>& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
}

void check_dim(int n) {
    if (n < 1) throw std::invalid_argument("dimension must be >= 1");
}

}  // namespace

std::vector<int> JetCovariance::slot_multi_index(int slot) const {
    std::vector<int> idx(n, 0);
    if (slot == 0) return idx;
    if (slot <= n) {
        idx[slot - 1] = 1;
        return idx;
    }
    const int h = slot - n - 1;
    const int s = h / n;  // 0-based second derivative index
    const int r = h % n;
    idx[r] += 1;
    idx[s] += 1;
    return idx;
}

ExactScalar spectral_constant(int n, const std::vector<int>& alpha, const std::vector<int>& beta) {
    check_dim(n);
    if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
        throw std::invalid_argument("spectral_constant: multi-indices must have n entries");
    const int oa = multi_index_order(alpha);
    const int ob = multi_index_order(beta);
    if (oa == 0 && ob == 0) return ExactScalar(Rational(1));
    for (int j = 0; j < n; ++j)
        if (((alpha[j] - beta[j]) % 2) != 0) return ExactScalar::zero();

    BigInt num = 1;
    for (int j = 0; j < n; ++j) num *= double_factorial(alpha[j] + beta[j] - 1);
    if (((oa - ob) / 2) % 2 != 0) num = -num;
    BigInt den = 1;
    for (int v = oa + ob + n; v >= n + 2; v -= 2) den *= v;
    return ExactScalar(Rational(num, den));
}

JetCovariance jet_covariance(int n) {
    check_dim(n);
    JetCovariance out;
    out.n = n;
    const int d = out.dim();
    out.matrix.assign(d, std::vector<Rational>(d, Rational(0)));
    auto& m = out.matrix;

    const Rational inv_n2(1, n + 2);
    const Rational inv_n2n4(1, static_cast<long long>(n + 2) * (n + 4));

    m[0][0] = 1;
    for (int l = 1; l <= n; ++l) m[l][l] = inv_n2;
    // value vs Hessian diagonal
    for (int r = 1; r <= n; ++r) {
        const int slot = hessian_slot(n, r, r);
        m[0][slot] = -inv_n2;
        m[slot][0] = -inv_n2;
    }
    // Hessian block: B_{s,s} = Id + 2 diag(delta_{j,s}); B_{s,s'} has entries
    // delta_{i,s} delta_{j,s'} + delta_{i,s'} delta_{j,s} for s != s'.
    for (int s = 1; s <= n; ++s)
        for (int sp = 1; sp <= n; ++sp)
            for (int r = 1; r <= n; ++r)
                for (int rp = 1; rp <= n; ++rp) {
                    int b;
                    if (s == sp)
                        b = (r == rp) ? 1 + 2 * (r == s) : 0;
                    else
                        b = (r == s && rp == sp) + (r == sp && rp == s);
                    if (b != 0) m[hessian_slot(n, r, s)][hessian_slot(n, rp, sp)] = b * inv_n2n4;
                }
    return out;
}

double wick_moment(const std::vector<std::vector<double>>& cov, const std::vector<int>& indices) {
    for (size_t i = 0; i < cov.size(); ++i) {
        if (cov[i].size() != cov.size()) throw std::invalid_argument("wick_moment: covariance not square");
        for (size_t j = 0; j < i; ++j)
            if (cov[i][j] != cov[j][i]) throw std::invalid_argument("wick_moment: covariance not symmetric");
    }
    if (indices.empty()) return 1.0;
    if (indices.size() % 2 != 0) return 0.0;

    // Recursive sum over perfect pairings: pair the first index with each
    // remaining one.
    std::vector<int> rest = indices;
    const int first = rest.front();
    rest.erase(rest.begin());
    double total = 0.0;
    for (size_t j = 0; j < rest.size(); ++j) {
        std::vector<int> next = rest;
        const int partner = next[j];
        next.erase(next.begin() + static_cast<long>(j));
        total += cov[first][partner] * wick_moment(cov, next);
    }
    return total;
}

namespace {

// Recursive enumeration of partitions of `elems` into sigma-invariant parts
// of size <= 2.  Accumulates the weight
//   (-1/(n+2))^{|A|} (|A1|-1)!! (1/(n+4))^{|A2|+|A3|}
// of each partition with an even number of singletons; the monomial factor
// (4 pi^2/Vol)^{|A|-|A1|/2} is constant over contributing partitions and is
// attached by the caller.
void partition_sum(const std::vector<int>& sigma, std::vector<int>& elems, int a1, int npairs,
                   const Rational& w_single, const Rational& w_pair, Rational& acc_even) {
    if (elems.empty()) {
        if (a1 % 2 != 0) return;
        Rational term = 1;
        for (int i = 0; i < a1 + npairs; ++i) term *= w_single;
        for (int i = 0; i < npairs; ++i) term *= w_pair;
        term *= Rational(double_factorial(a1 - 1));
        acc_even += term;
        return;
    }
    const int a = elems.back();
    elems.pop_back();
    if (sigma[a] == a) {
        partition_sum(sigma, elems, a1 + 1, npairs, w_single, w_pair, acc_even);
    }
    for (size_t i = 0; i < elems.size(); ++i) {
        const int b = elems[i];
        const bool fixed_pair = sigma[a] == a && sigma[b] == b;
        const bool swapped_pair = sigma[a] == b && sigma[b] == a;
        if (!fixed_pair && !swapped_pair) continue;
        std::vector<int> rest = elems;
        rest.erase(rest.begin() + static_cast<long>(i));
        partition_sum(sigma, rest, a1, npairs + 1, w_single, w_pair, acc_even);
    }
    elems.push_back(a);
}

int permutation_sign(const std::vector<int>& sigma) {
    std::vector<bool> seen(sigma.size(), false);
    int sign = 1;
    for (size_t i = 0; i < sigma.size(); ++i) {
        if (seen[i]) continue;
        int len = 0;
        for (size_t j = i; !seen[j]; j = static_cast<size_t>(sigma[j])) {
            seen[j] = true;
            ++len;
        }
        if (len % 2 == 0) sign = -sign;
    }
    return sign;
}

// Enumerate involutions of `elems` (as pair assignments on top of `sigma`,
// which starts as the identity) and invoke fn(sigma) for each.
template <class Fn>
void for_each_involution(std::vector<int>& elems, std::vector<int>& sigma, Fn&& fn) {
    if (elems.empty()) {
        fn(sigma);
        return;
    }
    const int a = elems.back();
    elems.pop_back();
    for_each_involution(elems, sigma, fn);  // a fixed
    for (size_t i = 0; i < elems.size(); ++i) {
        const int b = elems[i];
        std::vector<int> rest = elems;
        rest.erase(rest.begin() + static_cast<long>(i));
        sigma[a] = b;
        sigma[b] = a;
        for_each_involution(rest, sigma, fn);
        sigma[a] = a;
        sigma[b] = b;
    }
    elems.push_back(a);
}

}  // namespace

ExactScalar c_sigma_p_bruteforce(int n, const std::vector<int>& sigma, int p) {
    check_dim(n);
    if (static_cast<int>(sigma.size()) != n) throw std::invalid_argument("sigma must have n entries");
    if (p < 0 || p >= n) throw std::invalid_argument("p out of range");
    if (sigma[p] != p) throw std::invalid_argument("c_sigma_p_bruteforce: sigma must fix p");

    const int exponent = (n % 2 == 1) ? (n - 1) / 2 : 0;
    std::vector<int> elems;
    for (int j = 0; j < n; ++j)
        if (j != p) elems.push_back(j);

    Rational acc = 0;
    const Rational w_single(-1, n + 2);
    const Rational w_pair(1, n + 4);
    partition_sum(sigma, elems, 0, 0, w_single, w_pair, acc);
    return ExactScalar(acc, exponent);
}

ExactScalar signed_permutation_sum_closed_form(int n) {
    check_dim(n);
    if (n % 2 == 0) return ExactScalar::zero();
    const int m = (n - 1) / 2;
    Rational v(factorial(n - 1), factorial(m));
    const Rational base(1, 2LL * (n + 2) * (n + 2));
    for (int i = 0; i < m; ++i) v *= base;
    return ExactScalar(v, m);
}

ExactScalar signed_permutation_sum(int n, SumMode mode) {
    check_dim(n);
    const int p = 0;
    const int exponent = (n % 2 == 1) ? (n - 1) / 2 : 0;
    ExactScalar total = ExactScalar::zero(exponent);

    if (mode == SumMode::FullSymmetricGroup) {
        if (n > 7) throw std::invalid_argument("full symmetric group mode supported for n <= 7");
        std::vector<int> others;
        for (int j = 1; j < n; ++j) others.push_back(j);
        std::vector<int> image = others;
        std::sort(image.begin(), image.end());
        do {
            std::vector<int> sigma(n);
            sigma[p] = p;
            for (size_t i = 0; i < others.size(); ++i) sigma[others[i]] = image[i];
            const ExactScalar c = c_sigma_p_bruteforce(n, sigma, p);
            total += permutation_sign(sigma) > 0 ? c : -c;
        } while (std::next_permutation(image.begin(), image.end()));
    } else {
        std::vector<int> elems;
        for (int j = 1; j < n; ++j) elems.push_back(j);
        std::vector<int> sigma(n);
        for (int j = 0; j < n; ++j) sigma[j] = j;
        for_each_involution(elems, sigma, [&](const std::vector<int>& s) {
            const ExactScalar c = c_sigma_p_bruteforce(n, s, p);
            total += permutation_sign(s) > 0 ? c : -c;
        });
    }

    if (total != signed_permutation_sum_closed_form(n))
        throw std::logic_error("signed_permutation_sum: brute force disagrees with closed form at n=" +
                               std::to_string(n));
    return total;
}

double sphere_volume(int n) {
    if (n < 0) throw std::invalid_argument("sphere_volume: n must be >= 0");
    return 2.0 * std::pow(std::numbers::pi, (n + 1) / 2.0) / std::tgamma((n + 1) / 2.0);
}

double equidistribution_constant(int n) {
    check_dim(n);
    if (n % 2 == 0) return 0.0;
    const double sign = ((n + 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    return 2.0 * sign / (std::numbers::pi * sphere_volume(n - 1));
}

double b_constant(int n) {
    check_dim(n);
    if (n % 2 == 0) return 0.0;
    const double sign = ((n + 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    const double pi = std::numbers::pi;
    const double fact_ratio =
        factorial(n - 1).convert_to<double>() / factorial((n - 1) / 2).convert_to<double>();
    const double form1 = 2.0 * sign / std::pow(2.0 * pi, n - 1) * fact_ratio *
                         std::pow(pi, (n - 3) / 2.0) / (2.0 * std::pow(n + 2.0, n / 2.0));
    const double form2 = sign / (pi * sphere_volume(n - 1)) * 2.0 / std::pow(n + 2.0, n / 2.0);
    if (std::abs(form1 - form2) > 1e-12 * std::abs(form2))
        throw std::logic_error("b_constant: the two algebraic forms disagree at n=" + std::to_string(n));
    return form2;
}

double l_eta(int n, const std::vector<double>& eta, double vol) {
    check_dim(n);
    if (n % 2 == 0) return 0.0;
    double norm_sq = 0.0;
    for (double e : eta) norm_sq += e * e;
    if (norm_sq == 0.0) throw std::invalid_argument("l_eta: eta must be nonzero");
    const double sum = signed_permutation_sum(n).to_double(vol);
    return std::sqrt(vol / (2.0 * std::numbers::pi)) * norm_sq * sum;
}

double weyl_leading(int n, double vol, double lambda) {
    check_dim(n);
    if (lambda < 0) throw std::invalid_argument("weyl_leading: lambda must be >= 0");
    const double pi = std::numbers::pi;
    return vol / (std::pow(2.0, n) * std::pow(pi, n / 2.0) * std::tgamma(n / 2.0 + 1.0)) *
           std::pow(lambda, n);
}

double predicted_volume(int n, double lambda, double vol, double weight_integral) {
    check_dim(n);
    (void)vol;
    return sphere_volume(n - 1) / sphere_volume(n) * lambda / std::sqrt(n + 2.0) * weight_integral;
}

double predicted_euler(int n, double lambda, double vol) {
    check_dim(n);
    if (n % 2 == 0) throw std::invalid_argument("predicted_euler: stated for odd n only");
    const double sign = ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    return 2.0 * sign / (std::numbers::pi * sphere_volume(n - 1)) *
           std::pow(lambda / std::sqrt(n + 2.0), n) * vol;
}

double predicted_pairing(int n, double lambda, double form_integral) {
    check_dim(n);
    return equidistribution_constant(n) * std::pow(lambda / std::sqrt(n + 2.0), n) * form_integral;
}

std::string constants_table_csv(int n_max) {
    std::ostringstream os;
    os << "n,C_n,B_n,sum_closed,sum_bruteforce,match\n";
    os.precision(17);
    for (int n = 1; n <= n_max; ++n) {
        const ExactScalar closed = signed_permutation_sum_closed_form(n);
        bool match = true;
        ExactScalar brute = ExactScalar::zero();
        try {
            brute = signed_permutation_sum(n);
        } catch (const std::logic_error&) {
            match = false;
        }
        if (match) match = brute == closed;
        os << n << ',' << equidistribution_constant(n) << ',' << b_constant(n) << ',' << closed.str() << ','
           << brute.str() << ',' << (match ? "true" : "false") << '\n';
    }
    return os.str();
}

}  // namespace nlab::comb
