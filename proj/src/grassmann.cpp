#include "nlab/grassmann.hpp"

#include <Eigen/Dense>

#include <map>

#include "nlab/combinatorics.hpp"

namespace nlab::grassmann {

namespace {

using Poly = std::map<std::vector<int>, double>;  // exponent vector -> coefficient

int poly_degree(const std::vector<int>& e) {
    int d = 0;
    for (int v : e) d += v;
    return d;
}

Poly poly_mul(const Poly& a, const Poly& b, int max_degree) {
    Poly out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            std::vector<int> e = ea;
            for (size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
            if (poly_degree(e) > max_degree) continue;
            out[e] += ca * cb;
        }
    return out;
}

}  // namespace

bool gaussian_fourier_check(const std::vector<std::vector<double>>& a, int degree) {
    const int nvar = static_cast<int>(a.size());
    if (nvar == 0 || degree < 0 || degree > 6)
        throw std::invalid_argument("gaussian_fourier_check: need a nonempty matrix and D <= 6");
    Eigen::MatrixXd A(nvar, nvar);
    for (int i = 0; i < nvar; ++i) {
        if (static_cast<int>(a[i].size()) != nvar)
            throw std::invalid_argument("gaussian_fourier_check: matrix not square");
        for (int j = 0; j < nvar; ++j) A(i, j) = a[i][j];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("gaussian_fourier_check: matrix must be positive definite");
    const Eigen::MatrixXd Ainv = A.inverse();
    std::vector<std::vector<double>> ainv(nvar, std::vector<double>(nvar));
    for (int i = 0; i < nvar; ++i)
        for (int j = 0; j < nvar; ++j) ainv[i][j] = 0.5 * (Ainv(i, j) + Ainv(j, i));

    // Left side: expand exp(-Q/2), Q = <p|A^{-1}|p>, truncated at `degree`.
    Poly q;
    for (int i = 0; i < nvar; ++i)
        for (int j = 0; j < nvar; ++j) {
            std::vector<int> e(nvar, 0);
            e[i] += 1;
            e[j] += 1;
            q[e] += ainv[i][j];
        }
    Poly lhs;
    lhs[std::vector<int>(nvar, 0)] = 1.0;
    Poly qpow = lhs;
    double fact = 1.0;
    for (int k = 1; 2 * k <= degree; ++k) {
        qpow = poly_mul(qpow, q, degree);
        fact *= k;
        const double coef = ((k % 2) ? -1.0 : 1.0) / (std::pow(2.0, k) * fact);
        for (const auto& [e, c] : qpow) lhs[e] += coef * c;
    }

    // Right side: sum_k i^k/k! E[<c,p>^k] with moments from Wick pairings of
    // the covariance A^{-1}.
    Poly rhs;
    rhs[std::vector<int>(nvar, 0)] = 1.0;
    std::vector<int> tuple;
    for (int k = 2; k <= degree; k += 2) {
        const double prefactor = ((k / 2) % 2 ? -1.0 : 1.0) / factorial(k).convert_to<double>();
        // iterate ordered index tuples of length k
        std::vector<int> idx(k, 0);
        while (true) {
            const double moment = comb::wick_moment(ainv, idx);
            if (moment != 0.0) {
                std::vector<int> e(nvar, 0);
                for (int v : idx) e[v] += 1;
                rhs[e] += prefactor * moment;
            }
            int pos = k - 1;
            while (pos >= 0 && idx[pos] == nvar - 1) idx[pos--] = 0;
            if (pos < 0) break;
            ++idx[pos];
        }
    }

    for (const auto& [e, c] : lhs)
        if (std::abs(c - (rhs.count(e) ? rhs.at(e) : 0.0)) > 1e-9 * std::max(1.0, std::abs(c)))
            return false;
    for (const auto& [e, c] : rhs)
        if (std::abs(c - (lhs.count(e) ? lhs.at(e) : 0.0)) > 1e-9 * std::max(1.0, std::abs(c)))
            return false;
    return true;
}

}  // namespace nlab::grassmann
