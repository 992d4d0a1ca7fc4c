#pragma once

#include <string>
#include <vector>

#include "nlab/rational.hpp"

namespace nlab::comb {

/// Limiting covariance of the scaled 2-jet (f, grad f/L, Hess f/L^2) of a
/// random wave, as exact rationals in units of 1/Vol.  Slot ordering is
/// (F_0; F_1..F_n; F_{1,1}..F_{n,1}, F_{1,2}..F_{n,2}, ..., F_{n,n}).
struct JetCovariance {
    int n = 0;
    std::vector<std::vector<Rational>> matrix;

    int dim() const { return n * n + n + 1; }

    /// Multi-index (length n) of derivative order attached to a slot.
    std::vector<int> slot_multi_index(int slot) const;
};

inline int jet_dim(int n) { return n * n + n + 1; }

/// Slot index of F_{r,s} (1-based r, s) in the jet ordering above.
inline int hessian_slot(int n, int r, int s) { return 1 + n + (s - 1) * n + (r - 1); }

/// Leading constant of the diagonal spectral-projector derivative
/// d^alpha_y d^beta_z C(y,z)|_{y=z} ~ C_{n,alpha,beta} L^{|alpha+beta|},
/// returned as the exact rational multiple of 1/Vol.
ExactScalar spectral_constant(int n, const std::vector<int>& alpha, const std::vector<int>& beta);

/// Assembles the limiting jet covariance from its block formulas.
JetCovariance jet_covariance(int n);

/// Gaussian moment E[x_{i1}...x_{ik}] as a sum over perfect pairings of
/// covariance entries.  Zero for odd k.
double wick_moment(const std::vector<std::vector<double>>& cov, const std::vector<int>& indices);

/// Brute-force partition sum C_{sigma,p}: enumerates every partition of
/// {j != p} into sigma-invariant parts of size <= 2, keeps those with an
/// even number of singletons, and sums the attached weights.  The result
/// carries monomial exponent (n-1)/2 for odd n.
/// sigma is a permutation of {0..n-1} with sigma[p] == p (else rejected).
ExactScalar c_sigma_p_bruteforce(int n, const std::vector<int>& sigma, int p);

enum class SumMode {
    Involutions,         // only products of disjoint 2-cycles fixing p (others vanish)
    FullSymmetricGroup,  // stricter oracle: every sigma fixing p (n <= 7)
};

/// Closed form (n-1)!/((n-1)/2)! * (2 pi^2/((n+2)^2 Vol))^{(n-1)/2} for odd
/// n, exact zero for even n.
ExactScalar signed_permutation_sum_closed_form(int n);

/// Brute-forces sum_{sigma fixing p} eps(sigma) C_{sigma,p} and asserts
/// exact equality with the closed form; disagreement is a hard failure.
ExactScalar signed_permutation_sum(int n, SumMode mode = SumMode::Involutions);

double sphere_volume(int n);  // Vol(S^n)

/// C_n = 2(-1)^{(n+1)/2}/(pi Vol(S^{n-1})) for odd n, 0 otherwise.
double equidistribution_constant(int n);

/// B_n: two independent algebraic forms evaluated and checked against
/// each other;
/// satisfies B_n (n+2)^{n/2} = C_n.  Zero for even n.
double b_constant(int n);

/// L(eta) = (vol/2pi)^{1/2} |eta|^2 * signed permutation sum.
double l_eta(int n, const std::vector<double>& eta, double vol);

/// Leading term of the eigenvalue counting function:
/// vol/(2^n pi^{n/2} Gamma(n/2+1)) * lambda^n.
double weyl_leading(int n, double vol, double lambda);

/// Mean (weighted) nodal hypersurface volume:
/// (Vol(S^{n-1})/Vol(S^n)) * (lambda/sqrt(n+2)) * weight_integral.
double predicted_volume(int n, double lambda, double vol, double weight_integral);

/// Mean Euler characteristic of the nodal set (odd n only):
/// 2(-1)^{(n-1)/2}/(pi Vol(S^{n-1})) * (lambda/sqrt(n+2))^n * vol.
double predicted_euler(int n, double lambda, double vol);

/// Mean conormal-cycle pairing: C_n * (lambda/sqrt(n+2))^n * form_integral.
double predicted_pairing(int n, double lambda, double form_integral);

/// CSV audit table with columns n,C_n,B_n,sum_closed,sum_bruteforce,match.
std::string constants_table_csv(int n_max);

}  // namespace nlab::comb
