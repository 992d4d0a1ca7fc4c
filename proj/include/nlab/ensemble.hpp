#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlab/rng.hpp"

namespace nlab::ensemble {

/// Flat torus (R/2piZ)^n with frequency cutoff |k| <= lambda.
struct TorusSpec {
    int n = 1;
    double lambda = 1.0;
    std::uint64_t seed = 0;

    double volume() const;
};

enum class Phase : std::uint8_t { Cos, Sin };

struct BasisFunction {
    std::vector<int> k;  // lexicographically-positive representative of {k,-k}
    Phase phase = Phase::Cos;
    double normalization = 0.0;  // 1/sqrt(Vol) for k=0, sqrt(2/Vol) otherwise
};

/// Orthonormal real eigenbasis of H_lambda, in deterministic order
/// (k lexicographic, cos before sin; sine excluded for k=0).
std::vector<BasisFunction> enumerate_basis(const TorusSpec& spec);

/// Shared, immutable basis handle used by samples.
struct Basis {
    TorusSpec spec;
    std::vector<BasisFunction> functions;

    static std::shared_ptr<const Basis> make(const TorusSpec& spec);
    std::size_t size() const { return functions.size(); }
};

/// Random wave: coefficient vector over the explicit eigenbasis.
struct WaveSample {
    std::shared_ptr<const Basis> basis;
    std::vector<double> coefficients;

    int dim() const { return basis->spec.n; }
    double lambda() const { return basis->spec.lambda; }
    /// ||f||_{L^2}^2 = sum of squared coefficients (orthonormal basis).
    double l2_norm_sq() const;
    /// Root mean square over the torus, ||f||_{L^2}/sqrt(Vol).
    double rms() const;
};

/// Draw coefficients as independent centered Gaussians of variance 1/N, so
/// E||f||^2 = 1.
WaveSample sample(const std::shared_ptr<const Basis>& basis, rng::CounterRng& gen);

double evaluate(const WaveSample& f, std::span<const double> x);
std::vector<double> gradient(const WaveSample& f, std::span<const double> x);
/// Row-major n x n symmetric Hessian.
std::vector<double> hessian(const WaveSample& f, std::span<const double> x);

/// Scaled 2-jet (f; grad f/lambda; Hess f/lambda^2) in the canonical slot
/// ordering, length n^2+n+1.
std::vector<double> jet(const WaveSample& f, std::span<const double> x);

/// Gradients and Hessians at many points in one pass (per-axis phase
/// recurrences instead of per-function trig).  points is flat npts x n;
/// grad comes back npts x n and hess npts x n^2, row-major.
struct BatchJets {
    std::vector<double> grad;
    std::vector<double> hess;
};
BatchJets gradient_hessian_batch(const WaveSample& f, std::span<const double> points);

/// Evaluates f on the uniform grid x_i = origin + 2pi*i/grid per axis.
/// Row-major with the first axis slowest; size grid^n.
std::vector<double> evaluate_on_grid(const WaveSample& f, int grid,
                                     std::span<const double> origin = {});

/// Exact translate: g(x) = f(x - tau), still in H_lambda.
WaveSample translate(const WaveSample& f, std::span<const double> tau);

/// Exact diagonal derivative of the normalized spectral projector,
/// d^alpha_y d^beta_z C(y,z)|_{y=z}, via lattice sums; independent of y.
double kernel_derivative(const TorusSpec& spec, const std::vector<int>& alpha,
                         const std::vector<int>& beta);

/// Same quantity summed directly over basis-function derivatives at a point
/// (stationarity cross-check).
double kernel_derivative_at(const TorusSpec& spec, const std::vector<int>& alpha,
                            const std::vector<int>& beta, std::span<const double> y);

/// Exact finite-lambda covariance of the scaled jet, entries
/// kernel_derivative(alpha_a, alpha_b) / lambda^{|a|+|b|}.
std::vector<std::vector<double>> kernel_jet_covariance(const TorusSpec& spec);

struct EmpiricalCovariance {
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> stderr_;
    std::size_t samples = 0;
};

/// Sample covariance of jet vectors at y (known zero mean), with per-entry
/// standard errors.  Deterministic for fixed spec/seed regardless of thread
/// count.
EmpiricalCovariance empirical_jet_covariance(const TorusSpec& spec, std::span<const double> y,
                                             std::size_t samples, int threads = 1);

/// Audit table: columns k, phase, normalization.
std::string basis_csv(const TorusSpec& spec);

}  // namespace nlab::ensemble
