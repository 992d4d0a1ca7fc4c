#include "nlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nlab/combinatorics.hpp"
#include "nlab/parallel.hpp"

namespace nlab::ensemble {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_spec(const TorusSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("TorusSpec: dimension must be >= 1");
    if (spec.lambda < 0) throw std::invalid_argument("TorusSpec: lambda must be >= 0");
}

bool lex_positive(const std::vector<int>& k) {
    for (int v : k) {
        if (v > 0) return true;
        if (v < 0) return false;
    }
    return false;  // zero vector
}

// Lexicographic enumeration of the lattice box [-K,K]^n filtered to the
// closed ball |k| <= lambda.
void lattice_ball(int n, double lambda, std::vector<int>& k, int axis,
                  const std::function<void(const std::vector<int>&)>& fn) {
    if (axis == n) {
        double norm_sq = 0;
        for (int v : k) norm_sq += static_cast<double>(v) * v;
        if (norm_sq <= lambda * lambda) fn(k);
        return;
    }
    const int K = static_cast<int>(std::floor(lambda));
    for (int v = -K; v <= K; ++v) {
        k[axis] = v;
        lattice_ball(n, lambda, k, axis + 1, fn);
    }
}

int multi_order(const std::vector<int>& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
}

// d^m/dtheta^m of cos(theta) and sin(theta) as (coefficient of cos, of sin).
std::pair<double, double> trig_derivative(Phase phase, int m) {
    // cos: cycle cos, -sin, -cos, sin ; sin: cycle sin, cos, -sin, -cos
    static constexpr double cos_c[4] = {1, 0, -1, 0};
    static constexpr double cos_s[4] = {0, -1, 0, 1};
    static constexpr double sin_c[4] = {0, 1, 0, -1};
    static constexpr double sin_s[4] = {1, 0, -1, 0};
    const int r = m & 3;
    if (phase == Phase::Cos) return {cos_c[r], cos_s[r]};
    return {sin_c[r], sin_s[r]};
}

double basis_derivative(const BasisFunction& fn, std::span<const double> x,
                        const std::vector<int>& alpha) {
    double theta = 0.0;
    double kpow = 1.0;
    for (size_t j = 0; j < fn.k.size(); ++j) {
        theta += fn.k[j] * x[j];
        for (int i = 0; i < alpha[j]; ++i) kpow *= fn.k[j];
    }
    const auto [cc, cs] = trig_derivative(fn.phase, multi_order(alpha));
    return fn.normalization * kpow * (cc * std::cos(theta) + cs * std::sin(theta));
}

}  // namespace

double TorusSpec::volume() const { return std::pow(kTwoPi, n); }

std::vector<BasisFunction> enumerate_basis(const TorusSpec& spec) {
    check_spec(spec);
    const double vol = spec.volume();
    std::vector<BasisFunction> out;
    if (spec.lambda < 0) return out;
    out.push_back({std::vector<int>(spec.n, 0), Phase::Cos, 1.0 / std::sqrt(vol)});
    const double norm = std::sqrt(2.0 / vol);
    std::vector<int> k(spec.n, 0);
    lattice_ball(spec.n, spec.lambda, k, 0, [&](const std::vector<int>& kk) {
        if (!lex_positive(kk)) return;
        out.push_back({kk, Phase::Cos, norm});
        out.push_back({kk, Phase::Sin, norm});
    });
    return out;
}

std::shared_ptr<const Basis> Basis::make(const TorusSpec& spec) {
    auto b = std::make_shared<Basis>();
    b->spec = spec;
    b->functions = enumerate_basis(spec);
    return b;
}

double WaveSample::l2_norm_sq() const {
    double s = 0.0;
    for (double c : coefficients) s += c * c;
    return s;
}

double WaveSample::rms() const { return std::sqrt(l2_norm_sq() / basis->spec.volume()); }

WaveSample sample(const std::shared_ptr<const Basis>& basis, rng::CounterRng& gen) {
    WaveSample f;
    f.basis = basis;
    const double sd = 1.0 / std::sqrt(static_cast<double>(basis->size()));
    f.coefficients.resize(basis->size());
    for (double& c : f.coefficients) c = sd * gen.next_gaussian();
    return f;
}

double evaluate(const WaveSample& f, std::span<const double> x) {
    const auto& fns = f.basis->functions;
    double s = 0.0;
    for (size_t j = 0; j < fns.size(); ++j) {
        double theta = 0.0;
        for (size_t a = 0; a < fns[j].k.size(); ++a) theta += fns[j].k[a] * x[a];
        const double t = fns[j].phase == Phase::Cos ? std::cos(theta) : std::sin(theta);
        s += f.coefficients[j] * fns[j].normalization * t;
    }
    return s;
}

std::vector<double> gradient(const WaveSample& f, std::span<const double> x) {
    const int n = f.dim();
    const auto& fns = f.basis->functions;
    std::vector<double> g(n, 0.0);
    for (size_t j = 0; j < fns.size(); ++j) {
        double theta = 0.0;
        for (int a = 0; a < n; ++a) theta += fns[j].k[a] * x[a];
        // d/dx_r cos = -k_r sin, d/dx_r sin = k_r cos
        const double w = f.coefficients[j] * fns[j].normalization *
                         (fns[j].phase == Phase::Cos ? -std::sin(theta) : std::cos(theta));
        for (int r = 0; r < n; ++r) g[r] += w * fns[j].k[r];
    }
    return g;
}

std::vector<double> hessian(const WaveSample& f, std::span<const double> x) {
    const int n = f.dim();
    const auto& fns = f.basis->functions;
    std::vector<double> h(static_cast<size_t>(n) * n, 0.0);
    for (size_t j = 0; j < fns.size(); ++j) {
        double theta = 0.0;
        for (int a = 0; a < n; ++a) theta += fns[j].k[a] * x[a];
        const double w = -f.coefficients[j] * fns[j].normalization *
                         (fns[j].phase == Phase::Cos ? std::cos(theta) : std::sin(theta));
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) h[static_cast<size_t>(r) * n + s] += w * fns[j].k[r] * fns[j].k[s];
    }
    return h;
}

std::vector<double> jet(const WaveSample& f, std::span<const double> x) {
    const int n = f.dim();
    const double lambda = f.lambda();
    std::vector<double> out(comb::jet_dim(n));
    out[0] = evaluate(f, x);
    const auto g = gradient(f, x);
    for (int l = 0; l < n; ++l) out[1 + l] = g[l] / lambda;
    const auto h = hessian(f, x);
    const double l2 = lambda * lambda;
    for (int s = 1; s <= n; ++s)
        for (int r = 1; r <= n; ++r)
            out[comb::hessian_slot(n, r, s)] = h[static_cast<size_t>(r - 1) * n + (s - 1)] / l2;
    return out;
}

BatchJets gradient_hessian_batch(const WaveSample& f, std::span<const double> points) {
    const int n = f.dim();
    if (points.size() % static_cast<size_t>(n) != 0)
        throw std::invalid_argument("gradient_hessian_batch: points size not a multiple of n");
    const size_t npts = points.size() / static_cast<size_t>(n);
    const auto& fns = f.basis->functions;
    const size_t nf = fns.size();
    const int K = static_cast<int>(std::floor(f.lambda()));

    // flat per-function data for the hot loop
    std::vector<int> ks(nf * static_cast<size_t>(n));
    std::vector<double> w(nf);
    std::vector<unsigned char> is_cos(nf);
    for (size_t j = 0; j < nf; ++j) {
        for (int a = 0; a < n; ++a) ks[j * n + a] = fns[j].k[a];
        w[j] = f.coefficients[j] * fns[j].normalization;
        is_cos[j] = fns[j].phase == Phase::Cos;
    }

    BatchJets out;
    out.grad.assign(npts * static_cast<size_t>(n), 0.0);
    out.hess.assign(npts * static_cast<size_t>(n) * n, 0.0);
    using cd = std::complex<double>;
    std::vector<cd> table(static_cast<size_t>(n) * (K + 1));

    for (size_t p = 0; p < npts; ++p) {
        for (int a = 0; a < n; ++a) {
            const cd e1 = std::polar(1.0, points[p * n + a]);
            cd cur(1.0, 0.0);
            table[a * (K + 1)] = cur;
            for (int k = 1; k <= K; ++k) {
                cur *= e1;
                table[a * (K + 1) + k] = cur;
            }
        }
        double* g = out.grad.data() + p * n;
        double* h = out.hess.data() + p * static_cast<size_t>(n) * n;
        for (size_t j = 0; j < nf; ++j) {
            cd phase(1.0, 0.0);
            const int* kj = ks.data() + j * n;
            for (int a = 0; a < n; ++a) {
                const int k = kj[a];
                const cd e = table[a * (K + 1) + std::abs(k)];
                phase *= k >= 0 ? e : std::conj(e);
            }
            const double c = phase.real(), s = phase.imag();
            const double wg = w[j] * (is_cos[j] ? -s : c);
            const double wh = -w[j] * (is_cos[j] ? c : s);
            for (int r = 0; r < n; ++r) {
                g[r] += wg * kj[r];
                const double whr = wh * kj[r];
                for (int q = 0; q < n; ++q) h[r * n + q] += whr * kj[q];
            }
        }
    }
    return out;
}

std::vector<double> evaluate_on_grid(const WaveSample& f, int grid, std::span<const double> origin) {
    if (grid < 1) throw std::invalid_argument("evaluate_on_grid: grid must be >= 1");
    const int n = f.dim();
    const TorusSpec& spec = f.basis->spec;
    const int K = static_cast<int>(std::floor(spec.lambda));
    const int kd = 2 * K + 1;
    std::vector<double> orig(n, 0.0);
    if (!origin.empty()) {
        if (static_cast<int>(origin.size()) != n)
            throw std::invalid_argument("evaluate_on_grid: origin size mismatch");
        std::copy(origin.begin(), origin.end(), orig.begin());
    }

    using cd = std::complex<double>;
    // Frequency-space weights: f(x) = Re sum_k w_k exp(i k.x).
    std::size_t ksize = 1;
    for (int a = 0; a < n; ++a) ksize *= static_cast<std::size_t>(kd);
    std::vector<cd> cur(ksize, cd(0.0, 0.0));
    const auto& fns = f.basis->functions;
    for (size_t j = 0; j < fns.size(); ++j) {
        std::size_t idx = 0;
        for (int a = 0; a < n; ++a) idx = idx * kd + static_cast<std::size_t>(fns[j].k[a] + K);
        const double w = f.coefficients[j] * fns[j].normalization;
        if (fns[j].phase == Phase::Cos)
            cur[idx] += cd(w, 0.0);
        else
            cur[idx] += cd(0.0, -w);
    }

    // Contract one frequency axis at a time against per-axis exponential
    // tables; layout stays [k_1..k_{a-1}, x_a..x_n] with the last axis
    // fastest.
    const std::size_t g = static_cast<std::size_t>(grid);
    for (int axis = n - 1; axis >= 0; --axis) {
        std::vector<cd> table(static_cast<std::size_t>(kd) * g);
        for (int kv = -K; kv <= K; ++kv)
            for (std::size_t gi = 0; gi < g; ++gi) {
                const double xg = orig[axis] + kTwoPi * static_cast<double>(gi) / static_cast<double>(grid);
                table[static_cast<std::size_t>(kv + K) * g + gi] = std::polar(1.0, kv * xg);
            }
        std::size_t prefix = 1;
        for (int a = 0; a < axis; ++a) prefix *= static_cast<std::size_t>(kd);
        std::size_t suffix = 1;
        for (int a = axis + 1; a < n; ++a) suffix *= g;
        std::vector<cd> next(prefix * g * suffix, cd(0.0, 0.0));
        for (std::size_t p = 0; p < prefix; ++p)
            for (int kv = 0; kv < kd; ++kv) {
                const cd* src = cur.data() + (p * kd + static_cast<std::size_t>(kv)) * suffix;
                for (std::size_t gi = 0; gi < g; ++gi) {
                    const cd e = table[static_cast<std::size_t>(kv) * g + gi];
                    cd* dst = next.data() + (p * g + gi) * suffix;
                    for (std::size_t s = 0; s < suffix; ++s) dst[s] += e * src[s];
                }
            }
        cur = std::move(next);
    }

    std::vector<double> out(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) out[i] = cur[i].real();
    return out;
}

WaveSample translate(const WaveSample& f, std::span<const double> tau) {
    const int n = f.dim();
    if (static_cast<int>(tau.size()) != n) throw std::invalid_argument("translate: tau size mismatch");
    WaveSample out;
    out.basis = f.basis;
    out.coefficients.assign(f.coefficients.size(), 0.0);
    const auto& fns = f.basis->functions;
    // Layout: index 0 is the constant; cos/sin pairs sit adjacently after it.
    out.coefficients[0] = f.coefficients[0];
    for (size_t j = 1; j + 1 < fns.size() + 1 && j < fns.size(); j += 2) {
        double phi = 0.0;
        for (int a = 0; a < n; ++a) phi += fns[j].k[a] * tau[a];
        const double c = std::cos(phi), s = std::sin(phi);
        const double a0 = f.coefficients[j], b0 = f.coefficients[j + 1];
        out.coefficients[j] = a0 * c - b0 * s;
        out.coefficients[j + 1] = a0 * s + b0 * c;
    }
    return out;
}

double kernel_derivative(const TorusSpec& spec, const std::vector<int>& alpha,
                         const std::vector<int>& beta) {
    check_spec(spec);
    if (static_cast<int>(alpha.size()) != spec.n || static_cast<int>(beta.size()) != spec.n)
        throw std::invalid_argument("kernel_derivative: multi-indices must have n entries");
    const int oa = multi_order(alpha), ob = multi_order(beta);
    if ((oa - ob) % 2 != 0) return 0.0;
    std::vector<int> gamma(spec.n);
    for (int j = 0; j < spec.n; ++j) {
        gamma[j] = alpha[j] + beta[j];
        if (gamma[j] % 2 != 0) return 0.0;  // odd lattice sums cancel exactly
    }
    double lattice_sum = 0.0;
    double count = 0.0;
    std::vector<int> k(spec.n, 0);
    lattice_ball(spec.n, spec.lambda, k, 0, [&](const std::vector<int>& kk) {
        count += 1.0;
        double term = 1.0;
        for (int j = 0; j < spec.n; ++j)
            for (int i = 0; i < gamma[j]; ++i) term *= kk[j];
        lattice_sum += term;
    });
    const double sign = (((oa - ob) / 2) % 2 == 0) ? 1.0 : -1.0;
    return sign * lattice_sum / (count * spec.volume());
}

double kernel_derivative_at(const TorusSpec& spec, const std::vector<int>& alpha,
                            const std::vector<int>& beta, std::span<const double> y) {
    const auto fns = enumerate_basis(spec);
    double s = 0.0;
    for (const auto& fn : fns) s += basis_derivative(fn, y, alpha) * basis_derivative(fn, y, beta);
    return s / static_cast<double>(fns.size());
}

std::vector<std::vector<double>> kernel_jet_covariance(const TorusSpec& spec) {
    comb::JetCovariance ordering;
    ordering.n = spec.n;
    const int d = comb::jet_dim(spec.n);
    std::vector<std::vector<double>> out(d, std::vector<double>(d, 0.0));
    for (int a = 0; a < d; ++a) {
        const auto ia = ordering.slot_multi_index(a);
        for (int b = a; b < d; ++b) {
            const auto ib = ordering.slot_multi_index(b);
            const double scale = std::pow(spec.lambda, multi_order(ia) + multi_order(ib));
            const double v = kernel_derivative(spec, ia, ib) / scale;
            out[a][b] = v;
            out[b][a] = v;
        }
    }
    return out;
}

EmpiricalCovariance empirical_jet_covariance(const TorusSpec& spec, std::span<const double> y,
                                             std::size_t samples, int threads) {
    check_spec(spec);
    auto basis = Basis::make(spec);
    const int d = comb::jet_dim(spec.n);
    // Per-basis-function jet contributions at y; a trial's jet is the
    // coefficient-weighted sum of rows.
    comb::JetCovariance ordering;
    ordering.n = spec.n;
    std::vector<std::vector<double>> table(basis->size(), std::vector<double>(d, 0.0));
    const double lambda = spec.lambda;
    for (size_t j = 0; j < basis->size(); ++j)
        for (int slot = 0; slot < d; ++slot) {
            const auto idx = ordering.slot_multi_index(slot);
            table[j][slot] =
                basis_derivative(basis->functions[j], y, idx) / std::pow(lambda, multi_order(idx));
        }

    const std::size_t ncomp = static_cast<std::size_t>(d) * d;
    auto stats = parallel::run_trials(samples, threads, ncomp, [&](std::size_t trial) {
        rng::CounterRng gen(rng::stream_id(spec.seed, "jet-cov", trial));
        WaveSample f = sample(basis, gen);
        std::vector<double> F(d, 0.0);
        for (size_t j = 0; j < table.size(); ++j) {
            const double c = f.coefficients[j];
            for (int s = 0; s < d; ++s) F[s] += c * table[j][s];
        }
        parallel::TrialOutput out;
        out.values.resize(ncomp);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) out.values[static_cast<size_t>(a) * d + b] = F[a] * F[b];
        return out;
    });

    EmpiricalCovariance out;
    out.samples = samples;
    out.mean.assign(d, std::vector<double>(d, 0.0));
    out.stderr_.assign(d, std::vector<double>(d, 0.0));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            out.mean[a][b] = stats.mean[static_cast<size_t>(a) * d + b];
            out.stderr_[a][b] = stats.stderr_[static_cast<size_t>(a) * d + b];
        }
    return out;
}

std::string basis_csv(const TorusSpec& spec) {
    std::ostringstream os;
    os << "k,phase,normalization\n";
    os.precision(17);
    for (const auto& fn : enumerate_basis(spec)) {
        for (size_t a = 0; a < fn.k.size(); ++a) os << (a ? ";" : "") << fn.k[a];
        os << ',' << (fn.phase == Phase::Cos ? "cos" : "sin") << ',' << fn.normalization << '\n';
    }
    return os.str();
}

}  // namespace nlab::ensemble
