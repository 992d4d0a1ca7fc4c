#include "nlab/harness.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <limits>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nlab/combinatorics.hpp"
#include "nlab/ensemble.hpp"
#include "nlab/grassmann.hpp"
#include "nlab/parallel.hpp"
#include "nlab/quadrature.hpp"
#include "nlab/rng.hpp"

namespace nlab::harness {

using json = nlohmann::json;

const std::vector<std::string> kKnownKinds = {
    "constants-table", "comb-verify", "berezin-verify", "kernel-check", "jet-cov",
    "zero-count",      "nodal-length", "pairing",       "euler-3d",
};

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxResampleAttempts = 64;
constexpr double kMaxDiscardRate = 1e-3;

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool known_kind(const std::string& kind) {
    for (const auto& k : kKnownKinds)
        if (k == kind) return true;
    return false;
}

double safe_ratio(double mean, double predicted) {
    return predicted != 0.0 ? mean / predicted : std::numeric_limits<double>::quiet_NaN();
}

double safe_z(double mean, double predicted, double se) {
    if (se <= 0.0) return 0.0;
    return (mean - predicted) / se;
}

void check_discard_rate(ExperimentResult& r) {
    const double rate =
        static_cast<double>(r.discards) / static_cast<double>(r.samples + r.discards);
    if (rate > kMaxDiscardRate) {
        r.pass = false;
        throw std::runtime_error("degenerate-sample discard rate " + std::to_string(rate) +
                                 " exceeds 0.1%");
    }
}

}  // namespace

double bump01(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return std::exp(-1.0 / (u * (1.0 - u)));
}

nodal::TestForm make_form(int n, const FormSpec& spec) {
    if (spec.weight != "cos2" && spec.weight != "one")
        throw std::invalid_argument("FormSpec: unknown weight '" + spec.weight + "'");
    nodal::TestForm form;
    form.n = n;
    form.r0 = spec.r0;
    form.r1 = spec.r1;
    const double r0 = spec.r0, r1 = spec.r1, shift = spec.shift;
    const bool cos2 = spec.weight == "cos2";
    auto weighted_bump = [r0, r1, shift, cos2](std::span<const double> y,
                                               std::span<const double> eta) {
        double r = 0.0;
        for (double e : eta) r += e * e;
        r = std::sqrt(r);
        const double b = bump01((r - r0) / (r1 - r0));
        if (b == 0.0) return 0.0;
        double w = 1.0;
        if (cos2) {
            const double c = std::cos(y[0] - shift);
            w = c * c;
        }
        return w * b;
    };
    nodal::TestForm::Component comp;
    comp.y_mask = 0;
    comp.eta_mask = (1u << n) - 1u;
    comp.value = weighted_bump;
    form.components.push_back(std::move(comp));
    if (n >= 2) {
        // A mixed dy^1 ^ deta_2 ^ ... component. For even n the pure-deta
        // part integrates to zero pathwise (its wedge coefficient is odd in
        // t while the radial bump is even), so this component is what makes
        // the even-dimension runs statistically nontrivial; its expectation
        // still sits below the lambda^n leading order.
        nodal::TestForm::Component mixed;
        mixed.y_mask = 1u;
        mixed.eta_mask = (1u << n) - 2u;
        mixed.value = weighted_bump;
        form.components.push_back(std::move(mixed));
    }
    form.validate();
    return form;
}

double form_integral(int n, const FormSpec& spec) {
    const double weight_integral =
        (spec.weight == "cos2" ? std::numbers::pi : kTwoPi) * std::pow(kTwoPi, n - 1);
    auto radial = [&](double r) {
        return bump01((r - spec.r0) / (spec.r1 - spec.r0)) * std::pow(r, n - 1);
    };
    const double eta_integral =
        comb::sphere_volume(n - 1) * quadrature::integrate(radial, spec.r0, spec.r1, 96);
    return weight_integral * eta_integral;
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    ExperimentConfig cfg;
    for (auto& [key, value] : j.items()) {
        if (key == "experiment")
            cfg.kind = value.get<std::string>();
        else if (key == "dim")
            cfg.dim = value.get<int>();
        else if (key == "lambda")
            cfg.lambda = value.get<double>();
        else if (key == "samples")
            cfg.samples = value.get<long>();
        else if (key == "grid")
            cfg.grid = value.get<int>();
        else if (key == "seed")
            cfg.seed = value.get<std::uint64_t>();
        else if (key == "threads")
            cfg.threads = value.get<int>();
        else if (key == "out")
            cfg.out = value.get<std::string>();
        else if (key == "format")
            cfg.format = value.get<std::string>();
        else if (key == "form") {
            if (value.contains("weight")) cfg.form.weight = value["weight"].get<std::string>();
            if (value.contains("r0")) cfg.form.r0 = value["r0"].get<double>();
            if (value.contains("r1")) cfg.form.r1 = value["r1"].get<double>();
            if (value.contains("shift")) cfg.form.shift = value["shift"].get<double>();
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

void apply_defaults(ExperimentConfig& cfg) {
    if (!known_kind(cfg.kind))
        throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
    auto def = [](auto& field, auto value) {
        if (field == 0) field = value;
    };
    if (cfg.kind == "constants-table") {
        def(cfg.dim, 8);
    } else if (cfg.kind == "comb-verify") {
        def(cfg.dim, 8);
    } else if (cfg.kind == "berezin-verify") {
        def(cfg.dim, 9);
    } else if (cfg.kind == "kernel-check") {
        def(cfg.dim, 2);
    } else if (cfg.kind == "jet-cov") {
        def(cfg.dim, 2);
        def(cfg.lambda, 25.0);
        def(cfg.samples, 200000L);
    } else if (cfg.kind == "zero-count") {
        def(cfg.dim, 1);
        def(cfg.lambda, 40.0);
        def(cfg.samples, 5000L);
        if (cfg.dim != 1) throw std::invalid_argument("zero-count: dim must be 1");
    } else if (cfg.kind == "nodal-length") {
        def(cfg.dim, 2);
        def(cfg.lambda, 15.0);
        def(cfg.samples, 300L);
        def(cfg.grid, 256);
        if (cfg.dim != 2) throw std::invalid_argument("nodal-length: dim must be 2");
    } else if (cfg.kind == "pairing") {
        def(cfg.dim, 1);
        if (cfg.dim == 1) {
            def(cfg.lambda, 40.0);
            def(cfg.samples, 5000L);
        } else if (cfg.dim == 2) {
            def(cfg.lambda, 10.0);
            def(cfg.samples, 2000L);
        } else {
            throw std::invalid_argument("pairing: dim must be 1 or 2");
        }
    } else if (cfg.kind == "euler-3d") {
        def(cfg.dim, 3);
        def(cfg.lambda, 6.0);
        def(cfg.samples, 200L);
        def(cfg.grid, 96);
        if (cfg.dim != 3) throw std::invalid_argument("euler-3d: dim must be 3");
    }
    if (cfg.samples < 0) throw std::invalid_argument("samples must be >= 1");
    if (cfg.format != "csv" && cfg.format != "json")
        throw std::invalid_argument("format must be csv or json");
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NODAL_LAB_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

// ---------------------------------------------------------------- exact kinds

RunOutput run_constants_table(const ExperimentConfig& cfg) {
    RunOutput out;
    out.table = comb::constants_table_csv(cfg.dim);
    int checked = 0, matched = 0;
    std::istringstream is(out.table);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        ++checked;
        if (line.size() >= 4 && line.substr(line.size() - 4) == "true") ++matched;
    }
    ExperimentResult r;
    r.kind = cfg.kind;
    r.n = cfg.dim;
    r.samples = checked;
    r.mean = matched;
    r.predicted = checked;
    r.ratio = safe_ratio(r.mean, r.predicted);
    r.seed = cfg.seed;
    r.pass = matched == checked;
    r.prediction_source =
        "exact rational identity: brute-force signed permutation sum vs closed form "
        "(n-1)!/((n-1)/2)! (2 pi^2/((n+2)^2 Vol))^{(n-1)/2}";
    out.pass = r.pass;
    out.results.push_back(std::move(r));
    return out;
}

RunOutput run_comb_verify(const ExperimentConfig& cfg) {
    RunOutput out;
    int checked = 0, matched = 0;
    std::ostringstream table;
    table << "n,mode,sum,closed,match\n";
    for (int n = 1; n <= cfg.dim; ++n) {
        const ExactScalar closed = comb::signed_permutation_sum_closed_form(n);
        bool ok = true;
        ExactScalar brute = ExactScalar::zero();
        try {
            brute = comb::signed_permutation_sum(n);
        } catch (const std::logic_error&) {
            ok = false;
        }
        ++checked;
        if (ok) ++matched;
        table << n << ",involutions," << brute.str() << ',' << closed.str() << ','
              << (ok ? "true" : "false") << '\n';
        if (n <= 5) {
            bool ok_full = true;
            ExactScalar full = ExactScalar::zero();
            try {
                full = comb::signed_permutation_sum(n, comb::SumMode::FullSymmetricGroup);
            } catch (const std::logic_error&) {
                ok_full = false;
            }
            ++checked;
            if (ok_full) ++matched;
            table << n << ",full," << full.str() << ',' << closed.str() << ','
                  << (ok_full ? "true" : "false") << '\n';
        }
    }
    out.table = table.str();
    ExperimentResult r;
    r.kind = cfg.kind;
    r.n = cfg.dim;
    r.samples = checked;
    r.mean = matched;
    r.predicted = checked;
    r.ratio = safe_ratio(r.mean, r.predicted);
    r.seed = cfg.seed;
    r.pass = matched == checked;
    r.prediction_source = "exact rational identity for the signed permutation-partition sum";
    out.pass = r.pass;
    out.results.push_back(std::move(r));
    return out;
}

RunOutput run_berezin_verify(const ExperimentConfig& cfg) {
    RunOutput out;
    int checked = 0, matched = 0;
    std::ostringstream table;
    table << "n,leading_constant,expected,match\n";
    for (int n = 1; n <= cfg.dim; ++n) {
        const Rational got = grassmann::leading_constant(n, Rational(1));
        Rational expected(0);
        if (n % 2 == 1) expected = Rational(factorial(n - 1), factorial((n - 1) / 2));
        ++checked;
        const bool ok = got == expected;
        if (ok) ++matched;
        table << n << ',' << got << ',' << expected << ',' << (ok ? "true" : "false") << '\n';
    }
    for (int n = 2; n <= std::min(cfg.dim, 6); ++n)
        for (int r = 1; r <= n; ++r) {
            ++checked;
            if (grassmann::quadratic_vanishing_check(n, r)) ++matched;
        }
    out.table = table.str();
    ExperimentResult r;
    r.kind = cfg.kind;
    r.n = cfg.dim;
    r.samples = checked;
    r.mean = matched;
    r.predicted = checked;
    r.ratio = safe_ratio(r.mean, r.predicted);
    r.seed = cfg.seed;
    r.pass = matched == checked;
    r.prediction_source =
        "odd-derivative coefficient of exp(c (sum P_j E_j)^2) vs (n-1)!/((n-1)/2)! c^{(n-1)/2}";
    out.pass = r.pass;
    out.results.push_back(std::move(r));
    return out;
}

RunOutput run_kernel_check(const ExperimentConfig& cfg) {
    RunOutput out;
    std::ostringstream table;
    table << "n,lambda,alpha,beta,scaled_value,limit,abs_err\n";
    table.precision(17);
    int checked = 0, matched = 0;
    rng::CounterRng gen(rng::stream_id(cfg.seed, "kernel-check", 0));

    for (int n = 1; n <= std::min(cfg.dim, 2); ++n) {
        // entry set from the derivative table of orders <= 4
        std::vector<std::pair<std::vector<int>, std::vector<int>>> entries;
        auto e = [&](int j) {
            std::vector<int> v(n, 0);
            v[j] = 1;
            return v;
        };
        auto e2 = [&](int j) {
            std::vector<int> v(n, 0);
            v[j] = 2;
            return v;
        };
        const std::vector<int> zero(n, 0);
        entries.push_back({zero, zero});
        entries.push_back({e2(0), zero});
        entries.push_back({e(0), e(0)});
        entries.push_back({e2(0), e2(0)});
        if (n >= 2) {
            entries.push_back({e2(0), e2(1)});
            std::vector<int> mixed(n, 0);
            mixed[0] = 1;
            mixed[1] = 1;
            entries.push_back({mixed, mixed});
        }

        for (const auto& [alpha, beta] : entries) {
            int order = 0;
            for (int v : alpha) order += v;
            for (int v : beta) order += v;
            const double limit =
                comb::spectral_constant(n, alpha, beta).value().convert_to<double>();
            // K/lambda envelope with pinned K (lambda * err * Vol <= 1), and
            // errors decreasing in lambda up to the lattice-fluctuation floor
            // 0.02/(lambda * Vol) that 2-D Gauss-circle discrepancy leaves.
            double prev_err = std::numeric_limits<double>::infinity();
            bool converging = true;
            for (double lambda : {10.0, 20.0, 40.0}) {
                ensemble::TorusSpec spec{n, lambda, cfg.seed};
                const double vol = spec.volume();
                const double scaled =
                    ensemble::kernel_derivative(spec, alpha, beta) / std::pow(lambda, order);
                const double err = std::abs(scaled - limit / vol);
                std::ostringstream astr, bstr;
                for (size_t i = 0; i < alpha.size(); ++i) astr << (i ? ";" : "") << alpha[i];
                for (size_t i = 0; i < beta.size(); ++i) bstr << (i ? ";" : "") << beta[i];
                table << n << ',' << lambda << ',' << astr.str() << ',' << bstr.str() << ','
                      << scaled << ',' << limit / vol << ',' << err << '\n';
                if (err > 1.0 / (lambda * vol)) converging = false;
                if (err > prev_err + 0.02 / (lambda * vol)) converging = false;
                prev_err = err;
            }
            ++checked;
            if (converging) ++matched;

            // stationarity: direct basis-product sums at random points agree
            // with the lattice formula
            ensemble::TorusSpec spec{n, 20.0, cfg.seed};
            const double formula = ensemble::kernel_derivative(spec, alpha, beta);
            bool stationary = true;
            for (int trial = 0; trial < 5; ++trial) {
                std::vector<double> y(n);
                for (double& v : y) v = kTwoPi * gen.next_unit();
                const double direct = ensemble::kernel_derivative_at(spec, alpha, beta, y);
                if (std::abs(direct - formula) > 1e-9 * std::max(1.0, std::abs(formula)))
                    stationary = false;
            }
            ++checked;
            if (stationary) ++matched;
        }

        // parity: any odd entry of alpha+beta vanishes exactly
        ensemble::TorusSpec spec{n, 20.0, cfg.seed};
        std::vector<int> a(n, 0), b(n, 0);
        a[0] = 1;
        ++checked;
        if (ensemble::kernel_derivative(spec, a, b) == 0.0) ++matched;
        a[0] = 2;
        b[0] = 1;
        ++checked;
        if (ensemble::kernel_derivative(spec, a, b) == 0.0) ++matched;
    }

    out.table = table.str();
    ExperimentResult r;
    r.kind = cfg.kind;
    r.n = cfg.dim;
    r.samples = checked;
    r.mean = matched;
    r.predicted = checked;
    r.ratio = safe_ratio(r.mean, r.predicted);
    r.seed = cfg.seed;
    r.pass = matched == checked;
    r.prediction_source =
        "diagonal spectral-projector derivatives: exact lattice sums vs their high-frequency "
        "limits C_{n,alpha,beta}/Vol";
    out.pass = r.pass;
    out.results.push_back(std::move(r));
    return out;
}

// ----------------------------------------------------------- statistical kinds

RunOutput run_jet_cov(const ExperimentConfig& cfg) {
    RunOutput out;
    ensemble::TorusSpec spec{cfg.dim, cfg.lambda, cfg.seed};
    const int threads = resolve_threads(cfg.threads);
    const std::vector<double> y(cfg.dim, 0.0);
    const auto emp = ensemble::empirical_jet_covariance(spec, y, static_cast<size_t>(cfg.samples),
                                                        threads);
    const auto exact = ensemble::kernel_jet_covariance(spec);
    const auto limit = comb::jet_covariance(cfg.dim);
    const double vol = spec.volume();
    const int d = comb::jet_dim(cfg.dim);

    double max_z = 0.0, max_rel = 0.0;
    std::ostringstream table;
    table << "slot_a,slot_b,empirical,stderr,lattice,limit_over_vol,z,rel_err\n";
    table.precision(17);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            const double lim = limit.matrix[a][b].convert_to<double>() / vol;
            const double z = emp.stderr_[a][b] > 0
                                 ? std::abs(emp.mean[a][b] - exact[a][b]) / emp.stderr_[a][b]
                                 : 0.0;
            max_z = std::max(max_z, z);
            double rel = 0.0;
            if (std::abs(lim) >= 1e-3) {
                rel = std::abs(exact[a][b] - lim) / std::abs(lim);
                max_rel = std::max(max_rel, rel);
            }
            table << a << ',' << b << ',' << emp.mean[a][b] << ',' << emp.stderr_[a][b] << ','
                  << exact[a][b] << ',' << lim << ',' << z << ',' << rel << '\n';
        }
    out.table = table.str();

    ExperimentResult rz;
    rz.kind = cfg.kind;
    rz.n = cfg.dim;
    rz.lambda = cfg.lambda;
    rz.samples = cfg.samples;
    rz.mean = max_z;
    rz.predicted = 3.0;
    rz.ratio = safe_ratio(max_z, 3.0);
    rz.z = max_z;
    rz.seed = cfg.seed;
    rz.pass = max_z <= 3.0;
    rz.prediction_source =
        "empirical jet covariance vs exact lattice-sum covariance (max z over entries)";

    ExperimentResult rl;
    rl.kind = cfg.kind + "-lattice-vs-limit";
    rl.n = cfg.dim;
    rl.lambda = cfg.lambda;
    rl.samples = cfg.samples;
    rl.mean = max_rel;
    rl.predicted = 0.05;
    rl.ratio = safe_ratio(max_rel, 0.05);
    rl.seed = cfg.seed;
    rl.pass = max_rel <= 0.05;
    rl.prediction_source =
        "lattice-sum jet covariance vs limiting matrix A0/Vol (max relative error on entries of "
        "magnitude >= 1e-3)";

    out.pass = rz.pass && rl.pass;
    out.results.push_back(std::move(rz));
    out.results.push_back(std::move(rl));
    return out;
}

RunOutput run_zero_count(const ExperimentConfig& cfg) {
    RunOutput out;
    ensemble::TorusSpec spec{1, cfg.lambda, cfg.seed};
    auto basis = ensemble::Basis::make(spec);
    const int grid = cfg.grid > 0 ? cfg.grid : nodal::auto_grid(cfg.lambda, 1);
    const int threads = resolve_threads(cfg.threads);

    auto stats = parallel::run_trials(
        static_cast<size_t>(cfg.samples), threads, 1, [&](std::size_t trial) {
            parallel::TrialOutput t;
            for (int attempt = 0;; ++attempt) {
                if (attempt >= kMaxResampleAttempts)
                    throw std::runtime_error("zero-count: too many degenerate resamples");
                rng::CounterRng gen(rng::stream_id(cfg.seed, "zero-count", trial,
                                                   static_cast<std::uint64_t>(attempt)));
                auto f = ensemble::sample(basis, gen);
                const double eps = 1e-8 * cfg.lambda * f.rms();
                auto zeros = nodal::find_zeros_circle(f, grid, 1e-10, eps);
                if (zeros.degenerate) {
                    ++t.discards;
                    continue;
                }
                t.values = {static_cast<double>(nodal::euler_points(zeros))};
                return t;
            }
        });

    ExperimentResult r;
    r.kind = cfg.kind;
    r.n = 1;
    r.lambda = cfg.lambda;
    r.samples = cfg.samples;
    r.mean = stats.mean[0];
    r.stderr_ = stats.stderr_[0];
    r.predicted = comb::predicted_euler(1, cfg.lambda, kTwoPi);
    r.ratio = safe_ratio(r.mean, r.predicted);
    r.z = safe_z(r.mean, r.predicted, r.stderr_);
    r.discards = stats.discards;
    r.seed = cfg.seed;
    check_discard_rate(r);
    // exact finite-frequency mean via the Kac-Rice rate on the circle
    std::vector<int> one = {1};
    const double exact =
        2.0 * std::sqrt(ensemble::kernel_derivative(spec, one, one) * spec.volume());
    const double z_exact = safe_z(r.mean, exact, r.stderr_);
    r.pass = std::abs(r.ratio - 1.0) <= 0.03 && std::abs(z_exact) <= 3.0;
    r.prediction_source =
        "mean zero count: asymptotic 2 lambda/sqrt(3); exact finite-lambda rate "
        "2 sqrt(sum k^2 / N) used for the z gate";
    out.pass = r.pass;
    out.results.push_back(std::move(r));
    return out;
}

RunOutput run_nodal_length(const ExperimentConfig& cfg) {
    RunOutput out;
    ensemble::TorusSpec spec{2, cfg.lambda, cfg.seed};
    auto basis = ensemble::Basis::make(spec);
    const int grid = cfg.grid > 0 ? cfg.grid : nodal::auto_grid(cfg.lambda, 2);
    const int threads = resolve_threads(cfg.threads);
    const double vol = spec.volume();

    auto weight_one = [](std::span<const double>) { return 1.0; };
    auto weight_cos2 = [](std::span<const double> x) {
        const double c = std::cos(x[0]);
        return c * c;
    };

    auto stats = parallel::run_trials(
        static_cast<size_t>(cfg.samples), threads, 2, [&](std::size_t trial) {
            rng::CounterRng gen(rng::stream_id(cfg.seed, "nodal-length", trial));
            auto f = ensemble::sample(basis, gen);
            auto mesh = nodal::marching_squares(f, grid);
            parallel::TrialOutput t;
            t.values = {nodal::nodal_volume(mesh, weight_one),
                        nodal::nodal_volume(mesh, weight_cos2)};
            return t;
        });

    // exact finite-frequency mean length (stationary Gaussian level set)
    std::vector<int> e1 = {1, 0};
    const double exact_len =
        0.5 * vol * std::sqrt(ensemble::kernel_derivative(spec, e1, e1) * vol);

    const double weight_integrals[2] = {vol, 0.5 * vol};
    const double tolerances[2] = {0.05, 0.07};
    const char* names[2] = {"nodal-length", "nodal-length-weighted"};
    out.pass = true;
    for (int c = 0; c < 2; ++c) {
        ExperimentResult r;
        r.kind = names[c];
        r.n = 2;
        r.lambda = cfg.lambda;
        r.samples = cfg.samples;
        r.mean = stats.mean[c];
        r.stderr_ = stats.stderr_[c];
        r.predicted = comb::predicted_volume(2, cfg.lambda, vol, weight_integrals[c]);
        r.ratio = safe_ratio(r.mean, r.predicted);
        r.z = safe_z(r.mean, r.predicted, r.stderr_);
        r.seed = cfg.seed;
        // pass gate is the stated relative tolerance; the exact rate is
        // reported for reference only (chord-length discretization carries a
        // small systematic bias that a z gate against it would resolve)
        r.pass = std::abs(r.ratio - 1.0) <= tolerances[c];
        std::ostringstream src;
        src.precision(10);
        src << "mean (weighted) nodal length: (Vol(S^1)/Vol(S^2)) lambda/2 * weight integral; "
               "exact finite-lambda rate "
            << exact_len * weight_integrals[c] / vol << " from lattice sums";
        r.prediction_source = src.str();
        out.pass = out.pass && r.pass;
        out.results.push_back(std::move(r));
    }
    return out;
}

ExperimentResult pairing_single(const ExperimentConfig& cfg, double lambda) {
    ensemble::TorusSpec spec{cfg.dim, lambda, cfg.seed};
    auto basis = ensemble::Basis::make(spec);
    const auto form = make_form(cfg.dim, cfg.form);
    nodal::PairingConfig pcfg;
    pcfg.grid = cfg.grid;
    const int threads = resolve_threads(cfg.threads);
    // the even-dimension dichotomy compares runs at lambda and 2 lambda, so
    // the streams carry the cutoff to keep those runs independent
    std::ostringstream name;
    name << "pairing@" << lambda;
    const std::string stream_name = name.str();

    auto stats = parallel::run_trials(
        static_cast<size_t>(cfg.samples), threads, 1, [&](std::size_t trial) {
            parallel::TrialOutput t;
            for (int attempt = 0;; ++attempt) {
                if (attempt >= kMaxResampleAttempts)
                    throw std::runtime_error("pairing: too many degenerate resamples");
                rng::CounterRng gen(rng::stream_id(cfg.seed, stream_name, trial,
                                                   static_cast<std::uint64_t>(attempt)));
                auto f = ensemble::sample(basis, gen);
                auto outcome = nodal::conormal_pairing(f, form, pcfg);
                if (outcome.degenerate) {
                    ++t.discards;
                    continue;
                }
                t.values = {outcome.value};
                return t;
            }
        });

    ExperimentResult r;
    r.kind = "pairing";
    r.n = cfg.dim;
    r.lambda = lambda;
    r.samples = cfg.samples;
    r.mean = stats.mean[0];
    r.stderr_ = stats.stderr_[0];
    r.predicted = comb::predicted_pairing(cfg.dim, lambda, form_integral(cfg.dim, cfg.form));
    r.ratio = safe_ratio(r.mean, r.predicted);
    r.z = safe_z(r.mean, r.predicted, r.stderr_);
    r.discards = stats.discards;
    r.seed = cfg.seed;
    check_discard_rate(r);
    return r;
}

RunOutput run_pairing(const ExperimentConfig& cfg) {
    RunOutput out;
    if (cfg.dim % 2 == 1) {
        ExperimentResult r = pairing_single(cfg, cfg.lambda);
        r.pass = std::abs(r.ratio - 1.0) <= 0.05 && r.mean * r.predicted > 0.0;
        r.prediction_source =
            "conormal-cycle pairing, odd dimension: C_n (lambda/sqrt(n+2))^n * form integral "
            "with C_1 = -1/pi";
        out.pass = r.pass;
        out.results.push_back(std::move(r));
        return out;
    }
    // Even dimension: the leading constant vanishes; verify sub-lambda^n
    // scaling by comparing |mean|/lambda^n at lambda and 2 lambda.
    ExperimentResult a = pairing_single(cfg, cfg.lambda);
    ExperimentResult b = pairing_single(cfg, 2.0 * cfg.lambda);
    const double sa = std::abs(a.mean) / std::pow(cfg.lambda, cfg.dim);
    const double sb = std::abs(b.mean) / std::pow(2.0 * cfg.lambda, cfg.dim);
    const double se_a = a.stderr_ / std::pow(cfg.lambda, cfg.dim);
    const double se_b = b.stderr_ / std::pow(2.0 * cfg.lambda, cfg.dim);
    const double combined = std::sqrt(se_b * se_b + 0.49 * se_a * se_a);
    const bool pass = sb - 0.7 * sa <= 3.0 * combined;
    a.pass = b.pass = pass;
    a.prediction_source = b.prediction_source =
        "conormal-cycle pairing, even dimension: leading constant 0; |mean|/lambda^n at 2*lambda "
        "must fall to <= 0.7x its value at lambda (within combined stderr)";
    out.pass = pass;
    out.results.push_back(std::move(a));
    out.results.push_back(std::move(b));
    return out;
}

RunOutput run_euler_3d(const ExperimentConfig& cfg) {
    RunOutput out;
    ensemble::TorusSpec spec{3, cfg.lambda, cfg.seed};
    auto basis = ensemble::Basis::make(spec);
    const int grid = cfg.grid > 0 ? cfg.grid : nodal::auto_grid(cfg.lambda, 3);
    const int threads = resolve_threads(cfg.threads);

    auto stats = parallel::run_trials(
        static_cast<size_t>(cfg.samples), threads, 1, [&](std::size_t trial) {
            rng::CounterRng gen(rng::stream_id(cfg.seed, "euler-3d", trial));
            auto f = ensemble::sample(basis, gen);
            auto mesh = nodal::extract_isosurface(f, grid);
            parallel::TrialOutput t;
            t.values = {static_cast<double>(nodal::euler_characteristic(mesh))};
            return t;
        });

    ExperimentResult r;
    r.kind = cfg.kind;
    r.n = 3;
    r.lambda = cfg.lambda;
    r.samples = cfg.samples;
    r.mean = stats.mean[0];
    r.stderr_ = stats.stderr_[0];
    r.predicted = comb::predicted_euler(3, cfg.lambda, std::pow(kTwoPi, 3));
    r.ratio = safe_ratio(r.mean, r.predicted);
    r.z = safe_z(r.mean, r.predicted, r.stderr_);
    r.seed = cfg.seed;
    r.pass = std::abs(r.ratio - 1.0) <= 0.15;
    r.prediction_source =
        "mean Euler characteristic: 2(-1)^{(n-1)/2}/(pi Vol(S^{n-1})) (lambda/sqrt(n+2))^n Vol";
    out.pass = r.pass;
    out.results.push_back(std::move(r));
    return out;
}

}  // namespace

RunOutput run(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    apply_defaults(cfg);
    const double t0 = now_seconds();
    RunOutput out;
    if (cfg.kind == "constants-table")
        out = run_constants_table(cfg);
    else if (cfg.kind == "comb-verify")
        out = run_comb_verify(cfg);
    else if (cfg.kind == "berezin-verify")
        out = run_berezin_verify(cfg);
    else if (cfg.kind == "kernel-check")
        out = run_kernel_check(cfg);
    else if (cfg.kind == "jet-cov")
        out = run_jet_cov(cfg);
    else if (cfg.kind == "zero-count")
        out = run_zero_count(cfg);
    else if (cfg.kind == "nodal-length")
        out = run_nodal_length(cfg);
    else if (cfg.kind == "pairing")
        out = run_pairing(cfg);
    else if (cfg.kind == "euler-3d")
        out = run_euler_3d(cfg);
    else
        throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
    const double seconds = now_seconds() - t0;
    for (auto& r : out.results) r.seconds = seconds;
    return out;
}

namespace {

void append_double(std::ostringstream& os, double v) {
    if (std::isnan(v)) {
        os << "nan";
        return;
    }
    os << v;
}

}  // namespace

std::string results_csv(std::span<const ExperimentResult> results) {
    std::ostringstream os;
    os.precision(17);
    os << "kind,n,lambda,samples,mean,stderr,predicted,ratio,z,discards,seconds,seed\n";
    for (const auto& r : results) {
        os << r.kind << ',' << r.n << ',' << r.lambda << ',' << r.samples << ',';
        append_double(os, r.mean);
        os << ',';
        append_double(os, r.stderr_);
        os << ',';
        append_double(os, r.predicted);
        os << ',';
        append_double(os, r.ratio);
        os << ',';
        append_double(os, r.z);
        os << ',' << r.discards << ',' << r.seconds << ',' << r.seed << '\n';
    }
    return os.str();
}

std::string results_json(std::span<const ExperimentResult> results) {
    json rows = json::array();
    json sources = json::array();
    for (const auto& r : results) {
        json row;
        row["kind"] = r.kind;
        row["n"] = r.n;
        row["lambda"] = r.lambda;
        row["samples"] = r.samples;
        row["mean"] = r.mean;
        row["stderr"] = r.stderr_;
        row["predicted"] = r.predicted;
        row["ratio"] = std::isnan(r.ratio) ? json() : json(r.ratio);
        row["z"] = r.z;
        row["discards"] = r.discards;
        row["seconds"] = r.seconds;
        row["seed"] = r.seed;
        rows.push_back(std::move(row));
        json src;
        src["kind"] = r.kind;
        src["prediction"] = r.prediction_source;
        src["pass"] = r.pass;
        sources.push_back(std::move(src));
    }
    json top;
    top["results"] = std::move(rows);
    top["meta"]["predictions"] = std::move(sources);
    return top.dump(2) + "\n";
}

std::vector<ExperimentResult> results_from_json(const std::string& text) {
    const json top = json::parse(text);
    const json& rows = top.is_array() ? top : top.at("results");
    std::vector<ExperimentResult> out;
    for (const auto& row : rows) {
        ExperimentResult r;
        r.kind = row.at("kind").get<std::string>();
        r.n = row.at("n").get<int>();
        r.lambda = row.at("lambda").get<double>();
        r.samples = row.at("samples").get<long>();
        r.mean = row.at("mean").get<double>();
        r.stderr_ = row.at("stderr").get<double>();
        r.predicted = row.at("predicted").get<double>();
        r.ratio = row.at("ratio").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : row.at("ratio").get<double>();
        r.z = row.at("z").get<double>();
        r.discards = row.at("discards").get<long>();
        r.seconds = row.at("seconds").get<double>();
        r.seed = row.at("seed").get<std::uint64_t>();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace nlab::harness
