#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nlab/harness.hpp"
#include "nlab/nodal.hpp"
#include "nlab/quadrature.hpp"
#include "nlab/rng.hpp"

using namespace nlab;
using namespace nlab::nodal;
using nlab::ensemble::Basis;
using nlab::ensemble::Phase;
using nlab::ensemble::TorusSpec;
using nlab::ensemble::WaveSample;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

double circ_dist(double a, double b) {
    double d = std::abs(std::fmod(a - b, kTwoPi));
    return std::min(d, kTwoPi - d);
}

WaveSample pure_mode(const std::shared_ptr<const Basis>& basis, const std::vector<int>& k,
                     Phase phase, double amplitude) {
    WaveSample f;
    f.basis = basis;
    f.coefficients.assign(basis->size(), 0.0);
    for (size_t j = 0; j < basis->size(); ++j)
        if (basis->functions[j].k == k && basis->functions[j].phase == phase) {
            f.coefficients[j] = amplitude / basis->functions[j].normalization;
            return f;
        }
    throw std::runtime_error("mode not in basis");
}

WaveSample constant_sample(const std::shared_ptr<const Basis>& basis, double value) {
    WaveSample f;
    f.basis = basis;
    f.coefficients.assign(basis->size(), 0.0);
    f.coefficients[0] = value * std::sqrt(basis->spec.volume());
    return f;
}

WaveSample scaled(const WaveSample& f, double c) {
    WaveSample g = f;
    for (double& v : g.coefficients) v *= c;
    return g;
}

TestForm bump_eta_form_1d(double r0 = 0.5, double r1 = 2.0) {
    harness::FormSpec spec;
    spec.weight = "cos2";
    spec.r0 = r0;
    spec.r1 = r1;
    return harness::make_form(1, spec);
}

}  // namespace

TEST_CASE("zero finding on the circle") {
    const TorusSpec spec{1, 2.0, 0};
    auto basis = Basis::make(spec);
    auto f = pure_mode(basis, {1}, Phase::Sin, 1.0);  // sin(y)

    const auto zeros = find_zeros_circle(f, 64, 1e-12);
    REQUIRE(zeros.zeros.size() == 2);
    // zeros at 0 and pi with derivatives +1 and -1 (order on the circle)
    bool found0 = false, foundpi = false;
    for (const auto& z : zeros.zeros) {
        if (circ_dist(z.x, 0.0) < 1e-6) {
            found0 = true;
            CHECK(z.derivative == doctest::Approx(1.0));
        }
        if (circ_dist(z.x, kPi) < 1e-6) {
            foundpi = true;
            CHECK(z.derivative == doctest::Approx(-1.0));
        }
    }
    CHECK(found0);
    CHECK(foundpi);
    CHECK(euler_points(zeros) == 2);

    const auto none = find_zeros_circle(constant_sample(basis, 1.0), 64, 1e-12);
    CHECK(none.zeros.empty());
    CHECK(euler_points(none) == 0);
}

TEST_CASE("zero count is stable under grid refinement") {
    const TorusSpec spec{1, 10.0, 5};
    auto basis = Basis::make(spec);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        rng::CounterRng gen(rng::stream_id(5, "refine-1d", trial));
        auto f = ensemble::sample(basis, gen);
        const auto coarse = find_zeros_circle(f, 256, 1e-10);
        const auto fine = find_zeros_circle(f, 512, 1e-10);
        CHECK(coarse.zeros.size() == fine.zeros.size());
    }
}

TEST_CASE("marching squares recovers straight nodal lines") {
    const TorusSpec spec{2, 2.0, 0};
    auto basis = Basis::make(spec);
    auto f = pure_mode(basis, {1, 0}, Phase::Sin, 1.0);  // sin(y_1): lines y_1 = 0 and pi

    const auto mesh = marching_squares(f, 64);
    auto one = [](std::span<const double>) { return 1.0; };
    CHECK(nodal_volume(mesh, one) == doctest::Approx(2.0 * kTwoPi).epsilon(1e-9));
    auto two = [](std::span<const double>) { return 2.0; };
    CHECK(nodal_volume(mesh, two) == doctest::Approx(4.0 * kTwoPi).epsilon(1e-9));

    // every midpoint sits on one of the two lines
    for (const auto& s : mesh.segments) {
        const double d = std::min(circ_dist(s.midpoint[0], 0.0), circ_dist(s.midpoint[0], kPi));
        CHECK(d < 1e-6);
    }
}

TEST_CASE("marching squares length converges under refinement") {
    const TorusSpec spec{2, 5.0, 9};
    auto basis = Basis::make(spec);
    auto one = [](std::span<const double>) { return 1.0; };
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        rng::CounterRng gen(rng::stream_id(9, "refine-2d", trial));
        auto f = ensemble::sample(basis, gen);
        const double c = nodal_volume(marching_squares(f, 128), one);
        const double fine = nodal_volume(marching_squares(f, 256), one);
        CHECK(std::abs(c - fine) < 0.01 * fine);
    }
}

TEST_CASE("euler characteristic of a bare triangle") {
    TriMesh3D tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    CHECK(euler_characteristic(tri) == 1);
}

TEST_CASE("isosurface topology: sphere and tori") {
    const TorusSpec spec{3, 1.0, 0};
    auto basis = Basis::make(spec);

    // f = cos y1 + cos y2 + cos y3 - 2.5: a small sphere around the origin
    WaveSample f;
    f.basis = basis;
    f.coefficients.assign(basis->size(), 0.0);
    f.coefficients[0] = -2.5 * std::sqrt(spec.volume());
    const double amp = 1.0 / std::sqrt(2.0 / spec.volume());
    for (size_t j = 0; j < basis->size(); ++j)
        if (basis->functions[j].phase == Phase::Cos && basis->functions[j].k != std::vector<int>{0, 0, 0})
            f.coefficients[j] = amp;

    for (int grid : {32, 48}) {
        const auto mesh = extract_isosurface(f, grid);
        CHECK(euler_characteristic(mesh) == 2);
        CHECK(mesh.triangles.size() > 0);
    }

    // f = sin y1: two flat 2-tori, chi = 0, total area 2 (2pi)^2
    auto g = pure_mode(basis, {1, 0, 0}, Phase::Sin, 1.0);
    const auto mesh = extract_isosurface(g, 32);
    CHECK(euler_characteristic(mesh) == 0);
    CHECK(mesh.area == doctest::Approx(2.0 * kTwoPi * kTwoPi).epsilon(1e-6));
}

TEST_CASE("isosurface euler characteristic is resolution- and origin-stable") {
    // 48 grid points at lambda 2 is 16 per wavelength; small handles near
    // degenerate saddles need that much before the topology stops moving
    const TorusSpec spec{3, 2.0, 3};
    auto basis = Basis::make(spec);
    const double h = kTwoPi / 48.0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        rng::CounterRng gen(rng::stream_id(3, "refine-3d", trial));
        auto f = ensemble::sample(basis, gen);
        const long chi48 = euler_characteristic(extract_isosurface(f, 48));
        const long chi96 = euler_characteristic(extract_isosurface(f, 96));
        CHECK(chi48 == chi96);
        const std::vector<double> shifted = {0.5 * h, 0.5 * h, 0.5 * h};
        const long chi_shift = euler_characteristic(extract_isosurface(f, 48, shifted));
        CHECK(chi48 == chi_shift);
    }
}

TEST_CASE("conormal pairing: closed form on sin y") {
    const TorusSpec spec{1, 2.0, 0};
    auto basis = Basis::make(spec);
    auto f = pure_mode(basis, {1}, Phase::Sin, 1.0);
    const auto form = bump_eta_form_1d();
    PairingConfig cfg;

    // -(g(0) + g(pi)) * int h with g = cos^2 = 1 at both zeros
    auto bump = [&](double eta) {
        return harness::bump01((std::abs(eta) - form.r0) / (form.r1 - form.r0));
    };
    const double int_h = quadrature::integrate(bump, form.r0, form.r1, 128) +
                         quadrature::integrate(bump, -form.r1, -form.r0, 128);
    const double expected = -2.0 * int_h;

    const auto direct = conormal_pairing(f, form, cfg);
    CHECK_FALSE(direct.degenerate);
    CHECK(direct.value == doctest::Approx(expected).epsilon(1e-8));
    CHECK(pairing_closed_form_1d(f, form, cfg) == doctest::Approx(expected).epsilon(1e-8));

    // empty nodal set
    const auto empty = conormal_pairing(constant_sample(basis, 0.8), form, cfg);
    CHECK(empty.value == 0.0);
    CHECK(empty.mesh_elements == 0);
}

TEST_CASE("wedge estimator matches the 1-D closed form on random samples") {
    const TorusSpec spec{1, 10.0, 42};
    auto basis = Basis::make(spec);
    const auto form = bump_eta_form_1d();
    PairingConfig cfg;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        rng::CounterRng gen(rng::stream_id(42, "wedge-vs-closed", trial));
        auto f = ensemble::sample(basis, gen);
        const auto wedge = conormal_pairing(f, form, cfg);
        if (wedge.degenerate) continue;
        const double closed = pairing_closed_form_1d(f, form, cfg);
        CHECK(std::abs(wedge.value - closed) <= 1e-6 * std::max(1e-6, std::abs(closed)));
    }
}

TEST_CASE("pairing is invariant under nonzero rescaling of f") {
    PairingConfig cfg;
    {
        const TorusSpec spec{1, 10.0, 17};
        auto basis = Basis::make(spec);
        const auto form = bump_eta_form_1d();
        for (std::uint64_t trial = 0; trial < 10; ++trial) {
            rng::CounterRng gen(rng::stream_id(17, "invariance-1d", trial));
            auto f = ensemble::sample(basis, gen);
            const auto base = conormal_pairing(f, form, cfg);
            if (base.degenerate) continue;
            for (double c : {-1.0, 2.0, 10.0}) {
                const auto other = conormal_pairing(scaled(f, c), form, cfg);
                CHECK(std::abs(other.value - base.value) <= 1e-3 * std::abs(base.value));
            }
        }
    }
    {
        const TorusSpec spec{2, 5.0, 19};
        auto basis = Basis::make(spec);
        harness::FormSpec fs;
        fs.weight = "one";
        const auto form = harness::make_form(2, fs);
        for (std::uint64_t trial = 0; trial < 5; ++trial) {
            rng::CounterRng gen(rng::stream_id(19, "invariance-2d", trial));
            auto f = ensemble::sample(basis, gen);
            const auto base = conormal_pairing(f, form, cfg);
            if (base.degenerate) continue;
            for (double c : {-1.0, 2.0}) {
                const auto other = conormal_pairing(scaled(f, c), form, cfg);
                CHECK(std::abs(other.value - base.value) <=
                      1e-3 * std::max(std::abs(base.value), 1e-9));
            }
        }
    }
}

TEST_CASE("pairing converges under mesh refinement") {
    const TorusSpec spec{2, 5.0, 23};
    auto basis = Basis::make(spec);
    harness::FormSpec fs;
    fs.weight = "one";
    const auto form = harness::make_form(2, fs);
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        rng::CounterRng gen(rng::stream_id(23, "pairing-refine", trial));
        auto f = ensemble::sample(basis, gen);
        PairingConfig coarse, fine;
        coarse.grid = 128;
        fine.grid = 256;
        const auto a = conormal_pairing(f, form, coarse);
        const auto b = conormal_pairing(f, form, fine);
        if (a.degenerate || b.degenerate) continue;
        CHECK(std::abs(a.value - b.value) <= 0.01 * std::max(std::abs(b.value), 1e-6));
    }
}

TEST_CASE("mesh points sit on the nodal set up to interpolation error") {
    const TorusSpec spec{2, 5.0, 77};
    auto basis = Basis::make(spec);
    rng::CounterRng gen(rng::stream_id(77, "onmesh", 0));
    auto f = ensemble::sample(basis, gen);
    auto max_residual = [&](int grid) {
        double worst = 0.0;
        for (const auto& s : marching_squares(f, grid).segments) {
            worst = std::max(worst, std::abs(ensemble::evaluate(f, s.a)));
            worst = std::max(worst, std::abs(ensemble::evaluate(f, s.b)));
        }
        return worst;
    };
    const double r256 = max_residual(256);
    const double r512 = max_residual(512);
    CHECK(r256 < 2e-3 * f.rms() * spec.lambda);
    CHECK(r512 < 0.3 * r256);  // linear interpolation residual shrinks like h^2
}

TEST_CASE("pairing is translation-equivariant sample by sample") {
    const TorusSpec spec{1, 8.0, 55};
    auto basis = Basis::make(spec);
    const double tau = 1.37;
    harness::FormSpec base_spec, shifted_spec;
    shifted_spec.shift = tau;
    const auto form = harness::make_form(1, base_spec);
    const auto form_tau = harness::make_form(1, shifted_spec);
    PairingConfig cfg;
    const std::vector<double> tau_vec = {tau};
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        rng::CounterRng gen(rng::stream_id(55, "translate-pairing", trial));
        auto f = ensemble::sample(basis, gen);
        const auto base = conormal_pairing(f, form, cfg);
        if (base.degenerate) continue;
        const auto moved = conormal_pairing(ensemble::translate(f, tau_vec), form_tau, cfg);
        CHECK(moved.value == doctest::Approx(base.value).epsilon(1e-7));
    }
}

TEST_CASE("degenerate gradients are flagged") {
    const TorusSpec spec{1, 2.0, 0};
    auto basis = Basis::make(spec);
    auto f = pure_mode(basis, {1}, Phase::Sin, 1.0);
    // with the floor above |f'| = 1 every zero is flagged
    CHECK(find_zeros_circle(f, 64, 1e-12, 10.0).degenerate);
    CHECK_FALSE(find_zeros_circle(f, 64, 1e-12, 1e-6).degenerate);
}

TEST_CASE("form validation") {
    TestForm form;
    form.n = 1;
    form.r0 = 0.0;
    CHECK_THROWS_AS(form.validate(), std::invalid_argument);
    form.r0 = 0.5;
    form.r1 = 2.0;
    TestForm::Component comp;
    comp.y_mask = 0b11;  // degree 2 in a 1-form
    comp.eta_mask = 0;
    comp.value = [](std::span<const double>, std::span<const double>) { return 0.0; };
    form.components.push_back(comp);
    CHECK_THROWS_AS(form.validate(), std::invalid_argument);
}

TEST_CASE("mesh dumps") {
    const TorusSpec spec{3, 1.0, 0};
    auto basis = Basis::make(spec);
    auto f = pure_mode(basis, {1, 0, 0}, Phase::Sin, 1.0);
    const auto obj = mesh_obj(extract_isosurface(f, 16));
    CHECK(obj.find("v ") == 0);
    CHECK(obj.find("\nf ") != std::string::npos);

    const TorusSpec spec2{2, 2.0, 0};
    auto basis2 = Basis::make(spec2);
    const auto csv = polylines_csv(marching_squares(pure_mode(basis2, {1, 0}, Phase::Sin, 1.0), 32));
    CHECK(csv.rfind("ax,ay,bx,by,midx,midy,length,tx,ty\n", 0) == 0);
}
