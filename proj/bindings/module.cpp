#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nlab/combinatorics.hpp"
#include "nlab/ensemble.hpp"
#include "nlab/grassmann.hpp"
#include "nlab/harness.hpp"
#include "nlab/nodal.hpp"
#include "nlab/rng.hpp"

namespace py = pybind11;
using namespace nlab;

namespace {

py::dict exact_to_dict(const ExactScalar& s) {
    py::dict d;
    std::ostringstream num, den;
    num << boost::multiprecision::numerator(s.value());
    den << boost::multiprecision::denominator(s.value());
    d["numerator"] = num.str();
    d["denominator"] = den.str();
    d["monomial_exponent"] = s.monomial_exponent();
    return d;
}

py::dict result_to_dict(const harness::ExperimentResult& r) {
    py::dict d;
    d["kind"] = r.kind;
    d["n"] = r.n;
    d["lambda"] = r.lambda;
    d["samples"] = r.samples;
    d["mean"] = r.mean;
    d["stderr"] = r.stderr_;
    d["predicted"] = r.predicted;
    d["ratio"] = r.ratio;
    d["z"] = r.z;
    d["discards"] = r.discards;
    d["seconds"] = r.seconds;
    d["seed"] = r.seed;
    d["pass"] = r.pass;
    d["prediction"] = r.prediction_source;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Random-wave nodal set laboratory: exact constants and flat-torus experiments";

    // ---- combinatorics
    m.def("double_factorial",
          [](long v) { return double_factorial(v).convert_to<long long>(); });
    m.def("spectral_constant",
          [](int n, const std::vector<int>& a, const std::vector<int>& b) {
              return exact_to_dict(comb::spectral_constant(n, a, b));
          },
          py::arg("n"), py::arg("alpha"), py::arg("beta"),
          "Limit of the scaled diagonal spectral-projector derivative, as a multiple of 1/Vol");
    m.def("jet_covariance", [](int n) {
        const auto cov = comb::jet_covariance(n);
        std::vector<std::vector<double>> out(cov.dim(), std::vector<double>(cov.dim()));
        for (int a = 0; a < cov.dim(); ++a)
            for (int b = 0; b < cov.dim(); ++b) out[a][b] = cov.matrix[a][b].convert_to<double>();
        return out;
    });
    m.def("wick_moment", &comb::wick_moment);
    m.def("signed_permutation_sum", [](int n, bool full_group) {
        return exact_to_dict(comb::signed_permutation_sum(
            n, full_group ? comb::SumMode::FullSymmetricGroup : comb::SumMode::Involutions));
    }, py::arg("n"), py::arg("full_group") = false);
    m.def("equidistribution_constant", &comb::equidistribution_constant);
    m.def("b_constant", &comb::b_constant);
    m.def("l_eta", &comb::l_eta);
    m.def("weyl_leading", &comb::weyl_leading);
    m.def("predicted_volume", &comb::predicted_volume);
    m.def("predicted_euler", &comb::predicted_euler);
    m.def("predicted_pairing", &comb::predicted_pairing);
    m.def("constants_table_csv", &comb::constants_table_csv);

    // ---- grassmann
    m.def("leading_constant",
          [](int n, double c) { return grassmann::leading_constant(n, c); });
    m.def("quadratic_vanishing_check", &grassmann::quadratic_vanishing_check);
    m.def("gaussian_fourier_check", &grassmann::gaussian_fourier_check);

    // ---- ensemble
    py::class_<ensemble::TorusSpec>(m, "TorusSpec")
        .def(py::init([](int n, double lambda, std::uint64_t seed) {
                 return ensemble::TorusSpec{n, lambda, seed};
             }),
             py::arg("n"), py::arg("lambda"), py::arg("seed") = 0)
        .def_readonly("n", &ensemble::TorusSpec::n)
        .def_readonly("lambda_", &ensemble::TorusSpec::lambda)
        .def_readonly("seed", &ensemble::TorusSpec::seed)
        .def("volume", &ensemble::TorusSpec::volume);

    py::class_<ensemble::WaveSample>(m, "WaveSample")
        .def_property_readonly("coefficients",
                               [](const ensemble::WaveSample& f) { return f.coefficients; })
        .def("dim", &ensemble::WaveSample::dim)
        .def("l2_norm_sq", &ensemble::WaveSample::l2_norm_sq)
        .def("evaluate",
             [](const ensemble::WaveSample& f, const std::vector<double>& x) {
                 return ensemble::evaluate(f, x);
             })
        .def("gradient",
             [](const ensemble::WaveSample& f, const std::vector<double>& x) {
                 return ensemble::gradient(f, x);
             })
        .def("jet", [](const ensemble::WaveSample& f, const std::vector<double>& x) {
            return ensemble::jet(f, x);
        });

    m.def("basis_size", [](const ensemble::TorusSpec& spec) {
        return ensemble::enumerate_basis(spec).size();
    });
    m.def("basis_csv", &ensemble::basis_csv);
    m.def("sample",
          [](const ensemble::TorusSpec& spec, std::uint64_t trial) {
              auto basis = ensemble::Basis::make(spec);
              rng::CounterRng gen(rng::stream_id(spec.seed, "python", trial));
              return ensemble::sample(basis, gen);
          },
          py::arg("spec"), py::arg("trial") = 0);
    m.def("kernel_derivative", &ensemble::kernel_derivative);

    // ---- nodal
    m.def("count_zeros", [](const ensemble::WaveSample& f, int grid) {
        return nodal::find_zeros_circle(f, grid, 1e-10).zeros.size();
    });
    m.def("nodal_length", [](const ensemble::WaveSample& f, int grid) {
        auto one = [](std::span<const double>) { return 1.0; };
        return nodal::nodal_volume(nodal::marching_squares(f, grid), one);
    });
    m.def("euler_characteristic_3d", [](const ensemble::WaveSample& f, int grid) {
        return nodal::euler_characteristic(nodal::extract_isosurface(f, grid));
    });
    m.def("conormal_pairing",
          [](const ensemble::WaveSample& f, const std::string& weight, double r0, double r1) {
              harness::FormSpec fs;
              fs.weight = weight;
              fs.r0 = r0;
              fs.r1 = r1;
              const auto form = harness::make_form(f.dim(), fs);
              nodal::PairingConfig cfg;
              const auto out = nodal::conormal_pairing(f, form, cfg);
              py::dict d;
              d["value"] = out.value;
              d["degenerate"] = out.degenerate;
              d["mesh_elements"] = out.mesh_elements;
              return d;
          },
          py::arg("f"), py::arg("weight") = "cos2", py::arg("r0") = 0.5, py::arg("r1") = 2.0);

    // ---- harness
    m.def("run_experiment", [](const std::string& config_json) {
        auto cfg = harness::config_from_json_text(config_json);
        const auto out = harness::run(cfg);
        py::dict d;
        py::list rows;
        for (const auto& r : out.results) rows.append(result_to_dict(r));
        d["results"] = rows;
        d["table"] = out.table;
        d["pass"] = out.pass;
        return d;
    });
    m.def("form_integral", [](int n, const std::string& weight, double r0, double r1) {
        harness::FormSpec fs;
        fs.weight = weight;
        fs.r0 = r0;
        fs.r1 = r1;
        return harness::form_integral(n, fs);
    });
}
