#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "nlab/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nodal-lab: random-wave nodal set experiments on flat tori"};

    std::string config_path, experiment, out_path, format;
    int dim = 0, grid = 0, threads = 0;
    double lambda = 0.0;
    long samples = 0;
    std::uint64_t seed = 0;
    bool have_seed = false;

    app.add_option("--config", config_path, "JSON config file; flags override its values");
    app.add_option("--experiment", experiment,
                   "one of: constants-table comb-verify berezin-verify kernel-check jet-cov "
                   "zero-count nodal-length pairing euler-3d");
    app.add_option("--dim", dim, "dimension n");
    app.add_option("--lambda", lambda, "frequency cutoff");
    app.add_option("--samples", samples, "Monte Carlo sample count");
    app.add_option("--grid", grid, "mesh resolution per axis");
    app.add_option("--seed", seed, "base RNG seed")->each([&](const std::string&) { have_seed = true; });
    app.add_option("--threads", threads, "worker threads (NODAL_LAB_THREADS as fallback)");
    app.add_option("--out", out_path, "output file path");
    app.add_option("--format", format, "csv or json");

    CLI11_PARSE(app, argc, argv);

    try {
        nlab::harness::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = nlab::harness::config_from_json_text(read_file(config_path));
        if (!experiment.empty()) cfg.kind = experiment;
        if (dim != 0) cfg.dim = dim;
        if (lambda != 0.0) cfg.lambda = lambda;
        if (samples != 0) cfg.samples = samples;
        if (grid != 0) cfg.grid = grid;
        if (have_seed) cfg.seed = seed;
        if (threads != 0) cfg.threads = threads;
        if (!out_path.empty()) cfg.out = out_path;
        if (!format.empty()) cfg.format = format;
        if (cfg.kind.empty()) {
            std::cerr << "error: no experiment selected (use --experiment or --config)\n";
            return 2;
        }

        nlab::harness::apply_defaults(cfg);
        const auto output = nlab::harness::run(cfg);

        for (const auto& r : output.results) {
            std::cout << r.kind << ": n=" << r.n << " lambda=" << r.lambda
                      << " samples=" << r.samples << " mean=" << r.mean << " stderr=" << r.stderr_
                      << " predicted=" << r.predicted << " ratio=" << r.ratio << " z=" << r.z
                      << " discards=" << r.discards << " [" << (r.pass ? "pass" : "FAIL") << "]\n"
                      << "  prediction: " << r.prediction_source << "\n";
        }

        if (!cfg.out.empty()) {
            // table-producing kinds write their audit table; the rest write
            // the results in the requested format
            if (!output.table.empty()) {
                write_file(cfg.out, output.table);
            } else if (cfg.format == "json") {
                write_file(cfg.out, nlab::harness::results_json(output.results));
            } else {
                write_file(cfg.out, nlab::harness::results_csv(output.results));
            }
            std::cout << "wrote " << cfg.out << "\n";
        } else {
            std::cout << (cfg.format == "json" ? nlab::harness::results_json(output.results)
                                               : nlab::harness::results_csv(output.results));
        }
        return output.pass ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
