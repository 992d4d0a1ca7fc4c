#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlab/nodal.hpp"

namespace nlab::harness {

/// Named test-form family: omega = weight(y_1 - shift) * bump(|eta|) deta_1..deta_n
/// with the bump supported on r0 <= |eta| <= r1.
struct FormSpec {
    std::string weight = "cos2";  // "cos2" or "one"
    double r0 = 0.5;
    double r1 = 2.0;
    double shift = 0.0;
};

struct ExperimentConfig {
    std::string kind;
    int dim = 0;        // 0: kind default
    double lambda = 0;  // 0: kind default
    long samples = 0;   // 0: kind default
    int grid = 0;       // 0: kind default / auto
    std::uint64_t seed = 1;
    int threads = 0;  // 0: NODAL_LAB_THREADS env var, then hardware
    FormSpec form;
    std::string out;
    std::string format = "csv";
};

struct ExperimentResult {
    std::string kind;
    int n = 0;
    double lambda = 0.0;
    long samples = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    double predicted = 0.0;
    double ratio = 0.0;  // mean/predicted, NaN when predicted == 0
    double z = 0.0;      // (mean - predicted)/stderr
    long discards = 0;
    double seconds = 0.0;
    std::uint64_t seed = 0;
    bool pass = false;                  // not part of the CSV schema
    std::string prediction_source;      // reported in JSON metadata
};

struct RunOutput {
    std::vector<ExperimentResult> results;
    std::string table;  // audit table for table-producing kinds, else empty
    bool pass = true;
};

extern const std::vector<std::string> kKnownKinds;

/// Parses a JSON config object; unknown keys are rejected.
ExperimentConfig config_from_json_text(const std::string& text);

/// Fills kind-specific defaults and checks parameter completeness.
void apply_defaults(ExperimentConfig& cfg);

int resolve_threads(int requested);

RunOutput run(const ExperimentConfig& cfg);

/// Fixed schema: kind,n,lambda,samples,mean,stderr,predicted,ratio,z,discards,seconds,seed.
std::string results_csv(std::span<const ExperimentResult> results);
std::string results_json(std::span<const ExperimentResult> results);
std::vector<ExperimentResult> results_from_json(const std::string& text);

double bump01(double u);
nodal::TestForm make_form(int n, const FormSpec& spec);
/// Integral of the pure-deta component over the chart:
/// int weight d^n y * int bump(|eta|) d^n eta.
double form_integral(int n, const FormSpec& spec);

}  // namespace nlab::harness
