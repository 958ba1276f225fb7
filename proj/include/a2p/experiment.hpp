#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "a2p/config.hpp"
#include "a2p/wegner.hpp"

namespace a2p {

extern const char* kCodeVersion;

/// Field sampling diagnostics: records the leading kernel-orthonormal
/// coefficients of each draw so their joint law can be checked offline.
struct DiagnosticsConfig {
    Box box;  // domain is the box shadow
    double spacing = 0.25;
    CovarianceKernel kernel;
    int basis = 5;
    long samples = 200;
    std::uint64_t seed = 1;
    int workers = 1;
};

/// Randomized audit of the separation classifier: generated box pairs that
/// satisfy the distance rule must all land in some separation case, and
/// every claimed case is re-verified from raw set distances.
struct GeometryCheckConfig {
    long pairs = 10000;
    std::vector<int> dims = {1, 2};
    std::uint64_t seed = 1;
};

/// Standalone modulus table: estimates at the requested window widths next
/// to the Gaussian closed form and the linear bound.
struct ModulusRunConfig {
    Box box;
    double spacing = 0.25;
    CovarianceKernel kernel;
    std::vector<double> widths;
    ModulusMode mode = ModulusMode::Empirical;
    int outer = 8;
    int inner = 10000;
    std::vector<Box> probes;
    std::uint64_t seed = 1;
};

/// A fully validated experiment: one of the five kinds with its typed
/// parameters, the output directory, and the canonical config text it was
/// built from (hashed into the manifest).
struct ExperimentConfig {
    std::string kind;  // one-volume | two-volume | field-diagnostics |
                       // geometry-check | modulus
    std::string out_dir;
    std::string config_hash;
    std::string canonical;

    WegnerOneConfig one;
    WegnerTwoConfig two;
    DiagnosticsConfig diagnostics;
    GeometryCheckConfig geometry;
    ModulusRunConfig modulus;
};

/// Typed view of a parsed config.  Validates everything it can without
/// sampling: key syntax, ranges, box geometry, grid alignment, Gram
/// positivity, the separation rule.  Rejects unrecognized keys.
ExperimentConfig experiment_from(const Config& c);

ExperimentConfig load_experiment(const std::string& path);

/// Execute the experiment and write the run directory: manifest.json,
/// config.ini, records.jsonl, summary.json, report.txt, and for the
/// concentration kinds phat.dat and rhs.dat.  Timing lives only in the
/// manifest; every other output is a deterministic function of the config.
void run_experiment(const ExperimentConfig& cfg);

/// Render the human-readable report from a written run directory,
/// recomputing the headline numbers from records.jsonl as a cross-check.
std::string render_report(const std::string& run_dir);

}  // namespace a2p
