#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "a2p/geometry.hpp"
#include "a2p/hamiltonian.hpp"
#include "a2p/kernel_field.hpp"
#include "a2p/spectral.hpp"

namespace a2p {

/// 95% Wilson score interval for a binomial proportion.
struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

WilsonInterval wilson95(long hits, long n);

/// The epsilon grid sorted ascending, after checking each value lies in
/// (0,1).  Shared by the estimators and config validation.
std::vector<double> validate_epsilons(const std::vector<double>& eps);

/// Right-hand side of the one-volume concentration bound at constant c:
/// c * volume * moment * mu.
double rhs_bound_one(double c, double volume, double moment, double mu);

/// Right-hand side of the two-volume bound at constant c:
/// c * volume1 * volume2 * moment * mu_bar.
double rhs_bound_two(double c, double volume1, double volume2, double moment,
                     double mu_bar);

/// Per-epsilon row of an estimated concentration curve.
struct EpsilonStat {
    double epsilon = 0.0;
    long hits = 0;
    long samples = 0;
    double p_hat = 0.0;
    WilsonInterval wilson;
    double mu = 0.0;   // modulus factor at window width 4 * Z * epsilon
    double rhs = 0.0;  // bound with the calibrated constant
};

/// One-volume experiment: probability that the spectrum meets the window
/// [E - eps, E + eps], against volume * E[(E + 2 + Wbar)^d] * mu(4 Z eps).
struct WegnerOneConfig {
    Box box;
    double spacing = 0.25;
    CovarianceKernel kernel;
    InteractionPotential interaction;
    double coupling = 1.0;
    double energy = 0.0;
    std::vector<double> epsilons;
    long samples = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    ModulusMode modulus = ModulusMode::GaussianClosedForm;
    int modulus_outer = 8;
    int modulus_inner = 10000;
    SolverOptions solver;
    int eigen_count = -1;  // eigenvalues per sample; < 0 means all
};

struct WegnerOneReport {
    std::vector<EpsilonStat> stats;  // ascending in epsilon
    double volume = 0.0;             // product of the two cube volumes
    double norm_z = 0.0;             // kernel norm of the shadow indicator
    double moment = 0.0;             // mean (energy + 2 + Wbar)^d
    double c_hat = 0.0;              // max over eps of p_hat / (volume * moment * mu)
    double slope = 0.0;              // least-squares slope of p_hat against mu
    double w_sup_mean = 0.0;
    double w_sup_max = 0.0;
    long failures = 0;
    long samples = 0;  // successful samples
    std::string first_error;

    // Per-sample records in draw order (failed entries hold the error text).
    std::vector<double> sample_dmin;
    std::vector<double> sample_wsup;
    std::vector<unsigned char> sample_failed;
    std::vector<std::string> sample_errors;
};

WegnerOneReport wegner_one(const WegnerOneConfig& cfg);

/// Two-volume experiment on a separated pair of boxes: probability that the
/// spectra restricted to the window J = [center - half_width, center +
/// half_width] come within eps of each other, against volume1 * volume2 *
/// E[((b + delta + 1 + Wbar)(b + delta + 1 + Wbar'))^d] * max modulus.
/// Both operators see one shared field drawn on the union of the shadows.
struct WegnerTwoConfig {
    Box box1;
    Box box2;
    double spacing = 0.25;
    CovarianceKernel kernel;
    InteractionPotential interaction;
    double coupling = 1.0;
    double window_center = 0.0;
    double window_half_width = 1.0;
    std::vector<double> epsilons;
    long samples = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    ModulusMode modulus = ModulusMode::GaussianClosedForm;
    int modulus_outer = 8;
    int modulus_inner = 10000;
    SolverOptions solver;
    int eigen_count = -1;
};

struct WegnerTwoReport {
    std::vector<EpsilonStat> stats;
    SeparationVerdict separation;
    double volume1 = 0.0;
    double volume2 = 0.0;
    double z1 = 0.0;  // shadow indicator norms on the union grid
    double z2 = 0.0;
    double moment = 0.0;
    double c_hat = 0.0;
    double slope = 0.0;
    double count_correlation = 0.0;  // Pearson correlation of window counts
    double mean_count1 = 0.0;
    double mean_count2 = 0.0;
    long failures = 0;
    long samples = 0;
    std::string first_error;

    // Per-sample records in draw order (failed entries hold the error text).
    std::vector<double> sample_dist;
    std::vector<long> sample_count1;
    std::vector<long> sample_count2;
    std::vector<double> sample_wsup1;
    std::vector<double> sample_wsup2;
    std::vector<unsigned char> sample_failed;
    std::vector<std::string> sample_errors;
};

WegnerTwoReport wegner_two(const WegnerTwoConfig& cfg);

}  // namespace a2p
