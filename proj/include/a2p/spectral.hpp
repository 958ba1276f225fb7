#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "a2p/hamiltonian.hpp"

namespace a2p {

struct SolverOptions {
    enum class Method { Auto, Dense, Lanczos };
    Method method = Method::Auto;
    int dense_limit = 4096;       // largest dimension solved densely
    int max_iterations = 4000;    // Lanczos basis size cap
    double residual_tol = 1e-8;   // residual bound relative to the operator inf-norm
    std::uint64_t start_seed = 0x243F6A8885A308D3ULL;
};

struct Spectrum {
    std::vector<double> eigenvalues;  // ascending
    bool complete = false;            // the whole spectrum was computed
    // counting windows must stay at or below this value unless complete
    double coverage_upper = std::numeric_limits<double>::infinity();
    std::string method = "dense";
};

/// Lowest `count` eigenvalues of the operator (the whole spectrum when
/// count < 0).  Dimensions within dense_limit are solved densely; larger
/// ones run Lanczos with full reorthogonalization, which requires a finite
/// count and certifies coverage only up to the largest converged eigenvalue.
/// Non-convergence is an error reporting the worst residual.
Spectrum eigensolve(const DiscreteHamiltonian& h, int count = -1,
                    const SolverOptions& opt = {});

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Number of eigenvalues in the closed window.  Throws when an incomplete
/// spectrum does not certify coverage of the window.
long count_in_window(const Spectrum& s, Interval j);

/// min |e - e'| over the two spectra restricted to the window; +infinity
/// when either restriction is empty.  Coverage rules as in count_in_window.
double spectral_distance(const Spectrum& a, const Spectrum& b, Interval j);

/// Deviation from the eigenvalue shift identity: reassembles the operator
/// with every field value shifted by t and returns
/// max_j |E_j(v + t) - E_j(v) - 2 * coupling * t|.
double shift_check(const DiscreteHamiltonian& h, double t,
                   const SolverOptions& opt = {});

}  // namespace a2p
