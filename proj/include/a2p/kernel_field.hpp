#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "a2p/geometry.hpp"

namespace a2p {

/// Stationary covariance kernel of the external field: a smooth family
/// evaluated on Euclidean distance plus an optional independent per-cell
/// variance (nugget).  scale is the variance s^2 of the smooth part.
struct CovarianceKernel {
    enum class Family { Exponential, SquaredExponential };
    Family family = Family::Exponential;
    double scale = 1.0;
    double corr_length = 1.0;
    double nugget = 0.0;

    /// Smooth part at Euclidean distance r.
    double smooth(double r) const;
};

/// Midpoint discretization of a cellular set: cells of side `spacing` tiling
/// each cube, deduplicated where cubes overlap.  Overlapping cubes must have
/// lattice-aligned corners; disjoint or touching cubes need no alignment.
struct GridSpec {
    CellularSet domain;
    double spacing = 0.0;
    double cell_measure = 0.0;  // spacing^d
    std::vector<Point> centers;
    std::vector<int> cube_intervals;           // cells per axis, per cube
    std::vector<std::vector<int>> cube_cells;  // per cube: local lattice -> cell id

    int dim() const { return domain.dim(); }
    int size() const { return static_cast<int>(centers.size()); }

    /// Cell containing x (piecewise-constant convention: half-open to the
    /// left, clamped at the far face); -1 when x is outside the domain.
    int locate(const Point& x) const;

    /// Cells whose centers lie in the given set.
    std::vector<int> cells_in(const CellularSet& s) const;
};

using GridPtr = std::shared_ptr<const GridSpec>;

GridPtr build_grid(const CellularSet& domain, double spacing);

/// A kernel inner-product space over a grid: the cell-level covariance K,
/// its Cholesky factor for sampling, the normalized indicator of a lead
/// subset, the regression profile of the lead coefficient, and an
/// orthonormal basis led by the normalized indicator.  The Gram form of the
/// inner product <f,g> = integral integral C(x,y) f(x) g(y) is
/// spacing^{2d} * K at the cell level, so coefficient covariances reproduce
/// the inner product exactly.
struct KernelSpace {
    GridPtr grid;
    CovarianceKernel kernel;
    CellularSet lead_set;
    std::vector<int> lead_cells;
    Eigen::MatrixXd cell_cov;
    Eigen::MatrixXd sample_factor;
    Eigen::MatrixXd basis;
    Eigen::VectorXd normalized_indicator;
    Eigen::VectorXd regression_profile;
    double norm_z = 0.0;
    double gram_min_eig = 0.0;
    double gram_max_eig = 0.0;

    /// Kernel inner product of two grid functions.
    double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
};

/// Assemble the space.  lead defaults to the whole domain; max_basis < 0
/// keeps min(size, 64) basis functions.  Throws when the Gram form is
/// numerically singular (smallest eigenvalue <= 1e-12 * largest): smooth
/// kernels need a nugget.
KernelSpace gram_assemble(const CovarianceKernel& kernel, GridPtr grid,
                          const CellularSet* lead = nullptr, int max_basis = -1);

/// One realization of the Gaussian field, piecewise constant on grid cells.
struct FieldSample {
    GridPtr grid;
    Eigen::VectorXd values;
    std::string seed_path;

    /// Field value at a point (cell lookup); throws outside the domain.
    double at(const Point& x) const;
};

/// Draw the field for stream (master, index): values = L z with z iid
/// standard normal from the derived stream, L the Cholesky factor of K.
FieldSample sample_field(const KernelSpace& space, std::uint64_t master,
                         std::uint64_t index);

/// The sample with t added to every cell value.
FieldSample shifted(const FieldSample& f, double t);

/// Sup of |values| over cells whose centers lie in the set.
double sup_field(const FieldSample& f, const CellularSet& s);

/// Plain-integral coefficient of a grid function against the sample:
/// spacing^d * sum zeta(x) v(x).
double coefficient(const KernelSpace& space, const Eigen::VectorXd& zeta,
                   const FieldSample& f);

/// Ground-level / fluctuation split of a sample: v = lead_coefficient *
/// regression_profile + fluctuation, with the lead coefficient standard
/// normal and independent of the fluctuation for Gaussian fields.
struct Decomposition {
    double lead_coefficient = 0.0;
    Eigen::VectorXd regression_profile;
    Eigen::VectorXd fluctuation;
};

Decomposition decompose(const KernelSpace& space, const FieldSample& f);

/// Rebuild a sample from a (possibly resampled) lead coefficient and a
/// fixed fluctuation.
FieldSample recombine(const KernelSpace& space, double lead_coefficient,
                      const Decomposition& d);

/// Largest probability a standard normal assigns to any window of the given
/// width: Phi(width/2) - Phi(-width/2).  This is the exact conditional
/// concentration modulus of the lead coefficient for Gaussian fields, and
/// is bounded by width / sqrt(2 pi).
double gaussian_window_mass(double width);

struct ModulusEstimate {
    double value = 0.0;      // max over conditioning draws (lower estimate of the sup)
    double outer_mean = 0.0;
    double outer_rel_std = 0.0;  // std of per-draw maxima relative to their mean
    int n_outer = 0;
    int n_inner = 0;
};

/// Empirical conditional concentration modulus of the lead coefficient of
/// `lead`, conditioned on the field over `other` (may be empty): for each of
/// n_outer conditioning draws, resample the lead coefficient n_inner times
/// with the fluctuation fixed, rebuild the field, recompute the coefficient,
/// and scan for the most-charged window of the given width.  Requires
/// disjoint sets and n_inner >= 100.
ModulusEstimate modulus_empirical(const CovarianceKernel& kernel,
                                  const CellularSet& lead, const CellularSet& other,
                                  double spacing, double width, int n_outer,
                                  int n_inner, std::uint64_t seed);

enum class ModulusMode { GaussianClosedForm, Empirical };

/// Worst-case modulus over the admissible conditioning geometries of a box:
/// the max over probe boxes of the complete-separation modulus and the two
/// one-projection moduli, whichever apply.  Closed-form mode returns the
/// Gaussian window mass (the exact value for Gaussian fields, independent of
/// the geometry).  Empirical mode requires a nonempty probe set satisfying
/// the distance rule.
ModulusEstimate modulus_bar(const CovarianceKernel& kernel, const Box& box,
                            double spacing, double width, ModulusMode mode,
                            const std::vector<Box>& probes = {}, int n_outer = 8,
                            int n_inner = 10000, std::uint64_t seed = 1);

}  // namespace a2p
