#pragma once

#include <Eigen/SparseCore>
#include <optional>
#include <utility>
#include <vector>

#include "a2p/geometry.hpp"
#include "a2p/kernel_field.hpp"

namespace a2p {

/// Symmetric pair interaction, a function of the sup-norm separation of the
/// two particles: a square well of given amplitude or a tabulated radial
/// profile, supported on separations up to `range`, with an optional hard
/// core below `core_radius` (those lattice points are removed, a Dirichlet
/// wall).
struct InteractionPotential {
    enum class Profile { Square, Tabulated };
    Profile profile = Profile::Square;
    double range = 0.0;
    double amplitude = 0.0;
    std::optional<double> core_radius;
    std::vector<std::pair<double, double>> table;  // (separation, value), increasing

    /// Finite part at the given separation; 0 beyond the range.
    double evaluate(double separation) const;
    void validate() const;
};

/// Finite-volume two-particle operator on the interior lattice of a box:
/// -(1/2)(Laplacian_1 + Laplacian_2) with Dirichlet walls plus the diagonal
/// potential W(x1,x2) = U + coupling * (v(x1) + v(x2)), hard-core points
/// removed.  Keeps its assembly inputs so shifted or swapped variants can be
/// rebuilt.
struct DiscreteHamiltonian {
    Box box;
    double spacing = 0.0;
    double coupling = 1.0;
    InteractionPotential interaction;
    FieldSample field;

    int intervals1 = 0;  // lattice intervals per axis of the first cube
    int intervals2 = 0;
    std::vector<int> retained;  // tensor index of each matrix row
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd potential_diag;
    long masked_count = 0;
    double w_sup = 0.0;
    double u_sup = 0.0;

    int dim() const { return box.dim(); }
    long tensor_size() const;
    /// Particle coordinates of a matrix row.
    std::pair<Point, Point> point(int row) const;
};

/// Finite part of the pair energy at (x1, x2); +infinity inside the hard
/// core.  The field must cover both points.
double potential_energy(const InteractionPotential& u, const FieldSample& v,
                        const Point& x1, const Point& x2, double coupling = 1.0);

/// Assemble the operator.  The field sample must cover the box shadow and
/// the spacing must tile both cube sides.
DiscreteHamiltonian assemble(const Box& box, double spacing,
                             const InteractionPotential& u, const FieldSample& v,
                             double coupling = 1.0);

/// The operator on the particle-swapped box, same interaction and field.
DiscreteHamiltonian swap_operator(const DiscreteHamiltonian& h);

struct PotentialSup {
    double w_sup = 0.0;
    double u_sup = 0.0;
};

/// Sups of |W| and |U| over the retained lattice points.
PotentialSup sup_potential(const DiscreteHamiltonian& h);

}  // namespace a2p
