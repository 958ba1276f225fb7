#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "a2p/geometry.hpp"
#include "a2p/hamiltonian.hpp"
#include "a2p/kernel_field.hpp"

using namespace a2p;

namespace {

const Box kUnitPair{Cube{{0.5}, 0.5}, Cube{{0.5}, 0.5}};

FieldSample flat_field(GridPtr grid, double value) {
    return FieldSample{grid, Eigen::VectorXd::Constant(grid->size(), value), ""};
}

FieldSample handmade_field() {
    GridPtr grid = build_grid(CellularSet{{Cube{{0.5}, 0.5}}}, 0.25);
    Eigen::VectorXd v(4);
    v << 1.5, 0.0, -0.5, 0.0;  // v(0)=1.5, v(0.5)=-0.5
    return FieldSample{grid, v, ""};
}

InteractionPotential square(double range, double amplitude,
                            std::optional<double> core = std::nullopt) {
    InteractionPotential u;
    u.profile = InteractionPotential::Profile::Square;
    u.range = range;
    u.amplitude = amplitude;
    u.core_radius = core;
    return u;
}

long row_nonzeros(const Eigen::SparseMatrix<double>& m, int row) {
    long n = 0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            if (it.row() == row) ++n;
    return n;
}

}  // namespace

TEST_CASE("square and tabulated profiles follow their declared shapes") {
    const InteractionPotential sq = square(0.5, 2.0);
    CHECK(sq.evaluate(0.0) == 2.0);
    CHECK(sq.evaluate(0.5) == 2.0);   // support includes the range itself
    CHECK(sq.evaluate(0.51) == 0.0);  // and nothing beyond

    InteractionPotential tab;
    tab.profile = InteractionPotential::Profile::Tabulated;
    tab.range = 0.5;
    tab.table = {{0.2, 3.0}, {0.4, 1.0}};
    tab.validate();
    CHECK(tab.evaluate(0.0) == 3.0);   // constant extension below the first knot
    CHECK(tab.evaluate(0.1) == 3.0);
    CHECK(tab.evaluate(0.3) == doctest::Approx(2.0));  // linear between knots
    CHECK(tab.evaluate(0.4) == 1.0);
    CHECK(tab.evaluate(0.45) == 1.0);  // constant extension up to the range
    CHECK(tab.evaluate(0.51) == 0.0);
}

TEST_CASE("interaction validation rejects malformed profiles") {
    CHECK_THROWS_AS(square(-1.0, 0.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(square(0.5, 1.0, 0.6).validate(), std::invalid_argument);
    CHECK_THROWS_AS(square(0.5, 1.0, 0.0).validate(), std::invalid_argument);
    CHECK_NOTHROW(square(0.5, 1.0, 0.4).validate());

    InteractionPotential tab;
    tab.profile = InteractionPotential::Profile::Tabulated;
    tab.range = 1.0;
    CHECK_THROWS_AS(tab.validate(), std::invalid_argument);  // empty table
    tab.table = {{0.3, 1.0}, {0.3, 2.0}};
    CHECK_THROWS_AS(tab.validate(), std::invalid_argument);  // non-increasing knots
}

TEST_CASE("pair energy combines interaction and both field values") {
    const FieldSample f = handmade_field();
    const InteractionPotential none = square(0.0, 0.0);
    CHECK(potential_energy(none, f, {0.0}, {0.5}) == doctest::Approx(1.0));
    CHECK(potential_energy(none, f, {0.0}, {0.5}, 2.0) == doctest::Approx(2.0));

    const InteractionPotential with_core = square(0.5, 4.0, 0.3);
    CHECK(potential_energy(with_core, f, {0.25}, {0.4}) ==
          std::numeric_limits<double>::infinity());
    // Separation 0.5 is outside the core and inside the square support.
    CHECK(potential_energy(with_core, f, {0.0}, {0.5}) == doctest::Approx(5.0));
}

TEST_CASE("hard cores remove the expected lattice points") {
    GridPtr grid = build_grid(CellularSet{{Cube{{0.5}, 0.5}}}, 0.25);
    const FieldSample zero = flat_field(grid, 0.0);

    const DiscreteHamiltonian free_pair = assemble(kUnitPair, 0.25, square(0.0, 0.0), zero);
    CHECK(free_pair.tensor_size() == 9);
    CHECK(free_pair.masked_count == 0);
    CHECK(free_pair.matrix.rows() == 9);

    // Interior separations on this lattice take the values 0, 0.25 and 0.5:
    // a core below 0.3 removes the 3 + 4 closest pairs, below 0.2 only the 3
    // coincident ones.
    const DiscreteHamiltonian h3 = assemble(kUnitPair, 0.25, square(0.4, 0.0, 0.3), zero);
    CHECK(h3.masked_count == 7);
    CHECK(h3.matrix.rows() == 2);

    const DiscreteHamiltonian h2 = assemble(kUnitPair, 0.25, square(0.4, 0.0, 0.2), zero);
    CHECK(h2.masked_count == 3);
    CHECK(h2.matrix.rows() == 6);

    CHECK_THROWS_AS(assemble(kUnitPair, 0.25, square(1.0, 0.0, 0.6), zero),
                    std::invalid_argument);
}

TEST_CASE("kinetic stencil carries the Dirichlet finite-difference weights") {
    GridPtr grid = build_grid(CellularSet{{Cube{{0.5}, 0.5}}}, 0.25);
    const DiscreteHamiltonian h =
        assemble(kUnitPair, 0.25, square(0.0, 0.0), flat_field(grid, 0.0));

    int middle = -1, corner = -1;
    for (int r = 0; r < h.matrix.rows(); ++r) {
        auto [x1, x2] = h.point(r);
        if (x1[0] == doctest::Approx(0.5) && x2[0] == doctest::Approx(0.5)) middle = r;
        if (x1[0] == doctest::Approx(0.25) && x2[0] == doctest::Approx(0.25)) corner = r;
    }
    REQUIRE(middle >= 0);
    REQUIRE(corner >= 0);

    const double kin = 2.0 / (0.25 * 0.25);   // 2 d / h^2 with d = 1
    const double hop = -0.5 / (0.25 * 0.25);  // -1 / (2 h^2)
    CHECK(h.matrix.coeff(middle, middle) == doctest::Approx(kin));
    CHECK(row_nonzeros(h.matrix, middle) == 5);  // both neighbors of both particles
    CHECK(row_nonzeros(h.matrix, corner) == 3);  // walls cut one neighbor each
    CHECK(h.matrix.coeff(corner, corner) == doctest::Approx(kin));

    Eigen::SparseMatrix<double> asym = h.matrix - Eigen::SparseMatrix<double>(h.matrix.transpose());
    CHECK(asym.norm() == 0.0);

    for (int r = 0; r < h.matrix.rows(); ++r)
        for (Eigen::SparseMatrix<double>::InnerIterator it(h.matrix, r); it; ++it)
            if (it.row() != it.col()) CHECK(it.value() == doctest::Approx(hop));
}

TEST_CASE("diagonal entries reproduce the pair energy at their lattice points") {
    GridPtr grid = build_grid(CellularSet{{Cube{{0.5}, 0.5}}}, 0.25);
    const KernelSpace space = gram_assemble(CovarianceKernel{}, grid);
    const FieldSample f = sample_field(space, 31, 0);
    const InteractionPotential u = square(0.4, 1.3, 0.2);
    const DiscreteHamiltonian h = assemble(kUnitPair, 0.25, u, f, 0.7);

    double wmax = 0.0;
    for (int r = 0; r < h.matrix.rows(); ++r) {
        auto [x1, x2] = h.point(r);
        const double w = potential_energy(u, f, x1, x2, 0.7);
        CHECK(h.potential_diag(r) == doctest::Approx(w).epsilon(1e-12));
        wmax = std::max(wmax, std::abs(w));
    }
    const PotentialSup sup = sup_potential(h);
    CHECK(sup.w_sup == doctest::Approx(wmax).epsilon(1e-12));
    CHECK(sup.w_sup == doctest::Approx(h.w_sup).epsilon(1e-12));
    CHECK(sup.u_sup == doctest::Approx(1.3));  // some retained pair sits in the well
}

TEST_CASE("adding a constant to the field shifts only the diagonal") {
    GridPtr grid = build_grid(CellularSet{{Cube{{0.5}, 0.5}}}, 0.25);
    const KernelSpace space = gram_assemble(CovarianceKernel{}, grid);
    const FieldSample f = sample_field(space, 8, 2);
    const double t = 0.8, c = 1.6;

    const DiscreteHamiltonian a = assemble(kUnitPair, 0.25, square(0.3, 0.9), f, c);
    const DiscreteHamiltonian b =
        assemble(kUnitPair, 0.25, square(0.3, 0.9), shifted(f, t), c);

    Eigen::SparseMatrix<double> diff = b.matrix - a.matrix;
    const long n = a.matrix.rows();
    for (long r = 0; r < n; ++r)
        CHECK(diff.coeff(r, r) == doctest::Approx(2.0 * c * t).epsilon(1e-12));
    CHECK(diff.norm() == doctest::Approx(std::sqrt(n) * 2.0 * c * t).epsilon(1e-12));
}

TEST_CASE("swapping the particles permutes the operator") {
    const Box box{Cube{{0.5}, 0.5}, Cube{{1.25}, 0.5}};
    GridPtr grid = build_grid(shadow(box), 0.25);
    const KernelSpace space = gram_assemble(CovarianceKernel{}, grid);
    const FieldSample f = sample_field(space, 12, 0);
    const InteractionPotential u = square(0.3, 2.0);

    const DiscreteHamiltonian h = assemble(box, 0.25, u, f);
    const DiscreteHamiltonian s = swap_operator(h);
    REQUIRE(s.matrix.rows() == h.matrix.rows());
    CHECK(s.box.particle1.center == box.particle2.center);
    CHECK(s.box.particle2.center == box.particle1.center);
    CHECK(s.w_sup == doctest::Approx(h.w_sup).epsilon(1e-12));

    // Match each row of the original to the swapped row at the exchanged
    // coordinates; the diagonal must carry the identical energy.
    std::map<std::pair<long, long>, int> rows;
    auto key = [](const Point& x1, const Point& x2) {
        return std::make_pair(std::lround(x1[0] * 1e6), std::lround(x2[0] * 1e6));
    };
    for (int r = 0; r < s.matrix.rows(); ++r) {
        auto [y1, y2] = s.point(r);
        rows[key(y1, y2)] = r;
    }
    for (int r = 0; r < h.matrix.rows(); ++r) {
        auto [x1, x2] = h.point(r);
        auto it = rows.find(key(x2, x1));
        REQUIRE(it != rows.end());
        CHECK(s.potential_diag(it->second) ==
              doctest::Approx(h.potential_diag(r)).epsilon(1e-12));
    }
}

TEST_CASE("assembly rejects spacings that do not tile the box") {
    GridPtr grid = build_grid(CellularSet{{Cube{{0.5}, 0.5}}}, 0.25);
    const FieldSample zero = flat_field(grid, 0.0);
    CHECK_THROWS_AS(assemble(kUnitPair, 0.3, square(0.0, 0.0), zero),
                    std::invalid_argument);
    // A spacing equal to the side leaves no interior lattice point.
    CHECK_THROWS_AS(assemble(kUnitPair, 1.0, square(0.0, 0.0), zero),
                    std::invalid_argument);
}
