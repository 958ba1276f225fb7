#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "a2p/hamiltonian.hpp"
#include "a2p/kernel_field.hpp"
#include "a2p/spectral.hpp"

using namespace a2p;

namespace {

const Box kUnitPair{Cube{{0.5}, 0.5}, Cube{{0.5}, 0.5}};

FieldSample zero_field(GridPtr grid) {
    return FieldSample{grid, Eigen::VectorXd::Zero(grid->size()), ""};
}

// Closed-form spectrum of the free pair operator on a d=1 cube of given
// side: half-sums of the discrete Dirichlet eigenvalues
// lambda_m = (2/h^2)(1 - cos(m pi / n)) with n = side/h intervals.
std::vector<double> free_pair_exact(double side, double h) {
    const int n = static_cast<int>(std::lround(side / h));
    const double pi = std::acos(-1.0);
    std::vector<double> single;
    for (int m = 1; m < n; ++m)
        single.push_back(2.0 / (h * h) * (1.0 - std::cos(m * pi / n)));
    std::vector<double> pair;
    for (double a : single)
        for (double b : single) pair.push_back(0.5 * (a + b));
    std::sort(pair.begin(), pair.end());
    return pair;
}

DiscreteHamiltonian sampled_operator(const Box& box, double h, std::uint64_t master,
                                     std::uint64_t index, double coupling = 1.0) {
    GridPtr grid = build_grid(shadow(box), h);
    const KernelSpace space = gram_assemble(CovarianceKernel{}, grid);
    return assemble(box, h, InteractionPotential{}, sample_field(space, master, index),
                    coupling);
}

}  // namespace

TEST_CASE("free pair spectrum matches the closed-form Dirichlet eigenvalues") {
    GridPtr grid = build_grid(CellularSet{{Cube{{0.5}, 0.5}}}, 0.25);
    const DiscreteHamiltonian h =
        assemble(kUnitPair, 0.25, InteractionPotential{}, zero_field(grid));
    const Spectrum s = eigensolve(h);
    REQUIRE(s.complete);
    CHECK(s.method == "dense");

    const std::vector<double> exact = free_pair_exact(1.0, 0.25);
    REQUIRE(s.eigenvalues.size() == exact.size());
    for (std::size_t i = 0; i < exact.size(); ++i)
        CHECK(s.eigenvalues[i] == doctest::Approx(exact[i]).epsilon(1e-10));
    CHECK(s.eigenvalues.front() == doctest::Approx(9.372583002030480).epsilon(1e-10));

    // Finer lattice, larger cube: same closed form.
    const Box wide{Cube{{0.0}, 1.0}, Cube{{0.0}, 1.0}};
    GridPtr grid2 = build_grid(shadow(wide), 0.125);
    const Spectrum s2 =
        eigensolve(assemble(wide, 0.125, InteractionPotential{}, zero_field(grid2)));
    const std::vector<double> exact2 = free_pair_exact(2.0, 0.125);
    REQUIRE(s2.eigenvalues.size() == exact2.size());
    for (std::size_t i = 0; i < exact2.size(); ++i)
        CHECK(s2.eigenvalues[i] == doctest::Approx(exact2[i]).epsilon(1e-8));
}

TEST_CASE("eigenvalue counts are stable under the solver choice") {
    const Box box{Cube{{0.0}, 1.0}, Cube{{0.0}, 1.0}};
    const DiscreteHamiltonian h = sampled_operator(box, 0.0625, 17, 0);
    REQUIRE(h.matrix.rows() == 961);

    SolverOptions dense;
    dense.method = SolverOptions::Method::Dense;
    const Spectrum sd = eigensolve(h, -1, dense);
    REQUIRE(sd.complete);

    SolverOptions lan;
    lan.method = SolverOptions::Method::Lanczos;
    lan.residual_tol = 1e-10;
    const Spectrum sl = eigensolve(h, 10, lan);
    CHECK(sl.method == "lanczos");
    CHECK_FALSE(sl.complete);
    REQUIRE(sl.eigenvalues.size() == 10);
    CHECK(sl.coverage_upper >= sl.eigenvalues.back());
    for (int i = 0; i < 10; ++i)
        CHECK(sl.eigenvalues[i] ==
              doctest::Approx(sd.eigenvalues[static_cast<std::size_t>(i)]).epsilon(1e-7));
}

TEST_CASE("Lanczos that exhausts the space reports a complete spectrum") {
    const DiscreteHamiltonian h = sampled_operator(kUnitPair, 0.25, 3, 1);
    SolverOptions lan;
    lan.method = SolverOptions::Method::Lanczos;
    const Spectrum sl = eigensolve(h, 9, lan);
    const Spectrum sd = eigensolve(h);
    REQUIRE(sl.complete);
    REQUIRE(sl.eigenvalues.size() == 9);
    for (int i = 0; i < 9; ++i)
        CHECK(sl.eigenvalues[static_cast<std::size_t>(i)] ==
              doctest::Approx(sd.eigenvalues[static_cast<std::size_t>(i)]).epsilon(1e-8));
}

TEST_CASE("solver argument validation") {
    const DiscreteHamiltonian h = sampled_operator(kUnitPair, 0.25, 3, 2);
    CHECK_THROWS_AS(eigensolve(h, 0), std::invalid_argument);
    SolverOptions lan;
    lan.method = SolverOptions::Method::Lanczos;
    CHECK_THROWS_AS(eigensolve(h, -1, lan), std::invalid_argument);
}

TEST_CASE("window counting respects certified coverage") {
    Spectrum full;
    full.eigenvalues = {1.0, 2.0, 3.0};
    full.complete = true;
    CHECK(count_in_window(full, Interval{1.5, 3.0}) == 2);
    CHECK(count_in_window(full, Interval{2.0, 2.0}) == 1);  // closed window
    CHECK(count_in_window(full, Interval{3.5, 9.0}) == 0);

    Spectrum part;
    part.eigenvalues = {1.0, 2.0, 3.0};
    part.complete = false;
    part.coverage_upper = 2.5;
    CHECK(count_in_window(part, Interval{0.0, 2.0}) == 2);
    CHECK_THROWS_WITH_AS(count_in_window(part, Interval{0.0, 3.0}),
                         doctest::Contains("coverage"), std::runtime_error);
}

TEST_CASE("spectral distance: closest pair inside the window, infinite when empty") {
    Spectrum a, b;
    a.eigenvalues = {1.0, 5.0};
    a.complete = true;
    b.eigenvalues = {1.2, 7.0};
    b.complete = true;
    CHECK(spectral_distance(a, b, Interval{0.0, 6.0}) == doctest::Approx(0.2));
    CHECK(spectral_distance(a, b, Interval{4.0, 8.0}) == doctest::Approx(2.0));
    CHECK(spectral_distance(a, b, Interval{8.0, 9.0}) ==
          std::numeric_limits<double>::infinity());

    Spectrum part = b;
    part.complete = false;
    part.coverage_upper = 6.0;
    CHECK_THROWS_AS(spectral_distance(a, part, Interval{0.0, 7.0}), std::runtime_error);
}

TEST_CASE("constant field shifts move every eigenvalue by twice the coupled shift") {
    const DiscreteHamiltonian h = sampled_operator(kUnitPair, 0.25, 11, 0, 1.6);
    for (double t : {-1.0, 0.5, 2.0}) CHECK(shift_check(h, t) < 1e-9);
}

TEST_CASE("eigenvalues move at most by the sup of the potential difference") {
    const Box box{Cube{{0.5}, 0.5}, Cube{{0.5}, 0.5}};
    GridPtr grid = build_grid(shadow(box), 0.125);
    const KernelSpace space = gram_assemble(CovarianceKernel{}, grid);
    const FieldSample f = sample_field(space, 23, 4);

    const DiscreteHamiltonian free_op =
        assemble(box, 0.125, InteractionPotential{}, zero_field(grid));
    const DiscreteHamiltonian pert = assemble(box, 0.125, InteractionPotential{}, f);
    const Spectrum s0 = eigensolve(free_op);
    const Spectrum s1 = eigensolve(pert);
    REQUIRE(s0.eigenvalues.size() == s1.eigenvalues.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < s0.eigenvalues.size(); ++i)
        worst = std::max(worst, std::abs(s1.eigenvalues[i] - s0.eigenvalues[i]));
    CHECK(worst <= pert.w_sup + 1e-10);
    CHECK(worst > 0.0);
}
