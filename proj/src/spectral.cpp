#include "a2p/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "a2p/rng.hpp"

namespace a2p {

namespace {

double inf_norm(const Eigen::SparseMatrix<double>& m) {
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            row_sums(it.row()) += std::abs(it.value());
    return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

Spectrum dense_solve(const DiscreteHamiltonian& h, int count) {
    Eigen::MatrixXd dense(h.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigensolve: dense solver failed to converge");
    Spectrum s;
    const long n = es.eigenvalues().size();
    long keep = (count < 0 || count >= n) ? n : count;
    s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + keep);
    s.complete = keep == n;
    s.coverage_upper = s.complete ? std::numeric_limits<double>::infinity()
                                  : s.eigenvalues.back();
    s.method = "dense";
    return s;
}

Spectrum lanczos_solve(const DiscreteHamiltonian& h, int count, const SolverOptions& opt) {
    const long n = h.matrix.rows();
    const long k = std::min<long>(count, n);
    const double scale = std::max(inf_norm(h.matrix), 1.0);
    const double tol = opt.residual_tol * scale;
    const long m_max = std::min<long>(n, std::max<long>(opt.max_iterations, 4 * k + 32));

    std::mt19937_64 eng(opt.start_seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd v(n, m_max);
    Eigen::VectorXd alpha(m_max), beta(m_max);
    for (long i = 0; i < n; ++i) v(i, 0) = nd(eng);
    v.col(0).normalize();

    Eigen::VectorXd ritz;
    Eigen::MatrixXd tvec;
    long steps = 0;
    double worst_residual = std::numeric_limits<double>::infinity();
    for (long j = 0; j < m_max; ++j) {
        Eigen::VectorXd w = h.matrix * v.col(j);
        if (j > 0) w -= beta(j - 1) * v.col(j - 1);
        alpha(j) = v.col(j).dot(w);
        w -= alpha(j) * v.col(j);
        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass)
            w -= v.leftCols(j + 1) * (v.leftCols(j + 1).transpose() * w);
        beta(j) = w.norm();
        steps = j + 1;

        bool breakdown = beta(j) <= 1e-13 * scale;
        bool last = j + 1 == m_max;
        bool check = steps >= k && (steps % 10 == 0 || last || breakdown);
        if (check) {
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
            for (long i = 0; i < steps; ++i) {
                t(i, i) = alpha(i);
                if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = beta(i);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
            if (steps >= k) {
                worst_residual = 0.0;
                for (long i = 0; i < k; ++i)
                    worst_residual = std::max(
                        worst_residual,
                        std::abs(beta(steps - 1) * es.eigenvectors()(steps - 1, i)));
                if (worst_residual <= tol || breakdown || last) {
                    ritz = es.eigenvalues().head(k);
                    tvec = es.eigenvectors().leftCols(k);
                    if (worst_residual <= tol || breakdown) break;
                }
            }
        }
        if (breakdown) {
            if (steps >= k) break;
            for (long i = 0; i < n; ++i) w(i) = nd(eng);
            for (int pass = 0; pass < 2; ++pass)
                w -= v.leftCols(j + 1) * (v.leftCols(j + 1).transpose() * w);
            w.normalize();
            beta(j) = 0.0;
        } else {
            w /= beta(j);
        }
        if (j + 1 < m_max) v.col(j + 1) = w;
    }
    if (ritz.size() < k)
        throw std::runtime_error("eigensolve: Lanczos failed to produce Ritz values");

    // explicit residual check on the recovered eigenpairs
    double max_res = 0.0;
    for (long i = 0; i < k; ++i) {
        Eigen::VectorXd x = v.leftCols(steps) * tvec.col(i);
        x.normalize();
        max_res = std::max(max_res, (h.matrix * x - ritz(i) * x).norm());
    }
    if (max_res > tol)
        throw std::runtime_error(
            "eigensolve: Lanczos did not converge, worst residual " +
            std::to_string(max_res) + " vs tolerance " + std::to_string(tol));

    Spectrum s;
    s.eigenvalues.assign(ritz.data(), ritz.data() + k);
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    s.complete = k == n;
    s.coverage_upper = s.complete ? std::numeric_limits<double>::infinity()
                                  : s.eigenvalues.back();
    s.method = "lanczos";
    return s;
}

void require_coverage(const Spectrum& s, double hi, const char* who) {
    if (!s.complete && hi > s.coverage_upper)
        throw std::runtime_error(std::string(who) +
                                 ": window exceeds certified spectral coverage");
}

}  // namespace

Spectrum eigensolve(const DiscreteHamiltonian& h, int count, const SolverOptions& opt) {
    if (count == 0) throw std::invalid_argument("eigensolve: count must be positive");
    const long n = h.matrix.rows();
    bool dense = false;
    switch (opt.method) {
        case SolverOptions::Method::Dense: dense = true; break;
        case SolverOptions::Method::Lanczos: dense = false; break;
        case SolverOptions::Method::Auto: dense = n <= opt.dense_limit; break;
    }
    if (dense) return dense_solve(h, count);
    if (count < 0)
        throw std::invalid_argument(
            "eigensolve: the whole spectrum beyond the dense limit is not available; "
            "request a finite eigenvalue count");
    return lanczos_solve(h, count, opt);
}

long count_in_window(const Spectrum& s, Interval j) {
    if (j.hi < j.lo) return 0;
    require_coverage(s, j.hi, "count_in_window");
    auto lo = std::lower_bound(s.eigenvalues.begin(), s.eigenvalues.end(), j.lo);
    auto hi = std::upper_bound(s.eigenvalues.begin(), s.eigenvalues.end(), j.hi);
    return hi - lo;
}

double spectral_distance(const Spectrum& a, const Spectrum& b, Interval j) {
    if (j.hi < j.lo) return std::numeric_limits<double>::infinity();
    require_coverage(a, j.hi, "spectral_distance");
    require_coverage(b, j.hi, "spectral_distance");
    auto alo = std::lower_bound(a.eigenvalues.begin(), a.eigenvalues.end(), j.lo);
    auto ahi = std::upper_bound(a.eigenvalues.begin(), a.eigenvalues.end(), j.hi);
    auto blo = std::lower_bound(b.eigenvalues.begin(), b.eigenvalues.end(), j.lo);
    auto bhi = std::upper_bound(b.eigenvalues.begin(), b.eigenvalues.end(), j.hi);
    if (alo == ahi || blo == bhi) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    auto p = alo;
    auto q = blo;
    while (p != ahi && q != bhi) {
        best = std::min(best, std::abs(*p - *q));
        if (*p < *q)
            ++p;
        else
            ++q;
    }
    while (p != ahi) best = std::min(best, std::abs(*p - *(bhi - 1))), ++p;
    while (q != bhi) best = std::min(best, std::abs(*(ahi - 1) - *q)), ++q;
    return best;
}

double shift_check(const DiscreteHamiltonian& h, double t, const SolverOptions& opt) {
    Spectrum base = eigensolve(h, -1, opt);
    DiscreteHamiltonian moved =
        assemble(h.box, h.spacing, h.interaction, shifted(h.field, t), h.coupling);
    Spectrum shifted_spec = eigensolve(moved, -1, opt);
    if (base.eigenvalues.size() != shifted_spec.eigenvalues.size())
        throw std::runtime_error("shift_check: spectra of different size");
    double dev = 0.0;
    for (std::size_t i = 0; i < base.eigenvalues.size(); ++i)
        dev = std::max(dev, std::abs(shifted_spec.eigenvalues[i] - base.eigenvalues[i] -
                                     2.0 * h.coupling * t));
    return dev;
}

}  // namespace a2p
