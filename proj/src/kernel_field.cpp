#include "a2p/kernel_field.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "a2p/rng.hpp"

namespace a2p {

double CovarianceKernel::smooth(double r) const {
    if (scale == 0.0) return 0.0;
    double u = r / corr_length;
    if (family == Family::SquaredExponential) return scale * std::exp(-0.5 * u * u);
    return scale * std::exp(-u);
}

namespace {

double euclid(const Point& x, const Point& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

long flat_index(const std::vector<long>& digits, long base) {
    long f = 0;
    for (long q : digits) f = f * base + q;
    return f;
}

}  // namespace

int GridSpec::locate(const Point& x) const {
    if (static_cast<int>(x.size()) != dim())
        throw std::invalid_argument("GridSpec::locate: dimension mismatch");
    for (std::size_t k = 0; k < domain.cubes.size(); ++k) {
        const Cube& c = domain.cubes[k];
        if (!c.contains(x)) continue;
        long n = cube_intervals[k];
        std::vector<long> q(static_cast<std::size_t>(dim()));
        for (int ax = 0; ax < dim(); ++ax) {
            long i = static_cast<long>(std::floor((x[ax] - c.lo(ax)) / spacing + 1e-9));
            q[static_cast<std::size_t>(ax)] = std::clamp(i, 0L, n - 1);
        }
        return cube_cells[k][static_cast<std::size_t>(flat_index(q, n))];
    }
    return -1;
}

std::vector<int> GridSpec::cells_in(const CellularSet& s) const {
    std::vector<int> out;
    if (s.empty()) return out;
    for (int i = 0; i < size(); ++i)
        if (s.contains(centers[static_cast<std::size_t>(i)])) out.push_back(i);
    return out;
}

GridPtr build_grid(const CellularSet& domain, double spacing) {
    if (domain.empty()) throw std::invalid_argument("build_grid: empty domain");
    if (!(spacing > 0.0)) throw std::invalid_argument("build_grid: spacing must be positive");
    const int d = domain.dim();
    auto g = std::make_shared<GridSpec>();
    g->domain = domain;
    g->spacing = spacing;
    g->cell_measure = std::pow(spacing, d);

    for (const Cube& c : domain.cubes) {
        if (c.dim() != d) throw std::invalid_argument("build_grid: mixed dimensions");
        double side = 2.0 * c.half_side;
        long n = std::lround(side / spacing);
        if (n < 1 || std::abs(n * spacing - side) > 1e-9 * std::max(1.0, side))
            throw std::invalid_argument("build_grid: spacing does not tile a cube side");
        g->cube_intervals.push_back(static_cast<int>(n));
    }

    // overlapping cubes must share the lattice; touching or disjoint ones need not
    for (std::size_t i = 0; i + 1 < domain.cubes.size(); ++i) {
        for (std::size_t j = i + 1; j < domain.cubes.size(); ++j) {
            const Cube &a = domain.cubes[i], &b = domain.cubes[j];
            if (cube_distance(a, b) > 0.0) continue;
            bool positive_overlap = true;
            for (int ax = 0; ax < d; ++ax)
                if (std::min(a.hi(ax), b.hi(ax)) - std::max(a.lo(ax), b.lo(ax)) <= 0.0)
                    positive_overlap = false;
            if (!positive_overlap) continue;
            for (int ax = 0; ax < d; ++ax) {
                double off = (a.lo(ax) - b.lo(ax)) / spacing;
                if (std::abs(off - std::lround(off)) > 1e-9)
                    throw std::invalid_argument(
                        "build_grid: overlapping cubes with misaligned lattices");
            }
        }
    }

    for (std::size_t k = 0; k < domain.cubes.size(); ++k) {
        const Cube& c = domain.cubes[k];
        long n = g->cube_intervals[k];
        long total = 1;
        for (int ax = 0; ax < d; ++ax) total *= n;
        std::vector<int> table(static_cast<std::size_t>(total), -1);
        std::vector<long> digit(static_cast<std::size_t>(d), 0);
        for (long flat = 0; flat < total; ++flat) {
            Point center(static_cast<std::size_t>(d));
            for (int ax = 0; ax < d; ++ax)
                center[static_cast<std::size_t>(ax)] =
                    c.lo(ax) + (static_cast<double>(digit[static_cast<std::size_t>(ax)]) + 0.5) * spacing;
            int id = -1;
            for (std::size_t e = 0; e < k && id < 0; ++e) {
                const Cube& ce = domain.cubes[e];
                if (!ce.contains(center)) continue;
                long ne = g->cube_intervals[e];
                std::vector<long> q(static_cast<std::size_t>(d));
                for (int ax = 0; ax < d; ++ax) {
                    long i = static_cast<long>(
                        std::floor((center[static_cast<std::size_t>(ax)] - ce.lo(ax)) / spacing));
                    q[static_cast<std::size_t>(ax)] = std::clamp(i, 0L, ne - 1);
                }
                id = g->cube_cells[e][static_cast<std::size_t>(flat_index(q, ne))];
            }
            if (id < 0) {
                id = static_cast<int>(g->centers.size());
                g->centers.push_back(center);
            }
            table[static_cast<std::size_t>(flat)] = id;
            for (int ax = d - 1; ax >= 0; --ax) {
                if (++digit[static_cast<std::size_t>(ax)] < n) break;
                digit[static_cast<std::size_t>(ax)] = 0;
            }
        }
        g->cube_cells.push_back(std::move(table));
    }
    return g;
}

double KernelSpace::inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
    double h2 = grid->cell_measure * grid->cell_measure;
    return h2 * f.dot(cell_cov * g);
}

KernelSpace gram_assemble(const CovarianceKernel& kernel, GridPtr grid,
                          const CellularSet* lead, int max_basis) {
    if (!grid) throw std::invalid_argument("gram_assemble: null grid");
    if (kernel.scale < 0.0 || kernel.nugget < 0.0)
        throw std::invalid_argument("gram_assemble: negative kernel parameters");
    if (kernel.scale + kernel.nugget <= 0.0)
        throw std::invalid_argument("gram_assemble: kernel is identically zero");
    if (kernel.scale > 0.0 && !(kernel.corr_length > 0.0))
        throw std::invalid_argument("gram_assemble: correlation length must be positive");

    KernelSpace s;
    s.grid = grid;
    s.kernel = kernel;
    const int n = grid->size();
    s.cell_cov.resize(n, n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            s.cell_cov(i, j) = kernel.smooth(
                euclid(grid->centers[static_cast<std::size_t>(i)],
                       grid->centers[static_cast<std::size_t>(j)]));
        s.cell_cov(i, i) += kernel.nugget;
    }

    const double h2 = grid->cell_measure * grid->cell_measure;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.cell_cov, Eigen::EigenvaluesOnly);
    s.gram_min_eig = h2 * es.eigenvalues().minCoeff();
    s.gram_max_eig = h2 * es.eigenvalues().maxCoeff();
    if (!(s.gram_min_eig > 1e-12 * s.gram_max_eig))
        throw std::runtime_error(
            "gram_assemble: covariance gram is numerically singular; add a nugget");

    Eigen::LLT<Eigen::MatrixXd> llt(s.cell_cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "gram_assemble: covariance factorization failed; add a nugget");
    s.sample_factor = llt.matrixL();

    s.lead_set = lead ? *lead : grid->domain;
    s.lead_cells = grid->cells_in(s.lead_set);
    if (s.lead_cells.empty())
        throw std::invalid_argument("gram_assemble: lead set contains no grid cells");

    Eigen::VectorXd ind = Eigen::VectorXd::Zero(n);
    for (int c : s.lead_cells) ind(c) = 1.0;
    double z2 = h2 * ind.dot(s.cell_cov * ind);
    s.norm_z = std::sqrt(z2);
    s.normalized_indicator = ind / s.norm_z;
    s.regression_profile = grid->cell_measure * (s.cell_cov * s.normalized_indicator);

    // orthonormal basis led by the normalized indicator: stabilized
    // Gram-Schmidt over cell indicators in the kernel inner product
    int m = max_basis < 0 ? std::min(n, 64) : std::min(max_basis, n);
    if (m < 1) m = 1;
    s.basis.resize(n, m);
    Eigen::MatrixXd gb(n, m);  // cached gram * basis columns
    Eigen::VectorXd b0 = s.normalized_indicator;
    b0 /= std::sqrt(s.inner(b0, b0));
    s.basis.col(0) = b0;
    gb.col(0) = h2 * (s.cell_cov * b0);
    int built = 1;
    for (int p = 0; p < n && built < m; ++p) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        r(p) = 1.0;
        double init = h2 * s.cell_cov(p, p);
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < built; ++j)
                r -= gb.col(j).dot(r) * s.basis.col(j);
        Eigen::VectorXd gr = h2 * (s.cell_cov * r);
        double n2 = gr.dot(r);
        if (n2 <= 1e-10 * init) continue;
        r /= std::sqrt(n2);
        s.basis.col(built) = r;
        gb.col(built) = h2 * (s.cell_cov * r);
        ++built;
    }
    s.basis.conservativeResize(n, built);
    return s;
}

double FieldSample::at(const Point& x) const {
    int id = grid->locate(x);
    if (id < 0) throw std::invalid_argument("FieldSample::at: point outside the field domain");
    return values(id);
}

FieldSample sample_field(const KernelSpace& space, std::uint64_t master,
                         std::uint64_t index) {
    RngStream rs(master, index);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd z(space.grid->size());
    for (int i = 0; i < z.size(); ++i) z(i) = nd(rs.engine);
    return FieldSample{space.grid, space.sample_factor * z, rs.path};
}

FieldSample shifted(const FieldSample& f, double t) {
    FieldSample g = f;
    g.values.array() += t;
    return g;
}

double sup_field(const FieldSample& f, const CellularSet& s) {
    double m = 0.0;
    for (int c : f.grid->cells_in(s)) m = std::max(m, std::abs(f.values(c)));
    return m;
}

double coefficient(const KernelSpace& space, const Eigen::VectorXd& zeta,
                   const FieldSample& f) {
    if (zeta.size() != f.values.size())
        throw std::invalid_argument("coefficient: grid function size mismatch");
    return space.grid->cell_measure * zeta.dot(f.values);
}

Decomposition decompose(const KernelSpace& space, const FieldSample& f) {
    Decomposition d;
    d.lead_coefficient = coefficient(space, space.normalized_indicator, f);
    d.regression_profile = space.regression_profile;
    d.fluctuation = f.values - d.lead_coefficient * d.regression_profile;
    return d;
}

FieldSample recombine(const KernelSpace& space, double lead_coefficient,
                      const Decomposition& d) {
    return FieldSample{space.grid,
                       lead_coefficient * d.regression_profile + d.fluctuation,
                       "recombined"};
}

double gaussian_window_mass(double width) {
    if (width <= 0.0) return 0.0;
    return std::erf(width / (2.0 * std::sqrt(2.0)));
}

namespace {

// largest fraction of sorted samples inside any half-open window of the
// given width
double window_scan(std::vector<double>& v, double width) {
    std::sort(v.begin(), v.end());
    std::size_t best = 0, j = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (j < i) j = i;
        while (j < v.size() && v[j] < v[i] + width) ++j;
        best = std::max(best, j - i);
    }
    return static_cast<double>(best) / static_cast<double>(v.size());
}

}  // namespace

ModulusEstimate modulus_empirical(const CovarianceKernel& kernel,
                                  const CellularSet& lead, const CellularSet& other,
                                  double spacing, double width, int n_outer,
                                  int n_inner, std::uint64_t seed) {
    if (lead.empty()) throw std::invalid_argument("modulus_empirical: empty lead set");
    if (n_inner < 100)
        throw std::invalid_argument("modulus_empirical: n_inner must be at least 100");
    if (n_outer < 1)
        throw std::invalid_argument("modulus_empirical: n_outer must be at least 1");
    if (!(width > 0.0)) throw std::invalid_argument("modulus_empirical: width must be positive");

    CellularSet domain = other.empty() ? lead : set_union(lead, other);
    GridPtr grid = build_grid(domain, spacing);
    {
        auto lc = grid->cells_in(lead);
        auto oc = grid->cells_in(other);
        std::sort(lc.begin(), lc.end());
        std::sort(oc.begin(), oc.end());
        std::vector<int> both;
        std::set_intersection(lc.begin(), lc.end(), oc.begin(), oc.end(),
                              std::back_inserter(both));
        if (!both.empty())
            throw std::invalid_argument("modulus_empirical: conditioning sets overlap");
    }
    KernelSpace space = gram_assemble(kernel, grid, &lead, 1);

    ModulusEstimate est;
    est.n_outer = n_outer;
    est.n_inner = n_inner;
    std::vector<double> maxima(static_cast<std::size_t>(n_outer));
    std::vector<double> vals(static_cast<std::size_t>(n_inner));
    Eigen::VectorXd rebuilt(grid->size());
    for (int o = 0; o < n_outer; ++o) {
        FieldSample v = sample_field(space, seed, static_cast<std::uint64_t>(o));
        Decomposition dec = decompose(space, v);
        std::mt19937_64 eng(derive_stream(mix64(seed ^ 0x5DEECE66DULL),
                                          static_cast<std::uint64_t>(o)));
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int i = 0; i < n_inner; ++i) {
            double g = nd(eng);
            rebuilt = g * dec.regression_profile + dec.fluctuation;
            vals[static_cast<std::size_t>(i)] =
                grid->cell_measure * space.normalized_indicator.dot(rebuilt);
        }
        maxima[static_cast<std::size_t>(o)] = window_scan(vals, width);
    }
    double sum = 0.0, sum2 = 0.0, top = 0.0;
    for (double m : maxima) {
        sum += m;
        sum2 += m * m;
        top = std::max(top, m);
    }
    est.value = top;
    est.outer_mean = sum / n_outer;
    double var = sum2 / n_outer - est.outer_mean * est.outer_mean;
    est.outer_rel_std =
        est.outer_mean > 0.0 ? std::sqrt(std::max(var, 0.0)) / est.outer_mean : 0.0;
    return est;
}

ModulusEstimate modulus_bar(const CovarianceKernel& kernel, const Box& box,
                            double spacing, double width, ModulusMode mode,
                            const std::vector<Box>& probes, int n_outer, int n_inner,
                            std::uint64_t seed) {
    if (mode == ModulusMode::GaussianClosedForm) {
        ModulusEstimate e;
        e.value = e.outer_mean = gaussian_window_mass(width);
        return e;
    }
    if (probes.empty())
        throw std::invalid_argument("modulus_bar: empirical mode needs a probe set");

    ModulusEstimate best;
    bool any = false;
    std::uint64_t salt = 0;
    CellularSet sh = shadow(box);
    CellularSet p1{{box.particle1}}, p2{{box.particle2}};
    for (const Box& probe : probes) {
        SeparationVerdict v = classify_separation(box, probe);
        CellularSet shp = shadow(probe);
        auto consider = [&](const CellularSet& lead, const CellularSet& other) {
            ModulusEstimate e = modulus_empirical(kernel, lead, other, spacing, width,
                                                  n_outer, n_inner,
                                                  derive_stream(seed, salt++));
            if (!any || e.value > best.value) best = e;
            any = true;
        };
        if (v.complete) consider(sh, shp);
        if (v.p1_isolated) consider(p1, set_union(p2, shp));
        if (v.p2_isolated) consider(p2, set_union(p1, shp));
    }
    if (!any)
        throw std::runtime_error(
            "modulus_bar: no admissible conditioning geometry among the probes");
    return best;
}

}  // namespace a2p
