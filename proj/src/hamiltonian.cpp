#include "a2p/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace a2p {

double InteractionPotential::evaluate(double separation) const {
    if (separation > range) return 0.0;
    if (profile == Profile::Square) return amplitude;
    if (separation <= table.front().first) return table.front().second;
    if (separation >= table.back().first) return table.back().second;
    auto it = std::upper_bound(table.begin(), table.end(), separation,
                               [](double s, const auto& p) { return s < p.first; });
    auto [s1, v1] = *it;
    auto [s0, v0] = *(it - 1);
    return v0 + (v1 - v0) * (separation - s0) / (s1 - s0);
}

void InteractionPotential::validate() const {
    if (range < 0.0 || !std::isfinite(range))
        throw std::invalid_argument("interaction: range must be finite and nonnegative");
    if (!std::isfinite(amplitude))
        throw std::invalid_argument("interaction: amplitude must be finite");
    if (core_radius) {
        if (!(*core_radius > 0.0) || !(*core_radius < range))
            throw std::invalid_argument(
                "interaction: hard-core radius must lie strictly inside (0, range)");
    }
    if (profile == Profile::Tabulated) {
        if (table.empty())
            throw std::invalid_argument("interaction: tabulated profile without samples");
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (!std::isfinite(table[i].first) || !std::isfinite(table[i].second) ||
                table[i].first < 0.0)
                throw std::invalid_argument("interaction: bad table entry");
            if (i > 0 && table[i].first <= table[i - 1].first)
                throw std::invalid_argument(
                    "interaction: table separations must strictly increase");
        }
    }
}

double potential_energy(const InteractionPotential& u, const FieldSample& v,
                        const Point& x1, const Point& x2, double coupling) {
    double sep = max_dist(x1, x2);
    if (u.core_radius && sep < *u.core_radius)
        return std::numeric_limits<double>::infinity();
    return u.evaluate(sep) + coupling * (v.at(x1) + v.at(x2));
}

long DiscreteHamiltonian::tensor_size() const {
    long t = 1;
    for (int ax = 0; ax < dim(); ++ax) t *= intervals1 - 1;
    for (int ax = 0; ax < dim(); ++ax) t *= intervals2 - 1;
    return t;
}

std::pair<Point, Point> DiscreteHamiltonian::point(int row) const {
    const int d = dim();
    long m1 = intervals1 - 1, m2 = intervals2 - 1;
    long idx = retained[static_cast<std::size_t>(row)];
    std::vector<long> digits(static_cast<std::size_t>(2 * d));
    for (int k = 2 * d - 1; k >= 0; --k) {
        long base = k < d ? m1 : m2;
        digits[static_cast<std::size_t>(k)] = idx % base;
        idx /= base;
    }
    Point x1(static_cast<std::size_t>(d)), x2(static_cast<std::size_t>(d));
    for (int ax = 0; ax < d; ++ax) {
        x1[static_cast<std::size_t>(ax)] =
            box.particle1.lo(ax) + (digits[static_cast<std::size_t>(ax)] + 1.0) * spacing;
        x2[static_cast<std::size_t>(ax)] =
            box.particle2.lo(ax) + (digits[static_cast<std::size_t>(d + ax)] + 1.0) * spacing;
    }
    return {x1, x2};
}

namespace {

int lattice_intervals(const Cube& c, double spacing) {
    double side = 2.0 * c.half_side;
    long n = std::lround(side / spacing);
    if (n < 2 || std::abs(n * spacing - side) > 1e-9 * std::max(1.0, side))
        throw std::invalid_argument(
            "assemble: spacing does not tile a cube side with interior points");
    return static_cast<int>(n);
}

// field values at the interior lattice nodes of one cube, flattened
// row-major over the axes
std::vector<double> node_values(const Cube& c, int n, int d, double spacing,
                                const FieldSample& v) {
    long m = n - 1, total = 1;
    for (int ax = 0; ax < d; ++ax) total *= m;
    std::vector<double> out(static_cast<std::size_t>(total));
    std::vector<long> digit(static_cast<std::size_t>(d), 0);
    Point x(static_cast<std::size_t>(d));
    for (long flat = 0; flat < total; ++flat) {
        for (int ax = 0; ax < d; ++ax)
            x[static_cast<std::size_t>(ax)] =
                c.lo(ax) + (digit[static_cast<std::size_t>(ax)] + 1.0) * spacing;
        out[static_cast<std::size_t>(flat)] = v.at(x);
        for (int ax = d - 1; ax >= 0; --ax) {
            if (++digit[static_cast<std::size_t>(ax)] < m) break;
            digit[static_cast<std::size_t>(ax)] = 0;
        }
    }
    return out;
}

}  // namespace

DiscreteHamiltonian assemble(const Box& box, double spacing,
                             const InteractionPotential& u, const FieldSample& v,
                             double coupling) {
    u.validate();
    if (!(spacing > 0.0)) throw std::invalid_argument("assemble: spacing must be positive");
    const int d = box.dim();
    if (box.particle2.dim() != d)
        throw std::invalid_argument("assemble: particle cubes of different dimension");

    DiscreteHamiltonian h;
    h.box = box;
    h.spacing = spacing;
    h.coupling = coupling;
    h.interaction = u;
    h.field = v;
    h.intervals1 = lattice_intervals(box.particle1, spacing);
    h.intervals2 = lattice_intervals(box.particle2, spacing);

    const long m1 = h.intervals1 - 1, m2 = h.intervals2 - 1;
    long t1 = 1, t2 = 1;
    for (int ax = 0; ax < d; ++ax) {
        t1 *= m1;
        t2 *= m2;
    }
    const long total = t1 * t2;

    std::vector<double> v1 = node_values(box.particle1, h.intervals1, d, spacing, v);
    std::vector<double> v2 = node_values(box.particle2, h.intervals2, d, spacing, v);

    // per-axis coordinates for separation evaluation
    std::vector<double> c1(static_cast<std::size_t>(m1 * d)), c2(static_cast<std::size_t>(m2 * d));
    for (int ax = 0; ax < d; ++ax) {
        for (long i = 0; i < m1; ++i)
            c1[static_cast<std::size_t>(ax * m1 + i)] =
                box.particle1.lo(ax) + (i + 1.0) * spacing;
        for (long i = 0; i < m2; ++i)
            c2[static_cast<std::size_t>(ax * m2 + i)] =
                box.particle2.lo(ax) + (i + 1.0) * spacing;
    }

    std::vector<int> compact(static_cast<std::size_t>(total), -1);
    std::vector<double> diag;
    std::vector<long> digits(static_cast<std::size_t>(2 * d));
    h.retained.clear();
    double wmax = 0.0, umax = 0.0;
    for (long flat = 0; flat < total; ++flat) {
        long idx = flat;
        for (int k = 2 * d - 1; k >= 0; --k) {
            long base = k < d ? m1 : m2;
            digits[static_cast<std::size_t>(k)] = idx % base;
            idx /= base;
        }
        double sep = 0.0;
        long off1 = 0, off2 = 0;
        for (int ax = 0; ax < d; ++ax) {
            double a = c1[static_cast<std::size_t>(ax * m1 + digits[static_cast<std::size_t>(ax)])];
            double b = c2[static_cast<std::size_t>(ax * m2 + digits[static_cast<std::size_t>(d + ax)])];
            sep = std::max(sep, std::abs(a - b));
            off1 = off1 * m1 + digits[static_cast<std::size_t>(ax)];
            off2 = off2 * m2 + digits[static_cast<std::size_t>(d + ax)];
        }
        if (u.core_radius && sep < *u.core_radius) {
            ++h.masked_count;
            continue;
        }
        double uval = u.evaluate(sep);
        double w = uval + coupling * (v1[static_cast<std::size_t>(off1)] +
                                      v2[static_cast<std::size_t>(off2)]);
        compact[static_cast<std::size_t>(flat)] = static_cast<int>(h.retained.size());
        h.retained.push_back(static_cast<int>(flat));
        diag.push_back(w);
        wmax = std::max(wmax, std::abs(w));
        umax = std::max(umax, std::abs(uval));
    }
    h.w_sup = wmax;
    h.u_sup = umax;

    const long n = static_cast<long>(h.retained.size());
    if (n == 0) throw std::invalid_argument("assemble: hard core removed every lattice point");
    h.potential_diag = Eigen::Map<Eigen::VectorXd>(diag.data(), n);

    // strides of the 2d tensor axes
    std::vector<long> stride(static_cast<std::size_t>(2 * d), 1);
    std::vector<long> bases(static_cast<std::size_t>(2 * d));
    for (int k = 0; k < 2 * d; ++k) bases[static_cast<std::size_t>(k)] = k < d ? m1 : m2;
    for (int k = 2 * d - 2; k >= 0; --k)
        stride[static_cast<std::size_t>(k)] =
            stride[static_cast<std::size_t>(k + 1)] * bases[static_cast<std::size_t>(k + 1)];

    const double kin_diag = 2.0 * d / (spacing * spacing);
    const double hop = -0.5 / (spacing * spacing);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * (1 + 4 * static_cast<std::size_t>(d)));
    for (long row = 0; row < n; ++row) {
        long flat = h.retained[static_cast<std::size_t>(row)];
        trip.emplace_back(row, row, kin_diag + h.potential_diag(row));
        long idx = flat;
        for (int k = 2 * d - 1; k >= 0; --k) {
            digits[static_cast<std::size_t>(k)] = idx % bases[static_cast<std::size_t>(k)];
            idx /= bases[static_cast<std::size_t>(k)];
        }
        for (int k = 0; k < 2 * d; ++k) {
            long dk = digits[static_cast<std::size_t>(k)];
            if (dk > 0) {
                int col = compact[static_cast<std::size_t>(flat - stride[static_cast<std::size_t>(k)])];
                if (col >= 0) trip.emplace_back(row, col, hop);
            }
            if (dk + 1 < bases[static_cast<std::size_t>(k)]) {
                int col = compact[static_cast<std::size_t>(flat + stride[static_cast<std::size_t>(k)])];
                if (col >= 0) trip.emplace_back(row, col, hop);
            }
        }
    }
    h.matrix.resize(n, n);
    h.matrix.setFromTriplets(trip.begin(), trip.end());
    h.matrix.makeCompressed();
    return h;
}

DiscreteHamiltonian swap_operator(const DiscreteHamiltonian& h) {
    return assemble(swap_box(h.box), h.spacing, h.interaction, h.field, h.coupling);
}

PotentialSup sup_potential(const DiscreteHamiltonian& h) { return {h.w_sup, h.u_sup}; }

}  // namespace a2p
