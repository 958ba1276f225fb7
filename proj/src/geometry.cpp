#include "a2p/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace a2p {

double max_dist(const Point& x, const Point& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("max_dist: dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

double Cube::volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= 2.0 * half_side;
    return v;
}

bool Cube::contains(const Point& x) const {
    if (static_cast<int>(x.size()) != dim())
        throw std::invalid_argument("Cube::contains: dimension mismatch");
    for (int i = 0; i < dim(); ++i)
        if (x[i] < lo(i) || x[i] > hi(i)) return false;
    return true;
}

double cube_distance(const Cube& a, const Cube& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("cube_distance: dimension mismatch");
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        double gap = std::abs(a.center[i] - b.center[i]) - (a.half_side + b.half_side);
        m = std::max(m, gap);
    }
    return std::max(m, 0.0);
}

int CellularSet::dim() const {
    if (cubes.empty()) return 0;
    return cubes.front().dim();
}

bool CellularSet::contains(const Point& x) const {
    for (const auto& c : cubes)
        if (c.contains(x)) return true;
    return false;
}

namespace {

// Measure of the intersection of a cube subset: product over axes of the
// overlap lengths of the coordinate intervals.
double intersection_measure(const std::vector<Cube>& cubes, unsigned mask) {
    int d = cubes.front().dim();
    double vol = 1.0;
    for (int ax = 0; ax < d; ++ax) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < cubes.size(); ++k) {
            if (!(mask & (1u << k))) continue;
            lo = std::max(lo, cubes[k].lo(static_cast<int>(ax)));
            hi = std::min(hi, cubes[k].hi(static_cast<int>(ax)));
        }
        if (hi <= lo) return 0.0;
        vol *= hi - lo;
    }
    return vol;
}

}  // namespace

double CellularSet::measure() const {
    if (cubes.empty()) return 0.0;
    if (cubes.size() > 20)
        throw std::invalid_argument("CellularSet::measure: too many cubes");
    double total = 0.0;
    unsigned n = static_cast<unsigned>(cubes.size());
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        int bits = __builtin_popcount(mask);
        double m = intersection_measure(cubes, mask);
        total += (bits % 2 == 1) ? m : -m;
    }
    return total;
}

CellularSet set_union(const CellularSet& a, const CellularSet& b) {
    if (!a.empty() && !b.empty() && a.dim() != b.dim())
        throw std::invalid_argument("set_union: dimension mismatch");
    CellularSet u = a;
    u.cubes.insert(u.cubes.end(), b.cubes.begin(), b.cubes.end());
    return u;
}

double set_distance(const CellularSet& a, const CellularSet& b) {
    if (a.empty() || b.empty())
        return std::numeric_limits<double>::infinity();
    double m = std::numeric_limits<double>::infinity();
    for (const auto& ca : a.cubes)
        for (const auto& cb : b.cubes)
            m = std::min(m, cube_distance(ca, cb));
    return m;
}

Box swap_box(const Box& b) { return Box{b.particle2, b.particle1}; }

CellularSet shadow(const Box& b) {
    if (b.particle1.dim() != b.particle2.dim())
        throw std::invalid_argument("shadow: particle cubes of different dimension");
    CellularSet s;
    s.cubes.push_back(b.particle1);
    if (b.particle2.center != b.particle1.center ||
        b.particle2.half_side != b.particle1.half_side)
        s.cubes.push_back(b.particle2);
    return s;
}

namespace {

// Sup norm over the concatenated 2d center coordinates of two boxes.
double center_distance(const Cube& a1, const Cube& a2, const Cube& b1, const Cube& b2) {
    return std::max(max_dist(a1.center, b1.center), max_dist(a2.center, b2.center));
}

}  // namespace

bool distance_condition(const Box& a, const Box& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("distance_condition: dimension mismatch");
    double plain = center_distance(a.particle1, a.particle2, b.particle1, b.particle2);
    double swapped = center_distance(a.particle2, a.particle1, b.particle1, b.particle2);
    double max_l = std::max(std::max(a.particle1.half_side, a.particle2.half_side),
                            std::max(b.particle1.half_side, b.particle2.half_side));
    return std::min(plain, swapped) > 8.0 * max_l;
}

SeparationVerdict classify_separation(const Box& a, const Box& b) {
    SeparationVerdict v;
    v.distance_condition = distance_condition(a, b);
    if (!v.distance_condition)
        throw std::invalid_argument(
            "classify_separation: boxes violate the separation distance rule");

    CellularSet p1{{a.particle1}}, p2{{a.particle2}};
    CellularSet q1{{b.particle1}}, q2{{b.particle2}};
    CellularSet sa = shadow(a), sb = shadow(b);

    v.complete = set_distance(sa, sb) > 0.0;
    v.p1_isolated = set_distance(p1, set_union(p2, sb)) > 0.0;
    v.p2_isolated = set_distance(p2, set_union(p1, sb)) > 0.0;
    v.p1_prime_isolated = set_distance(q1, set_union(sa, q2)) > 0.0;
    v.p2_prime_isolated = set_distance(q2, set_union(sa, q1)) > 0.0;
    return v;
}

}  // namespace a2p
