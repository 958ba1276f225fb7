#pragma once

#include <vector>

namespace a2p {

/// A point in R^d, d = size().
using Point = std::vector<double>;

/// Sup-norm distance between two points. Throws on dimension mismatch.
double max_dist(const Point& x, const Point& y);

/// Closed axis-aligned cube of side 2L centered at u: the product of
/// [u_i - L, u_i + L] over the coordinates.
struct Cube {
    Point center;
    double half_side = 0.0;

    int dim() const { return static_cast<int>(center.size()); }
    double lo(int axis) const { return center[axis] - half_side; }
    double hi(int axis) const { return center[axis] + half_side; }
    double volume() const;
    bool contains(const Point& x) const;
};

/// Sup-norm distance between two closed cubes; 0 when they touch or overlap.
double cube_distance(const Cube& a, const Cube& b);

/// Finite union of closed cubes of equal dimension.  Shadows of two-particle
/// boxes are unions of at most two cubes; separation classification forms
/// larger unions transiently.
struct CellularSet {
    std::vector<Cube> cubes;

    int dim() const;
    bool empty() const { return cubes.empty(); }
    bool contains(const Point& x) const;
    /// Lebesgue measure of the union (inclusion-exclusion over the list).
    double measure() const;
};

CellularSet set_union(const CellularSet& a, const CellularSet& b);

/// Sup-norm distance between two cube unions (minimum over cube pairs).
/// Distance to an empty set is +infinity.
double set_distance(const CellularSet& a, const CellularSet& b);

/// Two-particle box: a product of one cube per particle, both in R^d.
struct Box {
    Cube particle1;
    Cube particle2;

    int dim() const { return particle1.dim(); }
    double volume() const { return particle1.volume() * particle2.volume(); }
};

/// Exchange the particle cubes.
Box swap_box(const Box& b);

/// Projection shadow: the union of the two particle cubes (a single cube
/// when they coincide).
CellularSet shadow(const Box& b);

/// Distance rule gating the two-volume estimator: both the plain and the
/// particle-swapped center separation, measured in the sup norm over all 2d
/// center coordinates, must exceed 8 * max of the four half-sides.
bool distance_condition(const Box& a, const Box& b);

/// Outcome of the separation classification for an admissible box pair.
/// "complete" means the two shadows are at positive distance.  The four
/// partial flags record which single projection is at positive distance
/// from the union of everything else, in the order: first/second cube of
/// the left box, first/second cube of the right box.
struct SeparationVerdict {
    bool distance_condition = false;
    bool complete = false;
    bool p1_isolated = false;
    bool p2_isolated = false;
    bool p1_prime_isolated = false;
    bool p2_prime_isolated = false;

    bool partial() const {
        return p1_isolated || p2_isolated || p1_prime_isolated || p2_prime_isolated;
    }
};

/// Classify an admissible pair of boxes.  Throws if the distance rule fails.
SeparationVerdict classify_separation(const Box& a, const Box& b);

}  // namespace a2p
