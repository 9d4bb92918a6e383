#pragma once

// BV functions on an interval, stored through the decomposition
//   Du = u' L^1 + [u] H^0|_{S_u} + Du^c
// plus the anchor value u(alpha^+). Traces are exact: a one-sided limit is
// the anchor plus the slope integral plus the jumps and Cantor mass strictly
// on the relevant side.

#include "relaxkit/measure1d.hpp"
#include "relaxkit/vec.hpp"

namespace relaxkit {

struct Jump {
    double x = 0.0;
    Vec left;
    Vec right;
};

enum class Side { left, right };

struct BV1D {
    Interval interval;
    int dim = 1;  // target R^m
    GridFn slope;
    std::vector<Jump> jumps;
    std::vector<SingularNode> cantor;
    Vec anchor;

    static BV1D constant(Interval iv, const Vec& value, int cells = 16) {
        BV1D u;
        u.interval = iv;
        u.dim = static_cast<int>(value.size());
        u.slope = GridFn::zero(iv.lo, iv.hi, cells, u.dim);
        u.anchor = value;
        return u;
    }

    void validate() const {
        for (const auto& j : jumps) {
            if (!interval.contains_open(j.x)) throw representation_error("jump must lie strictly inside the interval");
            if (norm(j.right - j.left) == 0.0) throw representation_error("jump with equal traces");
            for (const auto& k : jumps)
                if (&j != &k && j.x == k.x) throw representation_error("duplicate jump location");
        }
    }

    // \int_{alpha}^{x} slope, exact on the piecewise-constant mesh.
    Vec slope_integral(double x) const {
        Vec s = zeros(dim);
        double h = slope.cell_width();
        for (int c = 0; c < slope.cells(); ++c) {
            double lo = slope.lo + c * h;
            if (x <= lo) break;
            double seg = std::min(x, lo + h) - lo;
            s = s + seg * slope.cell_value(c);
        }
        return s;
    }

    Vec trace(double x, Side side) const {
        if (x < interval.lo || x > interval.hi) throw std::domain_error("trace point outside the interval");
        if (side == Side::left && x <= interval.lo) throw std::domain_error("left trace needs x > alpha");
        if (side == Side::right && x >= interval.hi) throw std::domain_error("right trace needs x < beta");
        Vec v = anchor + slope_integral(x);
        for (const auto& j : jumps) {
            if (j.x < x || (j.x == x && side == Side::right)) v = v + (j.right - j.left);
        }
        for (const auto& c : cantor) {
            if (c.x < x || (c.x == x && side == Side::right)) v = v + c.mass * c.dir;
        }
        return v;
    }

    // Pointwise value at a non-jump point (right trace convention at mesh artifacts).
    Vec value_at(double x) const {
        if (x >= interval.hi) return trace(interval.hi, Side::left);
        if (x <= interval.lo) return trace(interval.lo, Side::right);
        return trace(x, Side::right);
    }

    const Jump* jump_at(double x) const {
        for (const auto& j : jumps)
            if (j.x == x) return &j;
        return nullptr;
    }
};

inline Measure1D derivative(const BV1D& u) {
    Measure1D m;
    m.interval = u.interval;
    m.dim = u.dim;
    m.ac = u.slope;
    for (const auto& j : u.jumps) m.atoms.push_back({j.x, j.right - j.left});
    m.singular = u.cantor;
    return m;
}

inline double total_variation(const BV1D& u) {
    double s = u.slope.total_variation();
    for (const auto& j : u.jumps) s += norm(j.right - j.left);
    for (const auto& c : u.cantor) s += c.mass;
    return s;
}

// Devil's staircase at the given depth: zero slope, unit Cantor mass.
inline BV1D devil_staircase(Interval iv, int depth = 8, int cells = 16) {
    BV1D u = BV1D::constant(iv, vec1(0.0), cells);
    u.cantor = cantor_quadrature(iv.lo, iv.hi, depth, vec1(1.0));
    return u;
}

// Tags the singular data of v by whether it sits on the Du-singular support
// of u, recovering the three-way split v = v^a + v^{|Du^s|} + v^sigma
// relative to a given u. Purely diagnostic; the relaxed evaluators never
// consume the finer split.
struct SingularTagging {
    std::vector<bool> atom_on_du_singular;
    std::vector<bool> node_on_du_singular;
};

inline SingularTagging tag_singular_parts(const Measure1D& v, const BV1D& u) {
    SingularTagging tag;
    auto on_du = [&](double x) {
        if (u.jump_at(x)) return true;
        for (const auto& c : u.cantor)
            if (c.x == x) return true;
        return false;
    };
    for (const auto& a : v.atoms) tag.atom_on_du_singular.push_back(on_du(a.x));
    for (const auto& s : v.singular) tag.node_on_du_singular.push_back(on_du(s.x));
    return tag;
}

}  // namespace relaxkit
