#pragma once

// Vector-valued Radon measures on a closed interval [alpha, beta]:
//   nu = atoms + ac density + singular-continuous quadrature,
// i.e. the Lebesgue decomposition nu = nu^a + nu^s with the singular part
// further split into the atomic part (charging points) and a tagged
// quadrature approximating singular-continuous components (Cantor-type).
// The atomic/diffuse split nu = nu^0 + nu^diff used by the 1-d relaxation
// is recovered from the same fields.

#include "relaxkit/envelope.hpp"
#include "relaxkit/vec.hpp"

namespace relaxkit {

struct Atom {
    double x = 0.0;
    Vec weight;
};

struct SingularNode {
    double x = 0.0;
    double mass = 0.0;  // >= 0
    Vec dir;            // |dir| = 1
};

struct Measure1D {
    Interval interval;
    int dim = 1;
    std::vector<Atom> atoms;
    GridFn ac;  // piecewise-constant density on a uniform mesh over (alpha, beta)
    std::vector<SingularNode> singular;

    static Measure1D zero(Interval iv, int dim, int cells = 16) {
        Measure1D m;
        m.interval = iv;
        m.dim = dim;
        m.ac = GridFn::zero(iv.lo, iv.hi, cells, dim);
        return m;
    }

    void validate() const {
        for (const auto& a : atoms) {
            if (!interval.contains(a.x)) throw representation_error("atom outside the interval");
            if (is_zero(a.weight)) throw representation_error("zero atom weight");
            for (const auto& b : atoms)
                if (&a != &b && a.x == b.x) throw representation_error("duplicate atom location");
            for (const auto& s : singular)
                if (s.x == a.x) throw representation_error("singular node coincides with an atom");
        }
        for (const auto& s : singular)
            if (s.mass < 0.0) throw representation_error("negative singular mass");
        if (!std::isfinite(total_variation())) throw representation_error("measure with non-finite total variation");
    }

    // nu(E) for E = [a,b] intersected with the interval; includes endpoints.
    Vec mass_on(double a, double b) const {
        Vec m = zeros(dim);
        for (const auto& at : atoms)
            if (at.x >= a && at.x <= b) m = m + at.weight;
        for (const auto& s : singular)
            if (s.x >= a && s.x <= b) m = m + s.mass * s.dir;
        double clo = std::max(a, ac.lo), chi = std::min(b, ac.hi);
        if (clo < chi) {
            double h = ac.cell_width();
            int c0 = ac.cell_of(clo), c1 = ac.cell_of(chi);
            for (int c = c0; c <= c1; ++c) {
                double seg = std::min(chi, ac.lo + (c + 1) * h) - std::max(clo, ac.lo + c * h);
                if (seg > 0.0) m = m + seg * ac.cell_value(c);
            }
        }
        return m;
    }

    Vec total() const { return mass_on(interval.lo, interval.hi); }

    double total_variation() const {
        double s = ac.total_variation();
        for (const auto& a : atoms) s += norm(a.weight);
        for (const auto& sn : singular) s += sn.mass;
        return s;
    }

    Vec atom_at(double x) const {
        for (const auto& a : atoms)
            if (a.x == x) return a.weight;
        return zeros(dim);
    }
};

// nu = nu_a + nu_s: absolutely continuous part vs (atoms + singular quadrature).
inline std::pair<Measure1D, Measure1D> lebesgue_decompose(const Measure1D& nu) {
    Measure1D a = nu;
    a.atoms.clear();
    a.singular.clear();
    Measure1D s = nu;
    s.ac = GridFn::zero(nu.ac.lo, nu.ac.hi, std::max(1, nu.ac.cells()), nu.dim);
    return {a, s};
}

// nu = nu^0 + nu^diff: atoms vs everything else. S^0(nu) is the atom location set.
struct AtomicSplit {
    Measure1D atomic;
    Measure1D diffuse;
    std::vector<double> s0;
};

inline AtomicSplit atomic_decompose(const Measure1D& nu) {
    AtomicSplit out;
    out.atomic = nu;
    out.atomic.ac = GridFn::zero(nu.ac.lo, nu.ac.hi, std::max(1, nu.ac.cells()), nu.dim);
    out.atomic.singular.clear();
    out.diffuse = nu;
    out.diffuse.atoms.clear();
    for (const auto& a : nu.atoms) out.s0.push_back(a.x);
    std::sort(out.s0.begin(), out.s0.end());
    return out;
}

inline Measure1D measure_sum(const Measure1D& a, const Measure1D& b) {
    Measure1D r = a;
    for (const auto& at : b.atoms) r.atoms.push_back(at);
    for (const auto& s : b.singular) r.singular.push_back(s);
    if (b.ac.cells() == r.ac.cells()) {
        for (std::size_t i = 0; i < r.ac.data.size(); ++i) r.ac.data[i] += b.ac.data[i];
    } else {
        for (int c = 0; c < r.ac.cells(); ++c)
            r.ac.set_cell(c, r.ac.cell_value(c) + b.ac.value_at(r.ac.cell_midpoint(c)));
    }
    return r;
}

// \int_A f**(d nu^a/dx) dx + sum over singular contributions in A of the
// recession applied to weights/directions; midpoint rule on the ac mesh.
inline double nonlinear_transform(const EnvelopeTable& e, const Measure1D& nu, Interval A) {
    if (e.dim != nu.dim) throw std::invalid_argument("envelope/measure dimension mismatch");
    double out = 0.0;
    double h = nu.ac.cell_width();
    for (int c = 0; c < nu.ac.cells(); ++c) {
        double lo = nu.ac.lo + c * h, hi = lo + h;
        double seg = std::min(hi, A.hi) - std::max(lo, A.lo);
        if (seg > 0.0) out += e.evaluate(nu.ac.cell_value(c)) * seg;
    }
    for (const auto& a : nu.atoms)
        if (A.contains(a.x)) out += recession(e, a.weight);
    for (const auto& s : nu.singular)
        if (A.contains(s.x)) out += s.mass * recession(e, s.dir);
    return out;
}

inline double nonlinear_transform(const EnvelopeTable& e, const Measure1D& nu) {
    return nonlinear_transform(e, nu, nu.interval);
}

// Componentwise pairing \int phi d nu.
inline Vec pair_components(const Measure1D& nu, const std::function<double(double)>& phi) {
    Vec out = zeros(nu.dim);
    double h = nu.ac.cell_width();
    for (int c = 0; c < nu.ac.cells(); ++c)
        out = out + (phi(nu.ac.cell_midpoint(c)) * h) * nu.ac.cell_value(c);
    for (const auto& a : nu.atoms) out = out + phi(a.x) * a.weight;
    for (const auto& s : nu.singular) out = out + (phi(s.x) * s.mass) * s.dir;
    return out;
}

inline double pair(const Measure1D& nu, const std::function<double(double)>& phi) {
    return pair_components(nu, phi)[0];
}

// Middle-thirds Cantor quadrature: 2^depth nodes (interval midpoints at the
// given depth), each carrying mass 2^-depth, mapped onto [lo, hi].
inline std::vector<SingularNode> cantor_quadrature(double lo, double hi, int depth, const Vec& dir, double total_mass = 1.0) {
    std::vector<std::pair<double, double>> segs = {{0.0, 1.0}};
    for (int l = 0; l < depth; ++l) {
        std::vector<std::pair<double, double>> next;
        for (auto [a, b] : segs) {
            double th = (b - a) / 3.0;
            next.emplace_back(a, a + th);
            next.emplace_back(b - th, b);
        }
        segs = std::move(next);
    }
    std::vector<SingularNode> nodes;
    double mass = total_mass / static_cast<double>(segs.size());
    for (auto [a, b] : segs) {
        SingularNode n;
        n.x = lo + (hi - lo) * 0.5 * (a + b);
        n.mass = mass;
        n.dir = dir;
        nodes.push_back(n);
    }
    return nodes;
}

}  // namespace relaxkit
