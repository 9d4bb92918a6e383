#pragma once

// Restricted n-d evaluator (n in {2,3}, W convex or scalar target with W**):
//   total = sum_cells QW(grad u) vol
//         + sum_faces (QW)^inf(jump x normal) area
//         + sum_cells g(u_cell, v_ac_cell) vol
//         + f1min * sum over singular v of (f2**)^inf applied to weights.

#include <array>

#include "relaxkit/relax.hpp"

namespace relaxkit {

// Nodal field on a rectangular mesh, m components per node.
struct MeshField {
    int n = 2;  // spatial dimension
    int m = 1;  // target components
    std::array<int, 3> nodes = {2, 2, 1};
    std::array<double, 3> lo = {0.0, 0.0, 0.0};
    std::array<double, 3> hi = {1.0, 1.0, 1.0};
    std::vector<double> data;  // node-major (x fastest), m-strided

    int node_count() const {
        int c = 1;
        for (int a = 0; a < n; ++a) c *= nodes[static_cast<std::size_t>(a)];
        return c;
    }

    std::size_t node_index(const std::array<int, 3>& id) const {
        std::size_t flat = 0;
        for (int a = n; a-- > 0;) flat = flat * static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)]) + static_cast<std::size_t>(id[static_cast<std::size_t>(a)]);
        return flat;
    }

    Vec node_value(const std::array<int, 3>& id) const {
        Vec v(static_cast<std::size_t>(m));
        std::size_t base = node_index(id) * static_cast<std::size_t>(m);
        for (int k = 0; k < m; ++k) v[static_cast<std::size_t>(k)] = data[base + static_cast<std::size_t>(k)];
        return v;
    }

    void set_node(const std::array<int, 3>& id, const Vec& v) {
        std::size_t base = node_index(id) * static_cast<std::size_t>(m);
        for (int k = 0; k < m; ++k) data[base + static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k)];
    }

    double spacing(int axis) const {
        return (hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]) / (nodes[static_cast<std::size_t>(axis)] - 1);
    }

    std::array<int, 3> cells() const {
        std::array<int, 3> c = {1, 1, 1};
        for (int a = 0; a < n; ++a) c[static_cast<std::size_t>(a)] = nodes[static_cast<std::size_t>(a)] - 1;
        return c;
    }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < n; ++a) v *= spacing(a);
        return v;
    }

    static MeshField constant(int n, const std::array<int, 3>& nodes, const std::array<double, 3>& lo,
                              const std::array<double, 3>& hi, const Vec& value) {
        MeshField f;
        f.n = n;
        f.m = static_cast<int>(value.size());
        f.nodes = nodes;
        f.lo = lo;
        f.hi = hi;
        f.data.assign(static_cast<std::size_t>(f.node_count()) * static_cast<std::size_t>(f.m), 0.0);
        std::array<int, 3> id = {0, 0, 0};
        for (int i = 0; i < f.node_count(); ++i) {
            f.set_node(id, value);
            int a = 0;
            while (a < n && ++id[static_cast<std::size_t>(a)] == nodes[static_cast<std::size_t>(a)]) id[static_cast<std::size_t>(a++)] = 0;
        }
        return f;
    }

    // Cell-average value (mean of corner nodes) and cell-average gradient,
    // flattened row-major as an (m x n) matrix. Exact for affine fields.
    void cell_data(const std::array<int, 3>& cell, Vec& avg, Vec& grad) const {
        int corners = 1 << n;
        avg.assign(static_cast<std::size_t>(m), 0.0);
        grad.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(n), 0.0);
        for (int c = 0; c < corners; ++c) {
            std::array<int, 3> id = cell;
            for (int a = 0; a < n; ++a) id[static_cast<std::size_t>(a)] += (c >> a) & 1;
            Vec uv = node_value(id);
            for (int k = 0; k < m; ++k) avg[static_cast<std::size_t>(k)] += uv[static_cast<std::size_t>(k)] / corners;
            for (int a = 0; a < n; ++a) {
                double sign = ((c >> a) & 1) ? 1.0 : -1.0;
                double scale = sign / (spacing(a) * (corners / 2));
                for (int k = 0; k < m; ++k)
                    grad[static_cast<std::size_t>(k * n + a)] += scale * uv[static_cast<std::size_t>(k)];
            }
        }
    }
};

struct NdAtom {
    std::array<double, 3> x = {0, 0, 0};
    Vec weight;
};

struct NdSingularNode {
    std::array<double, 3> x = {0, 0, 0};
    double mass = 0.0;
    Vec dir;
};

// Measure data on the same rectangular mesh: cellwise ac densities plus
// point masses and a singular-continuous quadrature on the closed box.
struct NdMeasure {
    int n = 2;
    int d = 1;
    std::array<int, 3> cells = {1, 1, 1};
    std::array<double, 3> lo = {0.0, 0.0, 0.0};
    std::array<double, 3> hi = {1.0, 1.0, 1.0};
    std::vector<double> ac;  // cell-major (x fastest), d-strided
    std::vector<NdAtom> atoms;
    std::vector<NdSingularNode> singular;

    int cell_count() const {
        int c = 1;
        for (int a = 0; a < n; ++a) c *= cells[static_cast<std::size_t>(a)];
        return c;
    }

    std::size_t cell_index(const std::array<int, 3>& id) const {
        std::size_t flat = 0;
        for (int a = n; a-- > 0;) flat = flat * static_cast<std::size_t>(cells[static_cast<std::size_t>(a)]) + static_cast<std::size_t>(id[static_cast<std::size_t>(a)]);
        return flat;
    }

    Vec cell_value(const std::array<int, 3>& id) const {
        Vec v(static_cast<std::size_t>(d));
        std::size_t base = cell_index(id) * static_cast<std::size_t>(d);
        for (int k = 0; k < d; ++k) v[static_cast<std::size_t>(k)] = ac[base + static_cast<std::size_t>(k)];
        return v;
    }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < n; ++a) v *= (hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)]) / cells[static_cast<std::size_t>(a)];
        return v;
    }

    double total_mass_norm() const {
        double s = 0.0;
        double vol = cell_volume();
        for (int c = 0; c < cell_count(); ++c) {
            double q = 0.0;
            for (int k = 0; k < d; ++k) q += ac[static_cast<std::size_t>(c * d + k)] * ac[static_cast<std::size_t>(c * d + k)];
            s += std::sqrt(q) * vol;
        }
        for (const auto& a : atoms) s += norm(a.weight);
        for (const auto& sn : singular) s += sn.mass;
        return s;
    }

    static NdMeasure zero(int n, int d, const std::array<int, 3>& cells, const std::array<double, 3>& lo,
                          const std::array<double, 3>& hi) {
        NdMeasure v;
        v.n = n;
        v.d = d;
        v.cells = cells;
        v.lo = lo;
        v.hi = hi;
        v.ac.assign(static_cast<std::size_t>(v.cell_count()) * static_cast<std::size_t>(d), 0.0);
        return v;
    }
};

// Face-jump record: jump vector across the face between `cell` and the
// neighbor in +axis direction.
struct FaceJump {
    std::array<int, 3> cell = {0, 0, 0};
    int axis = 0;
    Vec jump;
};

inline EnergyReport evaluate_relaxed_nd(const FunctionModel& f1, const EnvelopeTable& f2env, const EnvelopeTable& Wenv,
                                        double f1min, const MeshField& u, const NdMeasure& v,
                                        const std::vector<FaceJump>& face_jumps = {}, bool W_convex = true) {
    if (u.n < 2 || u.n > 3) throw unsupported_dimension_error("nd evaluator handles n in {2,3}");
    if (!W_convex && u.m != 1)
        throw unsupported_dimension_error("non-convex W requires a scalar target (quasiconvexification out of scope)");
    if (Wenv.dim != u.m * u.n) throw std::invalid_argument("W envelope dimension must be m*n");

    EnergyReport rep;
    const double vol = u.cell_volume();
    auto mesh_cells = u.cells();
    if (v.cells != mesh_cells || v.n != u.n) throw std::invalid_argument("u and v must share the mesh");

    const double cvol = v.cell_volume();
    std::array<int, 3> id = {0, 0, 0};
    Vec avg, grad;
    for (int c = 0; c < v.cell_count(); ++c) {
        u.cell_data(id, avg, grad);
        rep.diffuse_W_term += Wenv.evaluate(grad) * vol;
        rep.g_term += g_density(f1, f2env, f1min, avg, v.cell_value(id)) * cvol;
        int a = 0;
        while (a < u.n && ++id[static_cast<std::size_t>(a)] == mesh_cells[static_cast<std::size_t>(a)]) id[static_cast<std::size_t>(a++)] = 0;
    }

    int face_id = 0;
    for (const auto& fj : face_jumps) {
        double area = vol / u.spacing(fj.axis);
        Vec xi = zeros(u.m * u.n);
        for (int k = 0; k < u.m; ++k) xi[static_cast<std::size_t>(k * u.n + fj.axis)] = fj.jump[static_cast<std::size_t>(k)];
        rep.jump_terms.emplace_back(static_cast<double>(face_id++), recession(Wenv, xi) * area);
    }

    for (const auto& a : v.atoms) rep.singular_v_term += f1min * recession(f2env, a.weight);
    for (const auto& s : v.singular) rep.singular_v_term += f1min * s.mass * recession(f2env, s.dir);

    rep.total = rep.parts_sum();
    return rep;
}

}  // namespace relaxkit
