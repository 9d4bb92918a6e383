#pragma once

// Convex envelopes f** and recession functions h^inf.
//
// The envelope is the greatest convex function below f; under linear growth it
// coincides with the biconjugate, so the numeric paths compute
//   d=1: the exact lower hull of the sampled graph (monotone chain),
//   d=2: the discrete biconjugate via two nested 1-d Legendre transforms
//        over a slope grid bounded by the declared growth constant.
// The recession h^inf(b) = lim h(tb)/t is estimated on unit directions along
// a T-ladder t in {2^4..2^20} with a Richardson cross-check, and extended to
// all of R^d by positive 1-homogeneity: h^inf(b) = |b| * h^inf(b/|b|).

#include "relaxkit/function_model.hpp"
#include "relaxkit/vec.hpp"

namespace relaxkit {

struct EnvelopeTable {
    int dim = 1;
    BoxNd box;
    std::vector<int> nodes_per_axis;
    std::vector<double> values;  // f** at grid nodes, row-major
    std::vector<Vec> directions;
    std::vector<double> recession_values;           // h^inf on `directions`
    std::vector<std::pair<double, double>> sigma;   // (t, sigma(t)), non-increasing
    std::function<double(const Vec&)> exact_envelope;   // closed form, may be null
    std::function<double(const Vec&)> exact_recession;  // closed form, may be null
    double verification_residual = 0.0;  // |numeric hull - declared envelope| when both exist
    double growth_upper = 1.0;

    double node_coord(int axis, int i) const {
        int n = nodes_per_axis[static_cast<std::size_t>(axis)];
        return box.lo[static_cast<std::size_t>(axis)] +
               (box.hi[static_cast<std::size_t>(axis)] - box.lo[static_cast<std::size_t>(axis)]) * i / (n - 1);
    }

    double node_value(const std::vector<int>& idx) const {
        std::size_t flat = 0;
        for (int a = 0; a < dim; ++a) flat = flat * static_cast<std::size_t>(nodes_per_axis[static_cast<std::size_t>(a)]) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
        return values[flat];
    }

    // Envelope value at b: closed form when declared, otherwise multilinear
    // interpolation inside the box and the supporting affine function of the
    // nearest boundary node outside it (linear growth makes the hull
    // eventually affine along rays).
    double evaluate(const Vec& b) const {
        if (exact_envelope) return exact_envelope(b);
        if (dim == 1) return eval_table_1d(b[0]);
        return eval_table_2d(b[0], b[1]);
    }

    double eval_table_1d(double x) const {
        int n = nodes_per_axis[0];
        double lo = box.lo[0], hi = box.hi[0];
        double h = (hi - lo) / (n - 1);
        if (x <= lo) return values[0] + (values[1] - values[0]) / h * (x - lo);
        if (x >= hi) return values[static_cast<std::size_t>(n - 1)] + (values[static_cast<std::size_t>(n - 1)] - values[static_cast<std::size_t>(n - 2)]) / h * (x - hi);
        double s = (x - lo) / h;
        int i = std::min(static_cast<int>(s), n - 2);
        double w = s - i;
        return (1.0 - w) * values[static_cast<std::size_t>(i)] + w * values[static_cast<std::size_t>(i + 1)];
    }

    double eval_table_2d(double x, double y) const {
        int nx = nodes_per_axis[0], ny = nodes_per_axis[1];
        double hx = (box.hi[0] - box.lo[0]) / (nx - 1);
        double hy = (box.hi[1] - box.lo[1]) / (ny - 1);
        auto at = [&](int i, int j) { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)]; };
        double cx = std::clamp(x, box.lo[0], box.hi[0]);
        double cy = std::clamp(y, box.lo[1], box.hi[1]);
        double sx = (cx - box.lo[0]) / hx, sy = (cy - box.lo[1]) / hy;
        int i = std::min(static_cast<int>(sx), nx - 2);
        int j = std::min(static_cast<int>(sy), ny - 2);
        double wx = sx - i, wy = sy - j;
        double inside = (1 - wx) * (1 - wy) * at(i, j) + wx * (1 - wy) * at(i + 1, j) +
                        (1 - wx) * wy * at(i, j + 1) + wx * wy * at(i + 1, j + 1);
        if (cx == x && cy == y) return inside;
        // one-sided slopes at the clamped boundary node extend the table affinely
        int bi = static_cast<int>(std::round(sx)), bj = static_cast<int>(std::round(sy));
        double gx = bi == 0 ? (at(1, bj) - at(0, bj)) / hx
                            : bi == nx - 1 ? (at(nx - 1, bj) - at(nx - 2, bj)) / hx
                                           : (at(bi + 1, bj) - at(bi - 1, bj)) / (2 * hx);
        double gy = bj == 0 ? (at(bi, 1) - at(bi, 0)) / hy
                            : bj == ny - 1 ? (at(bi, ny - 1) - at(bi, ny - 2)) / hy
                                           : (at(bi, bj + 1) - at(bi, bj - 1)) / (2 * hy);
        return inside + gx * (x - cx) + gy * (y - cy);
    }
};

namespace detail {

// Lower hull of the points (xs[i], ys[i]) with xs strictly increasing;
// returns the hull value at every xs[i].
inline std::vector<double> lower_hull_values(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::size_t n = xs.size();
    std::vector<std::size_t> hull;
    auto cross = [&](std::size_t a, std::size_t b, std::size_t c) {
        return (xs[b] - xs[a]) * (ys[c] - ys[a]) - (ys[b] - ys[a]) * (xs[c] - xs[a]);
    };
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) <= 0.0) hull.pop_back();
        hull.push_back(i);
    }
    std::vector<double> out(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && xs[hull[seg + 1]] <= xs[i]) ++seg;
        if (hull[seg] == i) {
            out[i] = ys[i];
        } else {
            std::size_t a = hull[seg], b = hull[std::min(seg + 1, hull.size() - 1)];
            double w = (xs[i] - xs[a]) / (xs[b] - xs[a]);
            out[i] = (1.0 - w) * ys[a] + w * ys[b];
        }
    }
    return out;
}

// Discrete Legendre transform g(s) = max_i (s*x_i - f_i) over a slope list.
inline std::vector<double> legendre_1d(const std::vector<double>& xs, const std::vector<double>& fs,
                                       const std::vector<double>& slopes) {
    std::vector<double> out(slopes.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < slopes.size(); ++k) {
        double s = slopes[k];
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < xs.size(); ++i) best = std::max(best, s * xs[i] - fs[i]);
        out[k] = best;
    }
    return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return v;
}

}  // namespace detail

namespace detail {

inline void build_recession_and_sigma(EnvelopeTable& e) {
    e.directions = sample_directions(e.dim);
    e.recession_values.clear();
    auto ts = t_ladder();
    const double rel_tol = 1e-6;
    for (const auto& dir : e.directions) {
        std::vector<double> ratios;
        for (double t : ts) ratios.push_back(e.evaluate(t * dir) / t);
        std::size_t n = ratios.size();
        // Richardson removes the A/t tail of affine asymptotes; convergence is
        // judged on the extrapolated values at the two largest T
        double rich_prev = 2.0 * ratios[n - 2] - ratios[n - 3];
        double rich_last = 2.0 * ratios[n - 1] - ratios[n - 2];
        if (std::abs(rich_last - rich_prev) > rel_tol * (std::abs(rich_last) + 1.0))
            throw numerical_error("recession estimation did not converge along a direction");
        double rec = e.exact_recession ? e.exact_recession(dir) : rich_last;
        e.recession_values.push_back(rec);
    }
    // sigma(t) = sup over sampled |b|<=1 of |h_inf(b) - h(tb)/t|, running max from the right
    std::vector<double> radii = {0.25, 0.5, 0.75, 1.0};
    e.sigma.clear();
    for (double t : ts) {
        double s = 0.0;
        for (std::size_t k = 0; k < e.directions.size(); ++k) {
            for (double r : radii) {
                Vec b = r * e.directions[k];
                double hinf = r * e.recession_values[k];
                s = std::max(s, std::abs(e.evaluate(t * b) / t - hinf));
            }
            s = std::max(s, std::abs(e.evaluate(zeros(e.dim)) / t));  // b = 0
        }
        e.sigma.emplace_back(t, s);
    }
    for (std::size_t i = e.sigma.size(); i-- > 1;)
        e.sigma[i - 1].second = std::max(e.sigma[i - 1].second, e.sigma[i].second);
}

}  // namespace detail

// Lower convex envelope of f sampled on `box`, with the declared growth used
// to extend beyond the box. A declared closed-form envelope is used directly;
// the numeric hull is still computed (d <= 2) and the max deviation recorded
// as verification_residual.
inline EnvelopeTable convex_envelope(const FunctionModel& f, const BoxNd& box, int resolution) {
    const int d = box.dim();
    if (d != f.dimension) throw std::invalid_argument("box dimension does not match the model");
    if (d > 2 && !f.known_envelope)
        throw unsupported_dimension_error("numeric hulls are restricted to d <= 2; declare a closed-form envelope");

    EnvelopeTable e;
    e.dim = d;
    e.box = box;
    e.growth_upper = f.growth_upper;
    if (f.known_envelope) e.exact_envelope = f.known_envelope;
    if (f.known_recession) e.exact_recession = f.known_recession;

    auto check_growth_at = [&](const Vec& p, double y) {
        double nb = norm(p);
        double hi = f.growth_upper * (1.0 + nb) * (1.0 + 1e-12) + 1e-12;
        if (y > hi) throw hypothesis_error("sampled value violates the declared upper growth");
        if (f.growth_lower > 0.0 && y < f.growth_lower * nb - 1e-12 && nb > 0.0)
            throw hypothesis_error("sampled value violates the declared coercivity");
    };

    if (d <= 2) {
        int n = std::max(resolution, 9) | 1;  // odd, so 0 can be a node on symmetric boxes
        e.nodes_per_axis.assign(static_cast<std::size_t>(d), n);
        if (d == 1) {
            auto xs = detail::linspace(box.lo[0], box.hi[0], n);
            std::vector<double> fs(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                fs[i] = f(vec1(xs[i]));
                check_growth_at(vec1(xs[i]), fs[i]);
            }
            auto hull = detail::lower_hull_values(xs, fs);
            if (e.exact_envelope) {
                double res = 0.0;
                for (std::size_t i = 0; i < xs.size(); ++i) res = std::max(res, std::abs(hull[i] - e.exact_envelope(vec1(xs[i]))));
                e.verification_residual = res;
                for (std::size_t i = 0; i < xs.size(); ++i) hull[i] = e.exact_envelope(vec1(xs[i]));
            }
            e.values = hull;
        } else {
            auto xs = detail::linspace(box.lo[0], box.hi[0], n);
            auto ys = detail::linspace(box.lo[1], box.hi[1], n);
            std::vector<double> fv(xs.size() * ys.size());
            for (std::size_t i = 0; i < xs.size(); ++i)
                for (std::size_t j = 0; j < ys.size(); ++j) {
                    Vec p = vec2(xs[i], ys[j]);
                    fv[i * ys.size() + j] = f(p);
                    check_growth_at(p, fv[i * ys.size() + j]);
                }
            // biconjugate: slopes bounded by the upper growth constant
            double S = f.growth_upper * 1.5 + 1.0;
            auto slopes = detail::linspace(-S, S, 2 * n + 1);
            std::size_t ns = slopes.size();
            // conjugate in y for each x row
            std::vector<double> g(xs.size() * ns);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                std::vector<double> row(ys.size());
                for (std::size_t j = 0; j < ys.size(); ++j) row[j] = fv[i * ys.size() + j];
                auto gi = detail::legendre_1d(ys, row, slopes);
                for (std::size_t k = 0; k < ns; ++k) g[i * ns + k] = gi[k];
            }
            // conjugate in x: fstar(s1,s2) = max_i (s1*x_i + g_i(s2)) = legendre of -g
            std::vector<double> fstar(ns * ns);
            for (std::size_t k2 = 0; k2 < ns; ++k2) {
                std::vector<double> col(xs.size());
                for (std::size_t i = 0; i < xs.size(); ++i) col[i] = -g[i * ns + k2];
                auto fs1 = detail::legendre_1d(xs, col, slopes);
                for (std::size_t k1 = 0; k1 < ns; ++k1) fstar[k1 * ns + k2] = fs1[k1];
            }
            // back: f**(x,y) = max_s1 (s1 x + max_s2 (s2 y - fstar)), separable again
            std::vector<double> h(ns * ys.size());
            for (std::size_t k1 = 0; k1 < ns; ++k1) {
                std::vector<double> row(ns);
                for (std::size_t k2 = 0; k2 < ns; ++k2) row[k2] = fstar[k1 * ns + k2];
                auto hy = detail::legendre_1d(slopes, row, ys);
                for (std::size_t j = 0; j < ys.size(); ++j) h[k1 * ys.size() + j] = hy[j];
            }
            std::vector<double> hull(xs.size() * ys.size());
            for (std::size_t j = 0; j < ys.size(); ++j) {
                std::vector<double> col(ns);
                for (std::size_t k1 = 0; k1 < ns; ++k1) col[k1] = -h[k1 * ys.size() + j];
                auto hx = detail::legendre_1d(slopes, col, xs);
                for (std::size_t i = 0; i < xs.size(); ++i) hull[i * ys.size() + j] = hx[i];
            }
            if (e.exact_envelope) {
                double res = 0.0;
                for (std::size_t i = 0; i < xs.size(); ++i)
                    for (std::size_t j = 0; j < ys.size(); ++j)
                        res = std::max(res, std::abs(hull[i * ys.size() + j] - e.exact_envelope(vec2(xs[i], ys[j]))));
                e.verification_residual = res;
                for (std::size_t i = 0; i < xs.size(); ++i)
                    for (std::size_t j = 0; j < ys.size(); ++j) hull[i * ys.size() + j] = e.exact_envelope(vec2(xs[i], ys[j]));
            }
            e.values = hull;
        }
    } else {
        e.nodes_per_axis.assign(static_cast<std::size_t>(d), 2);
        e.values.clear();  // closed form only
    }

    detail::build_recession_and_sigma(e);
    return e;
}

// h^inf(b) = |b| * h^inf(b/|b|); recession(0) = 0 exactly.
inline double recession(const EnvelopeTable& e, const Vec& b) {
    double r = norm(b);
    if (r == 0.0) return 0.0;
    Vec dir = direction(b);
    if (e.exact_recession) return r * e.exact_recession(dir);
    if (e.dim == 1) return r * e.recession_values[dir[0] > 0 ? 0 : 1];
    // d = 2: interpolate linearly in angle between tabulated directions
    double th = std::atan2(dir[1], dir[0]);
    if (th < 0) th += 2.0 * M_PI;
    std::size_t nd = e.directions.size();
    double pos = th / (2.0 * M_PI) * static_cast<double>(nd);
    std::size_t k = static_cast<std::size_t>(pos) % nd;
    double w = pos - std::floor(pos);
    double v = (1.0 - w) * e.recession_values[k] + w * e.recession_values[(k + 1) % nd];
    return r * v;
}

// Envelope table whose pointwise values are themselves 1-homogeneous
// (used when integrating pure recession costs, e.g. inside cell problems).
inline EnvelopeTable recession_envelope(const EnvelopeTable& e) {
    EnvelopeTable r = e;
    r.exact_envelope = [e](const Vec& b) { return recession(e, b); };
    r.exact_recession = [e](const Vec& b) { return recession(e, b); };
    return r;
}

}  // namespace relaxkit
