#pragma once

// Small dense vectors, intervals and grid functions shared across the library.
// Dimensions are tiny (1-4 components), so std::vector value semantics are fine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace relaxkit {

using Vec = std::vector<double>;

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct hypothesis_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct representation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct unsupported_dimension_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct document_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Vec vec1(double x) { return Vec{x}; }
inline Vec vec2(double x, double y) { return Vec{x, y}; }

inline Vec zeros(int n) { return Vec(static_cast<std::size_t>(n), 0.0); }

inline double norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double t, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = t * a[i];
    return r;
}

inline Vec operator-(const Vec& a) { return -1.0 * a; }

inline bool is_zero(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

// Unit direction of v; zero vectors have no direction.
inline Vec direction(const Vec& v) {
    double n = norm(v);
    if (n == 0.0) throw std::invalid_argument("direction of zero vector");
    Vec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] / n;
    return r;
}

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    bool contains_open(double x) const { return x > lo && x < hi; }
};

// Axis-aligned box in R^d.
struct BoxNd {
    Vec lo;
    Vec hi;

    int dim() const { return static_cast<int>(lo.size()); }
};

// Piecewise-constant vector-valued function on a uniform mesh over (lo, hi).
// Cell counts are powers of two by convention (grid alignment with the
// dyadic interpolation operators); this is not enforced for intermediates.
struct GridFn {
    double lo = 0.0;
    double hi = 1.0;
    int dim = 1;
    std::vector<double> data;  // cell-major, `dim` components per cell

    int cells() const { return dim > 0 ? static_cast<int>(data.size()) / dim : 0; }
    double cell_width() const { return (hi - lo) / std::max(1, cells()); }

    Vec cell_value(int c) const {
        Vec v(static_cast<std::size_t>(dim));
        for (int k = 0; k < dim; ++k) v[static_cast<std::size_t>(k)] = data[static_cast<std::size_t>(c * dim + k)];
        return v;
    }

    void set_cell(int c, const Vec& v) {
        for (int k = 0; k < dim; ++k) data[static_cast<std::size_t>(c * dim + k)] = v[static_cast<std::size_t>(k)];
    }

    int cell_of(double x) const {
        int n = cells();
        int c = static_cast<int>(std::floor((x - lo) / (hi - lo) * n));
        return std::clamp(c, 0, n - 1);
    }

    Vec value_at(double x) const { return cell_value(cell_of(x)); }

    double cell_midpoint(int c) const { return lo + (c + 0.5) * cell_width(); }

    // Integral of the |.|-norm of the density.
    double total_variation() const {
        double s = 0.0;
        double h = cell_width();
        for (int c = 0; c < cells(); ++c) s += norm(cell_value(c)) * h;
        return s;
    }

    Vec integral() const {
        Vec s = zeros(dim);
        double h = cell_width();
        for (int c = 0; c < cells(); ++c) {
            for (int k = 0; k < dim; ++k) s[static_cast<std::size_t>(k)] += data[static_cast<std::size_t>(c * dim + k)] * h;
        }
        return s;
    }

    static GridFn zero(double lo, double hi, int cells, int dim) {
        GridFn g;
        g.lo = lo;
        g.hi = hi;
        g.dim = dim;
        g.data.assign(static_cast<std::size_t>(cells) * static_cast<std::size_t>(dim), 0.0);
        return g;
    }

    static GridFn constant(double lo, double hi, int cells, const Vec& v) {
        GridFn g = zero(lo, hi, cells, static_cast<int>(v.size()));
        for (int c = 0; c < cells; ++c) g.set_cell(c, v);
        return g;
    }
};

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p *= 2;
    return p;
}

}  // namespace relaxkit
