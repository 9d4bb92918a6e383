#pragma once

// Integrand models and the (H1)-(H3) growth checks.
//
// A FunctionModel wraps one of the three integrands of the coupled energy
//   F(u,v) = \int f1(u) f2(v) dx + \int W(grad u) dx
// together with its declared growth constants:
//   f1-role:  C1 <= f1 <= C2           (bounded, positive)
//   f2-role:  |b|/K <= f2(b) <= K(1+|b|)   (positive linear growth)
//   W-role:   |xi|/kappa <= W(xi) <= kappa(1+|xi|)
// Presets additionally carry closed-form envelopes/recessions when known.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "relaxkit/vec.hpp"

namespace relaxkit {

enum class Role { f1, f2, W };

enum class ModelKind { closed_form_preset, sampled_grid };

struct FunctionModel {
    ModelKind kind = ModelKind::closed_form_preset;
    int dimension = 1;  // domain R^d (W-role: d = m*n, matrix flattened row-major)
    std::function<double(const Vec&)> eval;
    double growth_lower = 1.0;  // f1: C1, f2/W: coercivity slope (f >= lower*|b|)
    double growth_upper = 1.0;  // f1: C2, f2/W: f <= upper*(1+|b|)
    std::function<double(const Vec&)> known_envelope;   // null if unknown
    std::function<double(const Vec&)> known_recession;  // null if unknown
    std::optional<double> known_min;                    // inf f (f1 role)
    std::optional<Vec> known_argmin;
    double scan_radius = 8.0;  // box radius for numeric infima/growth sampling
    std::string name;

    double operator()(const Vec& x) const { return eval(x); }
};

struct GrowthReport {
    bool pass = false;
    Role role = Role::f2;
    double observed_min = 0.0;   // f1: tightest C1
    double observed_max = 0.0;   // f1: tightest C2
    double tight_constant = 0.0; // f2: K, W: kappa
    std::vector<std::string> violations;
};

namespace detail {

inline std::vector<Vec> sample_directions(int d) {
    std::vector<Vec> dirs;
    if (d == 1) {
        dirs.push_back(vec1(1.0));
        dirs.push_back(vec1(-1.0));
    } else {
        int count = d == 2 ? 16 : 2 * d + 8;
        for (int k = 0; k < count; ++k) {
            Vec v(static_cast<std::size_t>(d));
            if (d == 2) {
                double th = 2.0 * M_PI * k / count;
                v[0] = std::cos(th);
                v[1] = std::sin(th);
            } else {
                // deterministic low-discrepancy-ish directions
                double s = 0.0;
                for (int i = 0; i < d; ++i) {
                    v[static_cast<std::size_t>(i)] = std::cos(1.0 + 0.7318 * (k + 1) * (i + 1));
                    s += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
                }
                s = std::sqrt(s);
                for (auto& x : v) x /= s;
            }
            dirs.push_back(v);
        }
    }
    return dirs;
}

inline std::vector<double> t_ladder() {
    std::vector<double> ts;
    for (int e = 4; e <= 20; ++e) ts.push_back(std::ldexp(1.0, e));
    return ts;
}

}  // namespace detail

// Samples the box [-R,R]^d plus tail rays and reports pass/fail with the
// tightest observed constants. Failures are reported, never thrown.
inline GrowthReport check_growth(const FunctionModel& f, Role role, int sample_count) {
    GrowthReport rep;
    rep.role = role;
    int d = f.dimension;
    double R = f.scan_radius;

    std::vector<Vec> pts;
    if (d == 1) {
        int n = std::max(sample_count, 9);
        for (int i = 0; i < n; ++i) pts.push_back(vec1(-R + 2.0 * R * i / (n - 1)));
    } else {
        int n = std::max(3, static_cast<int>(std::round(std::pow(double(sample_count), 1.0 / d))));
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        for (;;) {
            Vec p(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) p[static_cast<std::size_t>(k)] = -R + 2.0 * R * idx[static_cast<std::size_t>(k)] / (n - 1);
            pts.push_back(p);
            int k = 0;
            while (k < d && ++idx[static_cast<std::size_t>(k)] == n) idx[static_cast<std::size_t>(k++)] = 0;
            if (k == d) break;
        }
    }
    if (std::none_of(pts.begin(), pts.end(), is_zero)) pts.push_back(zeros(d));

    auto dirs = detail::sample_directions(d);
    auto ts = detail::t_ladder();

    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -vmin;
    for (const auto& p : pts) {
        double y = f(p);
        vmin = std::min(vmin, y);
        vmax = std::max(vmax, y);
    }

    if (role == Role::f1) {
        // tail must stay bounded
        double tail_lo = vmin, tail_hi = vmax;
        bool unbounded = false;
        for (const auto& dir : dirs) {
            double prev = 0.0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                double y = f(ts[i] * dir);
                tail_lo = std::min(tail_lo, y);
                tail_hi = std::max(tail_hi, y);
                if (i + 4 < ts.size()) prev = y;
                if (i == ts.size() - 1 && y > prev * 1.2 + 1e-9) unbounded = true;
            }
        }
        rep.observed_min = std::min(vmin, tail_lo);
        rep.observed_max = std::max(vmax, tail_hi);
        if (rep.observed_min <= 0.0) rep.violations.push_back("(H1) requires a positive lower bound; observed inf <= 0");
        if (unbounded) rep.violations.push_back("(H1) requires boundedness; values grow along tail rays");
        rep.pass = rep.violations.empty();
        return rep;
    }

    const char* hyp = role == Role::f2 ? "(H2)" : "(H3)";
    double k_lower = 0.0;  // sup |b|/f(b):      f >= |b|/K
    double k_upper = 0.0;  // sup f(b)/(1+|b|):  f <= K(1+|b|)
    for (const auto& p : pts) {
        double y = f(p);
        double nb = norm(p);
        if (y < 0.0 || (y == 0.0 && nb > 0.0)) {
            rep.violations.push_back(std::string(hyp) + " violated: nonpositive value at a nonzero point");
            rep.pass = false;
            return rep;
        }
        if (nb > 0.0) k_lower = std::max(k_lower, nb / y);
        k_upper = std::max(k_upper, y / (1.0 + nb));
    }
    bool superlinear = false, sublinear = false;
    for (const auto& dir : dirs) {
        double q_mid = 0.0, q_end = 0.0, r_mid = 0.0, r_end = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            double t = ts[i];
            double y = f(t * dir);
            if (y <= 0.0) {
                rep.violations.push_back(std::string(hyp) + " violated: nonpositive value on a tail ray");
                rep.pass = false;
                return rep;
            }
            k_lower = std::max(k_lower, t / y);
            k_upper = std::max(k_upper, y / (1.0 + t));
            double q = y / (1.0 + t);  // superlinear detector
            double r = y / t;          // sublinear detector
            if (ts[i] == std::ldexp(1.0, 12)) { q_mid = q; r_mid = r; }
            if (i == ts.size() - 1) { q_end = q; r_end = r; }
        }
        if (q_end > 2.0 * q_mid + 1e-12) superlinear = true;
        if (r_end < 0.5 * r_mid) sublinear = true;
    }
    if (superlinear) rep.violations.push_back(std::string(hyp) + " violated: superlinear upper tail");
    if (sublinear) rep.violations.push_back(std::string(hyp) + " violated: sublinear coercivity tail");
    rep.tight_constant = std::max({k_lower, k_upper, 1e-300});
    rep.observed_min = vmin;
    rep.observed_max = vmax;
    rep.pass = rep.violations.empty();
    return rep;
}

// Global infimum of an f1-role model: preset value when known, otherwise a
// grid scan over [-R,R]^m with three refinement rounds.
inline std::pair<double, Vec> f1_minimum(const FunctionModel& f) {
    if (f.known_min && f.known_argmin) return {*f.known_min, *f.known_argmin};
    int d = f.dimension;
    double R = f.scan_radius;
    Vec center = zeros(d);
    double half = R;
    double best = std::numeric_limits<double>::infinity();
    Vec argbest = center;
    for (int round = 0; round < 4; ++round) {
        int n = 33;
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        for (;;) {
            Vec p(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k)
                p[static_cast<std::size_t>(k)] = center[static_cast<std::size_t>(k)] - half + 2.0 * half * idx[static_cast<std::size_t>(k)] / (n - 1);
            double y = f(p);
            if (y < best) {
                best = y;
                argbest = p;
            }
            int k = 0;
            while (k < d && ++idx[static_cast<std::size_t>(k)] == n) idx[static_cast<std::size_t>(k++)] = 0;
            if (k == d) break;
        }
        center = argbest;
        half /= 4.0;
    }
    return {best, argbest};
}

// beta such that the relaxed energy is bounded by beta*(L^1(A) + |Du|(A) + |v|(A)).
inline double growth_bound_beta(const FunctionModel& f1, const FunctionModel& f2, const FunctionModel& W) {
    double C2 = f1.growth_upper;
    double K = std::max(f2.growth_upper, f2.growth_lower > 0 ? 1.0 / f2.growth_lower : 1.0);
    double kappa = std::max(W.growth_upper, W.growth_lower > 0 ? 1.0 / W.growth_lower : 1.0);
    return C2 * K + kappa;
}

// ---------------------------------------------------------------------------
// Preset registry

namespace detail {

inline FunctionModel make_abs(int d) {
    FunctionModel m;
    m.dimension = d;
    m.eval = [](const Vec& b) { return norm(b); };
    m.growth_lower = 1.0;
    m.growth_upper = 1.0;
    m.known_envelope = m.eval;
    m.known_recession = m.eval;
    m.name = "abs";
    return m;
}

inline FunctionModel make_area(int d) {
    FunctionModel m;
    m.dimension = d;
    m.eval = [](const Vec& b) { return std::sqrt(1.0 + dot(b, b)); };
    m.growth_lower = 1.0;
    m.growth_upper = 1.0;
    m.known_envelope = m.eval;
    m.known_recession = [](const Vec& b) { return norm(b); };
    m.name = "area";
    return m;
}

inline FunctionModel make_example3_f1(int d) {
    FunctionModel m;
    m.dimension = d;
    m.eval = [](const Vec& a) { return 2.0 - std::exp(-dot(a, a)); };
    m.growth_lower = 1.0;  // C1
    m.growth_upper = 2.0;  // C2
    m.known_min = 1.0;
    m.known_argmin = zeros(d);
    m.name = "example3_f1";
    return m;
}

inline FunctionModel make_const_one(int d) {
    FunctionModel m;
    m.dimension = d;
    m.eval = [](const Vec&) { return 1.0; };
    m.growth_lower = 1.0;
    m.growth_upper = 1.0;
    m.known_min = 1.0;
    m.known_argmin = zeros(d);
    m.name = "const_one";
    return m;
}

// Two shifted wells min(|b-e1|,|b+e1|)+1; convex envelope is max(|b|,1).
inline FunctionModel make_doublewell_shifted(int d) {
    FunctionModel m;
    m.dimension = d;
    m.eval = [d](const Vec& b) {
        Vec e1 = zeros(d);
        e1[0] = 1.0;
        return std::min(norm(b - e1), norm(b + e1)) + 1.0;
    };
    m.growth_lower = 0.5;  // f >= |b|/2
    m.growth_upper = 2.0;
    m.known_envelope = [](const Vec& b) { return std::max(norm(b), 1.0); };
    m.known_recession = [](const Vec& b) { return norm(b); };
    m.name = "doublewell_shifted";
    return m;
}

// Deliberately superlinear; registered so validation rejections can be exercised.
inline FunctionModel make_quadratic(int d) {
    FunctionModel m;
    m.dimension = d;
    m.eval = [](const Vec& b) { return dot(b, b); };
    m.growth_lower = 1.0;
    m.growth_upper = 1.0;
    m.name = "quadratic";
    return m;
}

inline FunctionModel load_sampled_preset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw document_error("cannot open preset file: " + path.string());
    FunctionModel m;
    m.kind = ModelKind::sampled_grid;
    m.name = path.stem().string();
    double lo = -4.0, hi = 4.0;
    std::vector<double> samples;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        if (key == "name") ls >> m.name;
        else if (key == "dim") ls >> m.dimension;
        else if (key == "growth") ls >> m.growth_lower >> m.growth_upper;
        else if (key == "box") ls >> lo >> hi;
        else if (key == "samples") {
            int n = 0;
            ls >> n;
            samples.reserve(static_cast<std::size_t>(n));
            double v;
            while (static_cast<int>(samples.size()) < n && in >> v) samples.push_back(v);
        }
    }
    if (m.dimension != 1 || samples.size() < 2) throw document_error("sampled presets are 1-d with >= 2 samples: " + path.string());
    double h = (hi - lo) / (static_cast<double>(samples.size()) - 1.0);
    m.eval = [lo, hi, h, samples](const Vec& b) {
        double x = b[0];
        std::size_t n = samples.size();
        if (x <= lo) return samples[0] + (samples[1] - samples[0]) / h * (x - lo);
        if (x >= hi) return samples[n - 1] + (samples[n - 1] - samples[n - 2]) / h * (x - hi);
        double s = (x - lo) / h;
        std::size_t i = std::min(static_cast<std::size_t>(s), n - 2);
        double w = s - static_cast<double>(i);
        return (1.0 - w) * samples[i] + w * samples[i + 1];
    };
    return m;
}

}  // namespace detail

inline std::vector<std::string> builtin_preset_names() {
    return {"abs", "area", "example3_f1", "const_one", "doublewell_shifted", "quadratic"};
}

inline std::vector<std::string> preset_names() {
    auto names = builtin_preset_names();
    if (const char* env = std::getenv("RELAXKIT_PRESET_PATH")) {
        std::istringstream ss(env);
        std::string dir;
        while (std::getline(ss, dir, ':')) {
            std::error_code ec;
            for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
                if (e.path().extension() == ".preset") names.push_back(e.path().stem().string());
            }
        }
    }
    return names;
}

inline FunctionModel preset(const std::string& name, int dimension = 1) {
    if (name == "abs") return detail::make_abs(dimension);
    if (name == "area") return detail::make_area(dimension);
    if (name == "example3_f1") return detail::make_example3_f1(dimension);
    if (name == "const_one") return detail::make_const_one(dimension);
    if (name == "doublewell_shifted") return detail::make_doublewell_shifted(dimension);
    if (name == "quadratic") return detail::make_quadratic(dimension);
    if (const char* env = std::getenv("RELAXKIT_PRESET_PATH")) {
        std::istringstream ss(env);
        std::string dir;
        while (std::getline(ss, dir, ':')) {
            auto p = std::filesystem::path(dir) / (name + ".preset");
            if (std::filesystem::exists(p)) return detail::load_sampled_preset(p);
        }
    }
    throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace relaxkit
