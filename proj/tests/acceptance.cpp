// Acceptance suite: one test case per criterion, each printing a single
// [PASS]/[FAIL] line with the measured quantities.

#include <doctest.h>

#include <chrono>
#include <iostream>
#include <random>

#include "relaxkit/scenario.hpp"
#include "relaxkit/sequences.hpp"

using namespace relaxkit;

namespace {

struct Criterion {
    std::string label;
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }

    void finish() const {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << label;
        if (!detail.empty()) std::cout << " -- " << detail;
        std::cout << std::endl;
    }
};

struct Fixture {
    FunctionModel f1 = preset("example3_f1", 1);
    FunctionModel f2 = preset("abs", 1);
    FunctionModel W = preset("area", 1);
    EnvelopeTable f2env = convex_envelope(f2, BoxNd{vec1(-16.0), vec1(16.0)}, 257);
    EnvelopeTable Wenv = convex_envelope(W, BoxNd{vec1(-16.0), vec1(16.0)}, 257);
    double f1min = 1.0;
};

Fixture& fx() {
    static Fixture f;
    return f;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TEST_CASE("criterion 1: g reproduction for the example integrands") {
    auto t0 = std::chrono::steady_clock::now();
    Criterion c{"criterion 1: g(a,b) = |b| on the example grid (<= 1e-6, < 1s)"};
    double worst = 0.0;
    for (double a : {-2.0, -1.0, 0.0, 0.5, 1.0, 3.0}) {
        for (int bi = -5; bi <= 5; ++bi) {
            double b = bi;
            double g = g_density(fx().f1, fx().f2env, fx().f1min, vec1(a), vec1(b));
            worst = std::max(worst, std::abs(g - std::abs(b)));
        }
    }
    double dt = seconds_since(t0);
    c.detail = "max error " + std::to_string(worst) + ", " + std::to_string(dt) + "s";
    c.require(worst <= 1e-6, "error above 1e-6");
    c.require(dt < 1.0, "runtime above 1s");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 2: minimal-f1 shortcut g(a,b) = f1min f2**(b)") {
    Criterion c{"criterion 2: f1(a) = f1min implies g = f1min f2** (<= 1e-8)"};
    double worst = 0.0;
    for (const char* f2name : {"abs", "area", "doublewell_shifted"}) {
        auto f2 = preset(f2name, 1);
        auto env = convex_envelope(f2, BoxNd{vec1(-16.0), vec1(16.0)}, 513);
        for (const char* f1name : {"example3_f1", "const_one"}) {
            auto f1 = preset(f1name, 1);
            auto [f1min, argmin] = f1_minimum(f1);
            for (double b = -5.0; b <= 5.0; b += 0.5) {
                double g = g_density(f1, env, f1min, argmin, vec1(b));
                worst = std::max(worst, std::abs(g - f1min * env.evaluate(vec1(b))));
            }
        }
    }
    c.detail = "max deviation " + std::to_string(worst);
    c.require(worst <= 1e-8, "deviation above 1e-8");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 3: cell-formula degenerate cases") {
    Criterion c{"criterion 3: fW0(a,a,0) = 0 exactly; fW0(a+,a-,0) = Winf([u]) (<= 1e-6)"};
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double worst_zero = 0.0, worst_jump = 0.0;
    for (int t = 0; t < 20; ++t) {
        double a = U(rng);
        worst_zero = std::max(worst_zero,
                              std::abs(cell_fw0_scan(fx().f1, fx().f2env, fx().Wenv, vec1(a), vec1(a), vec1(0.0)).value));
        double ap = U(rng), am = U(rng);
        double got = cell_fw0_scan(fx().f1, fx().f2env, fx().Wenv, vec1(ap), vec1(am), vec1(0.0)).value;
        worst_jump = std::max(worst_jump, std::abs(got - std::abs(ap - am)));
    }
    c.detail = "fW0(a,a,0) max " + std::to_string(worst_zero) + ", jump-case max error " + std::to_string(worst_jump);
    c.require(worst_zero == 0.0, "fW0(a,a,0) not exactly zero");
    c.require(worst_jump <= 1e-6, "jump case above 1e-6");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 4: cell-solver oracle agreement") {
    auto t0 = std::chrono::steady_clock::now();
    Criterion c{"criterion 4: direct N=256 vs reduced scan within 2%, gap halves at N=512 (< 60s)"};
    struct Combo {
        const char *f1n, *f2n, *Wn;
    };
    std::vector<Combo> combos = {{"example3_f1", "abs", "area"},
                                 {"const_one", "doublewell_shifted", "area"},
                                 {"example3_f1", "area", "doublewell_shifted"}};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double worst_rel = 0.0;
    bool halving_ok = true;
    int halving_checked = 0;
    for (const auto& combo : combos) {
        auto f1 = preset(combo.f1n, 1);
        auto f2env = convex_envelope(preset(combo.f2n, 1), BoxNd{vec1(-16.0), vec1(16.0)}, 257);
        auto Wenv = convex_envelope(preset(combo.Wn, 1), BoxNd{vec1(-16.0), vec1(16.0)}, 257);
        for (int t = 0; t < 17; ++t) {
            Vec ap = vec1(U(rng)), am = vec1(U(rng)), b = vec1(2.0 * U(rng));
            auto sol = solve_cell_fw0(f1, f2env, Wenv, ap, am, b, 256);
            double rel = std::abs(sol.direct_value - sol.scan_value) / (std::abs(sol.scan_value) + 1e-12);
            worst_rel = std::max(worst_rel, rel);
            if (t % 8 == 0) {
                auto sol2 = solve_cell_fw0(f1, f2env, Wenv, ap, am, b, 512);
                double gap1 = std::abs(sol.direct_value - sol.scan_value);
                double gap2 = std::abs(sol2.direct_value - sol2.scan_value);
                double floor = 1e-8 * (std::abs(sol.scan_value) + 1.0);
                if (gap2 > std::max(0.5 * gap1, floor)) halving_ok = false;
                ++halving_checked;
            }
        }
    }
    double dt = seconds_since(t0);
    c.detail = "worst relative gap " + std::to_string(worst_rel) + ", halving checks " +
               std::to_string(halving_checked) + ", " + std::to_string(dt) + "s";
    c.require(worst_rel <= 0.02, "relative gap above 2%");
    c.require(halving_ok, "gap did not halve (or stay at the floor) when N doubled");
    c.require(dt < 60.0, "runtime above 60s");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 5: example 3 end to end on the unit square") {
    Criterion c{"criterion 5: minimizer family evaluates to |Omega| + 1 = 2; perturbations increase it"};
    auto f2env = fx().f2env;
    auto Wenv2 = convex_envelope(preset("area", 2), BoxNd{vec2(-16.0, -16.0), vec2(16.0, 16.0)}, 33);
    auto f1 = fx().f1;
    auto u1 = MeshField::constant(2, {17, 17, 1}, {0, 0, 0}, {1, 1, 0}, vec1(1.0));

    std::vector<double> totals;
    {  // dirac at (0.3, 0.3)
        auto v = NdMeasure::zero(2, 1, {16, 16, 1}, {0, 0, 0}, {1, 1, 0});
        v.atoms.push_back({{0.3, 0.3, 0}, vec1(1.0)});
        totals.push_back(evaluate_relaxed_nd(f1, f2env, Wenv2, 1.0, u1, v).total);
    }
    {  // dirac at (0.7, 0.7)
        auto v = NdMeasure::zero(2, 1, {16, 16, 1}, {0, 0, 0}, {1, 1, 0});
        v.atoms.push_back({{0.7, 0.7, 0}, vec1(1.0)});
        totals.push_back(evaluate_relaxed_nd(f1, f2env, Wenv2, 1.0, u1, v).total);
    }
    {  // uniform density of mass 1
        auto v = NdMeasure::zero(2, 1, {16, 16, 1}, {0, 0, 0}, {1, 1, 0});
        for (auto& x : v.ac) x = 1.0;
        totals.push_back(evaluate_relaxed_nd(f1, f2env, Wenv2, 1.0, u1, v).total);
    }
    {  // half-half atoms
        auto v = NdMeasure::zero(2, 1, {16, 16, 1}, {0, 0, 0}, {1, 1, 0});
        v.atoms.push_back({{0.3, 0.3, 0}, vec1(0.5)});
        v.atoms.push_back({{0.7, 0.7, 0}, vec1(0.5)});
        totals.push_back(evaluate_relaxed_nd(f1, f2env, Wenv2, 1.0, u1, v).total);
    }
    double tmin = *std::min_element(totals.begin(), totals.end());
    double tmax = *std::max_element(totals.begin(), totals.end());

    double total_overmass, total_tilt;
    {  // v(closure) = 1.2 != 1
        auto v = NdMeasure::zero(2, 1, {16, 16, 1}, {0, 0, 0}, {1, 1, 0});
        v.atoms.push_back({{0.5, 0.5, 0}, vec1(1.2)});
        total_overmass = evaluate_relaxed_nd(f1, f2env, Wenv2, 1.0, u1, v).total;
    }
    {  // u != 1 with the same mean: tilted plane 1 + 0.5(x - 1/2)
        auto u = MeshField::constant(2, {17, 17, 1}, {0, 0, 0}, {1, 1, 0}, vec1(1.0));
        std::array<int, 3> id = {0, 0, 0};
        for (int i = 0; i < u.node_count(); ++i) {
            double x = id[0] / 16.0;
            u.set_node(id, vec1(1.0 + 0.5 * (x - 0.5)));
            int a = 0;
            while (a < 2 && ++id[static_cast<std::size_t>(a)] == u.nodes[static_cast<std::size_t>(a)]) id[static_cast<std::size_t>(a++)] = 0;
        }
        auto v = NdMeasure::zero(2, 1, {16, 16, 1}, {0, 0, 0}, {1, 1, 0});
        v.atoms.push_back({{0.5, 0.5, 0}, vec1(1.0)});
        total_tilt = evaluate_relaxed_nd(f1, f2env, Wenv2, 1.0, u, v).total;
    }

    c.detail = "minimizer totals in [" + std::to_string(tmin) + ", " + std::to_string(tmax) + "], overmass " +
               std::to_string(total_overmass) + ", tilted " + std::to_string(total_tilt);
    c.require(tmax - tmin <= 1e-8, "spread across minimizers above 1e-8");
    c.require(std::abs(tmin - 2.0) <= 1e-8, "total differs from |Omega| + 1 = 2");
    c.require(total_overmass > 2.0 + 1e-6, "overmass perturbation did not increase the energy");
    c.require(total_tilt > 2.0 + 1e-6, "tilted-u perturbation did not increase the energy");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 6: recovery-sequence convergence for the 1-d jump fixture") {
    auto t0 = std::chrono::steady_clock::now();
    Criterion c{"criterion 6: pasted energies converge monotonically to within 5% (< 30s)"};
    auto u = BV1D::constant({0.0, 1.0}, vec1(1.0));
    auto v = Measure1D::zero({0.0, 1.0}, 1);
    v.atoms.push_back({0.5, vec1(10.0)});
    auto cell = solve_cell_fw0(fx().f1, fx().f2env, fx().Wenv, vec1(1.0), vec1(1.0), vec1(10.0), 256);
    double relaxed = evaluate_relaxed_1d(fx().f1, fx().f2env, fx().Wenv, fx().f1min, u, v).total;

    std::vector<double> gaps;
    for (int e = 2; e <= 7; ++e) {
        auto sp = build_recovery_1d_jump(u, v, 0.5, std::ldexp(1.0, -e), cell, fx().f1, fx().f2, fx().W);
        gaps.push_back(std::abs(sp.energy - relaxed));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i)
        if (gaps[i] > gaps[i - 1] + 1e-12) monotone = false;
    double dt = seconds_since(t0);
    c.detail = "relaxed " + std::to_string(relaxed) + ", final gap " + std::to_string(gaps.back()) + " (" +
               std::to_string(100.0 * gaps.back() / relaxed) + "%), " + std::to_string(dt) + "s";
    c.require(gaps.back() <= 0.05 * relaxed, "final gap above 5%");
    c.require(monotone, "gaps not monotonically improving");
    c.require(dt < 30.0, "runtime above 30s");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 7: forced concentration beats every mollification-only generator") {
    Criterion c{"criterion 7: spike recovery margin >= 0.1 and classified purely concentrating"};
    auto f1 = fx().f1;
    auto f2 = fx().f2;
    auto W2 = preset("area", 2);
    auto f2env = fx().f2env;

    auto u = MeshField::constant(2, {17, 17, 1}, {0, 0, 0}, {1, 1, 0}, vec1(1.0));
    auto v = NdMeasure::zero(2, 1, {16, 16, 1}, {0, 0, 0}, {1, 1, 0});
    v.atoms.push_back({{0.5, 0.5, 0}, vec1(1.0)});

    std::vector<SequencePairNd> ladder;
    for (int e = 13; e <= 18; ++e)
        ladder.push_back(build_recovery_nd(f1, f2, W2, f2env, 1.0, u, v, 1e-6, 1e-6, std::ldexp(1.0, -e)));
    double spike_energy = ladder.back().energy;

    double best_moll = std::numeric_limits<double>::infinity();
    for (int j = 2; j <= 6; ++j) {  // piecewise-constant interpolations at dyadic scales
        auto vj = interpolate_Ij_nd(v, j);
        std::array<int, 3> fnodes = {vj.cells[0] + 1, vj.cells[1] + 1, 1};
        auto uj = MeshField::constant(2, fnodes, u.lo, u.hi, vec1(1.0));
        best_moll = std::min(best_moll, original_energy_nd(f1, f2, W2, uj, vj));
    }
    for (double width : {0.2, 0.1, 0.05}) {  // triangular-kernel mollifiers
        auto vw = mollify_tent_nd(v, width, 128);
        auto uw = MeshField::constant(2, {129, 129, 1}, u.lo, u.hi, vec1(1.0));
        best_moll = std::min(best_moll, original_energy_nd(f1, f2, W2, uw, vw));
    }
    auto det = concentration_detector_nd(ladder, {1.0, 16.0, 256.0});

    double margin = best_moll - spike_energy;
    c.detail = "spike " + std::to_string(spike_energy) + ", best mollified " + std::to_string(best_moll) +
               ", margin " + std::to_string(margin);
    c.require(margin >= 0.1, "margin below 0.1");
    c.require(det.purely_concentrating, "spike ladder not classified purely concentrating");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 8: interpolation and concentration lemma invariants") {
    Criterion c{"criterion 8: exact mass conservation, I_j bounds on 100 random measures, exact idempotence"};
    // dyadic spike fixture: exact conservation of the variation
    Measure1D lebesgue = Measure1D::zero({0.0, 1.0}, 1, 16);
    for (int cc = 0; cc < 16; ++cc) lebesgue.ac.set_cell(cc, vec1(1.0));
    bool exact_mass = true;
    for (int ell : {2, 4, 8}) {
        auto spikes = concentrate_measure(lebesgue, 1.0 / 64.0, ell);
        if (spikes.mass_norm() != 1.0) exact_mass = false;
    }

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::uniform_real_distribution<double> P(0.0, 1.0);
    bool bounds_ok = true, idempotent = true, no_loss = true;
    for (int trial = 0; trial < 100; ++trial) {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1, 16);
        bool nonneg = trial % 2 == 0;
        for (int cc = 0; cc < 16; ++cc) m.ac.set_cell(cc, vec1(nonneg ? std::abs(U(rng)) : U(rng)));
        if (P(rng) > 0.25) m.atoms.push_back({0.0, vec1(nonneg ? 1.5 : U(rng) + 2.5)});
        if (P(rng) > 0.25) m.atoms.push_back({1.0, vec1(nonneg ? 0.5 : U(rng) + 2.5)});
        if (P(rng) > 0.5) m.atoms.push_back({0.21 + 0.5 * P(rng), vec1(nonneg ? 1.0 : U(rng) + 2.5)});
        int j = 2 + trial % 5;
        auto g = interpolate_Ij(m, j);
        if (g.total_variation() > m.total_variation() + 1e-12) bounds_ok = false;
        double area_g = 0.0, area_m = 0.0;
        double h = g.cell_width(), mh = m.ac.cell_width();
        for (int cc = 0; cc < g.cells(); ++cc) area_g += std::sqrt(1.0 + dot(g.cell_value(cc), g.cell_value(cc))) * h;
        for (int cc = 0; cc < m.ac.cells(); ++cc)
            area_m += std::sqrt(1.0 + dot(m.ac.cell_value(cc), m.ac.cell_value(cc))) * mh;
        for (const auto& a : m.atoms) area_m += norm(a.weight);
        if (area_g > area_m + 1e-12) bounds_ok = false;
        auto twice = interpolate_Ij(grid_as_measure(g), j);
        if (twice.data != g.data) idempotent = false;
        if (nonneg && std::abs(g.integral()[0] - m.total()[0]) > 1e-12) no_loss = false;
    }
    c.detail = std::string("exact mass: ") + (exact_mass ? "yes" : "no");
    c.require(exact_mass, "spike mass conservation not exact on the dyadic fixture");
    c.require(bounds_ok, "an I_j contraction bound failed");
    c.require(idempotent, "I_j idempotence not exact");
    c.require(no_loss, "boundary mass lost for a nonnegative measure");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 9: growth bound for the relaxed total") {
    Criterion c{"criterion 9: total <= beta (|Omega| + |Du| + |v|) on 100 random fixtures"};
    double beta = growth_bound_beta(fx().f1, fx().f2, fx().W);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::uniform_real_distribution<double> P(0.0, 1.0);
    bool ok = true;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        BV1D u = BV1D::constant({0.0, 1.0}, vec1(U(rng)), 8);
        for (int cc = 0; cc < 8; ++cc) u.slope.set_cell(cc, vec1(2.0 * U(rng)));
        if (P(rng) > 0.4) {
            double jx = 0.03125 + 0.9 * P(rng);
            u.jumps.push_back({jx, u.trace(jx, Side::left), u.trace(jx, Side::left) + vec1(U(rng) + 2.5)});
        }
        if (P(rng) > 0.7) u.cantor = cantor_quadrature(0.955, 0.985, 4, vec1(1.0), P(rng));
        Measure1D v = Measure1D::zero({0.0, 1.0}, 1, 8);
        for (int cc = 0; cc < 8; ++cc) v.ac.set_cell(cc, vec1(2.0 * U(rng)));
        if (P(rng) > 0.4) v.atoms.push_back({0.0078125 + 0.9 * P(rng), vec1(U(rng) + 2.5)});
        if (P(rng) > 0.7) v.atoms.push_back({0.0, vec1(1.0)});
        auto rep = evaluate_relaxed_1d(fx().f1, fx().f2env, fx().Wenv, fx().f1min, u, v);
        double bound = beta * (1.0 + total_variation(u) + v.total_variation());
        worst_ratio = std::max(worst_ratio, rep.total / bound);
        if (rep.total > bound + 1e-9) ok = false;
    }
    c.detail = "beta " + std::to_string(beta) + ", worst total/bound " + std::to_string(worst_ratio);
    c.require(ok, "growth bound violated");
    c.finish();
    CHECK(c.ok);
}

TEST_CASE("criterion 10: property suites with zero violations") {
    Criterion c{"criterion 10: dominance/idempotence, homogeneity, g convexity (1e4 triples), report sums"};
    int violations = 0;

    // envelope dominance + idempotence on the numeric double-well hull
    auto dw = preset("doublewell_shifted", 1);
    dw.known_envelope = nullptr;
    dw.known_recession = nullptr;
    auto e1 = convex_envelope(dw, BoxNd{vec1(-8.0), vec1(8.0)}, 257);
    for (int i = 0; i < 257; ++i) {
        double x = e1.node_coord(0, i);
        if (e1.values[static_cast<std::size_t>(i)] > dw(vec1(x)) + 1e-12) ++violations;
    }
    FunctionModel hull_fn;
    hull_fn.dimension = 1;
    hull_fn.eval = [&](const Vec& b) { return e1.evaluate(b); };
    hull_fn.growth_lower = dw.growth_lower;
    hull_fn.growth_upper = dw.growth_upper;
    auto e2 = convex_envelope(hull_fn, BoxNd{vec1(-8.0), vec1(8.0)}, 257);
    for (std::size_t i = 0; i < e1.values.size(); ++i)
        if (std::abs(e1.values[i] - e2.values[i]) > 1e-11) ++violations;

    // recession homogeneity, dyadic scalings exact
    for (double b : {-3.0, -1.1, 0.4, 2.7}) {
        for (double lam : {0.25, 0.5, 2.0, 8.0}) {
            if (recession(e1, vec1(lam * b)) != lam * recession(e1, vec1(b))) ++violations;
        }
    }

    // g midpoint convexity on 1e4 sampled triples
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    auto area_env = convex_envelope(preset("area", 1), BoxNd{vec1(-16.0), vec1(16.0)}, 257);
    for (int t = 0; t < 10000; ++t) {
        double a = 0.5 * U(rng), b1 = U(rng), b2 = U(rng);
        const EnvelopeTable& env = (t % 2 == 0) ? fx().f2env : area_env;
        double ga = g_density(fx().f1, env, fx().f1min, vec1(a), vec1(b1));
        double gb = g_density(fx().f1, env, fx().f1min, vec1(a), vec1(b2));
        double gm = g_density(fx().f1, env, fx().f1min, vec1(a), vec1(0.5 * (b1 + b2)));
        if (gm > 0.5 * (ga + gb) + 1e-7 * (1.0 + std::abs(ga) + std::abs(gb))) ++violations;
    }

    // report sum consistency across assorted evaluations
    std::uniform_real_distribution<double> V(-1.5, 1.5);
    for (int t = 0; t < 25; ++t) {
        BV1D u = BV1D::constant({0.0, 1.0}, vec1(V(rng)), 8);
        for (int cc = 0; cc < 8; ++cc) u.slope.set_cell(cc, vec1(V(rng)));
        double jx = 0.2 + 0.6 * (t / 25.0);
        u.jumps.push_back({jx, u.trace(jx, Side::left), u.trace(jx, Side::left) + vec1(1.0 + t * 0.1)});
        Measure1D v = Measure1D::zero({0.0, 1.0}, 1, 8);
        for (int cc = 0; cc < 8; ++cc) v.ac.set_cell(cc, vec1(V(rng)));
        v.atoms.push_back({0.84375, vec1(1.0)});
        auto rep = evaluate_relaxed_1d(fx().f1, fx().f2env, fx().Wenv, fx().f1min, u, v);
        if (std::abs(rep.total - rep.parts_sum()) > 1e-12 * std::max(1.0, std::abs(rep.total))) ++violations;
    }

    c.detail = std::to_string(violations) + " violations";
    c.require(violations == 0, "property violations found");
    c.finish();
    CHECK(c.ok);
}
