#include <doctest.h>

#include "relaxkit/document.hpp"
#include "relaxkit/measure1d.hpp"

using namespace relaxkit;

namespace {

Measure1D unit_atom(double x, Interval iv = {0.0, 1.0}) {
    Measure1D m = Measure1D::zero(iv, 1);
    m.atoms.push_back({x, vec1(1.0)});
    return m;
}

}  // namespace

TEST_CASE("lebesgue decomposition splits ac from atoms and quadratures") {
    SUBCASE("a unit atom is purely singular") {
        auto m = unit_atom(0.5);
        auto [a, s] = lebesgue_decompose(m);
        CHECK(a.total_variation() == 0.0);
        CHECK(s.total_variation() == doctest::Approx(1.0));
        CHECK(s.atoms.size() == 1);
    }
    SUBCASE("density plus atom") {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1, 8);
        for (int c = 0; c < 8; ++c) m.ac.set_cell(c, vec1(1.0));
        m.atoms.push_back({0.3, vec1(2.0)});
        auto [a, s] = lebesgue_decompose(m);
        CHECK(a.total_variation() == doctest::Approx(1.0));
        CHECK(a.atoms.empty());
        CHECK(s.atoms.size() == 1);
        CHECK(s.atoms[0].weight[0] == 2.0);
        // round trip: re-summing reproduces the original field by field
        auto back = measure_sum(a, s);
        CHECK(back.total_variation() == doctest::Approx(m.total_variation()));
        CHECK(back.atoms.size() == m.atoms.size());
        CHECK(back.ac.data == m.ac.data);
    }
    SUBCASE("level-8 Cantor quadrature is purely singular with mass 1") {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1);
        m.singular = cantor_quadrature(0.0, 1.0, 8, vec1(1.0));
        CHECK(m.singular.size() == 256);
        double mass = 0.0;
        for (const auto& n : m.singular) mass += n.mass;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
        auto [a, s] = lebesgue_decompose(m);
        CHECK(a.total_variation() == 0.0);
        CHECK(s.total_variation() == doctest::Approx(1.0));
    }
}

TEST_CASE("atomic decomposition: atoms against the diffuse rest") {
    SUBCASE("atom plus density") {
        Measure1D m = Measure1D::zero({0.0, 2.0}, 1, 8);
        for (int c = 0; c < 8; ++c) m.ac.set_cell(c, vec1(1.0));
        m.atoms.push_back({1.0, vec1(1.0)});
        auto split = atomic_decompose(m);
        CHECK(split.atomic.atoms.size() == 1);
        CHECK(split.atomic.total_variation() == doctest::Approx(1.0));
        CHECK(split.diffuse.atoms.empty());
        CHECK(split.diffuse.total_variation() == doctest::Approx(2.0));
        CHECK(split.s0 == std::vector<double>{1.0});
    }
    SUBCASE("no atoms gives a zero atomic part") {
        auto split = atomic_decompose(Measure1D::zero({0.0, 1.0}, 1));
        CHECK(split.atomic.total_variation() == 0.0);
        CHECK(split.s0.empty());
    }
    SUBCASE("three atoms recover S0") {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1);
        m.atoms.push_back({0.2, vec1(1.0)});
        m.atoms.push_back({0.5, vec1(0.5)});
        m.atoms.push_back({0.8, vec1(1.0 / 3.0)});
        auto split = atomic_decompose(m);
        CHECK(split.atomic.atoms.size() == 3);
        CHECK(split.diffuse.total_variation() == 0.0);
        CHECK(split.s0 == std::vector<double>{0.2, 0.5, 0.8});
    }
}

TEST_CASE("mutual singularity: atomic and diffuse supports are disjoint") {
    Measure1D m = Measure1D::zero({0.0, 1.0}, 1, 8);
    for (int c = 0; c < 8; ++c) m.ac.set_cell(c, vec1(0.5));
    m.atoms.push_back({0.25, vec1(1.0)});
    m.singular = cantor_quadrature(0.6, 0.9, 4, vec1(1.0), 0.5);
    auto split = atomic_decompose(m);
    for (const auto& a : split.atomic.atoms)
        for (const auto& s : split.diffuse.singular) CHECK(a.x != s.x);
}

TEST_CASE("nonlinear transform of measures") {
    auto f2 = preset("abs", 1);
    auto e = convex_envelope(f2, BoxNd{vec1(-4.0), vec1(4.0)}, 129);

    SUBCASE("a unit Dirac under f2 = |.| costs its total variation") {
        auto m = unit_atom(0.5);
        CHECK(nonlinear_transform(e, m, {0.0, 1.0}) == doctest::Approx(1.0));
    }
    SUBCASE("zero measure costs zero when f**(0) = 0") {
        auto m = Measure1D::zero({0.0, 1.0}, 1);
        CHECK(nonlinear_transform(e, m) == 0.0);
    }
    SUBCASE("constant zero density under max(|b|,1) costs f**(0) * |interval| = 1") {
        auto f = preset("doublewell_shifted", 1);
        auto emax = convex_envelope(f, BoxNd{vec1(-4.0), vec1(4.0)}, 129);
        auto m = Measure1D::zero({0.0, 1.0}, 1, 16);
        CHECK(nonlinear_transform(emax, m) == doctest::Approx(1.0));
    }
    SUBCASE("additive over disjoint subintervals with uncharged boundary") {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1, 16);
        for (int c = 0; c < 16; ++c) m.ac.set_cell(c, vec1(c % 3 == 0 ? 2.0 : -1.0));
        m.atoms.push_back({0.3, vec1(1.5)});
        m.singular = cantor_quadrature(0.6, 0.9, 4, vec1(1.0), 0.25);
        double whole = nonlinear_transform(e, m, {0.0, 1.0});
        double left = nonlinear_transform(e, m, {0.0, 0.5});
        double right = nonlinear_transform(e, m, {0.5, 1.0});
        CHECK(whole == doctest::Approx(left + right).epsilon(1e-12));
    }
    SUBCASE("1-homogeneous envelope: transform equals the direct variation-weighted sum") {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1, 8);
        for (int c = 0; c < 8; ++c) m.ac.set_cell(c, vec1(c - 3.5));
        m.atoms.push_back({0.5, vec1(-2.0)});
        double direct = 0.0;
        double h = m.ac.cell_width();
        for (int c = 0; c < 8; ++c) direct += std::abs(m.ac.cell_value(c)[0]) * h;
        direct += 2.0;
        CHECK(nonlinear_transform(e, m) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("pairing against continuous test functions") {
    SUBCASE("dirac") {
        auto m = unit_atom(0.5);
        CHECK(pair(m, [](double x) { return x; }) == doctest::Approx(0.5));
    }
    SUBCASE("unit density against a constant") {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1, 8);
        for (int c = 0; c < 8; ++c) m.ac.set_cell(c, vec1(1.0));
        CHECK(pair(m, [](double) { return 3.25; }) == doctest::Approx(3.25));
    }
    SUBCASE("level-8 Cantor quadrature pairs with x to 1/2 by symmetry") {
        Measure1D m = Measure1D::zero({0.0, 1.0}, 1);
        m.singular = cantor_quadrature(0.0, 1.0, 8, vec1(1.0));
        CHECK(pair(m, [](double x) { return x; }) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("measure document round-trips bit-exactly") {
    Measure1D m = Measure1D::zero({0.25, 1.75}, 2, 8);
    for (int c = 0; c < 8; ++c) m.ac.set_cell(c, vec2(std::sin(c + 1.0), 1.0 / (c + 3.0)));
    m.atoms.push_back({0.3123456789123456, vec2(0.1, -2.0 / 3.0)});
    m.singular.push_back({1.111111111111111, 0.125, vec2(0.6, 0.8)});
    auto text = serialize(m);
    auto back = parse_measure(text);
    CHECK(back.dim == m.dim);
    CHECK(back.interval.lo == m.interval.lo);
    CHECK(back.interval.hi == m.interval.hi);
    CHECK(back.ac.data == m.ac.data);
    REQUIRE(back.atoms.size() == 1);
    CHECK(back.atoms[0].x == m.atoms[0].x);
    CHECK(back.atoms[0].weight == m.atoms[0].weight);
    REQUIRE(back.singular.size() == 1);
    CHECK(back.singular[0].mass == m.singular[0].mass);
    CHECK(serialize(back) == text);
}

TEST_CASE("representation invariants are enforced") {
    Measure1D m = Measure1D::zero({0.0, 1.0}, 1);
    m.atoms.push_back({0.5, vec1(1.0)});
    m.atoms.push_back({0.5, vec1(2.0)});
    CHECK_THROWS_AS(m.validate(), representation_error);

    Measure1D z = Measure1D::zero({0.0, 1.0}, 1);
    z.atoms.push_back({0.5, vec1(0.0)});
    CHECK_THROWS_AS(z.validate(), representation_error);

    Measure1D s = Measure1D::zero({0.0, 1.0}, 1);
    s.atoms.push_back({0.5, vec1(1.0)});
    s.singular.push_back({0.5, 0.1, vec1(1.0)});
    CHECK_THROWS_AS(s.validate(), representation_error);
}
