#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vexflow/exponent.hpp"

using namespace vexflow;

namespace {

Domain unit_square(int n, double T = 1.0, std::vector<double> slabs = {}) {
    DomainSpec spec;
    spec.d = 2;
    spec.extents = {1.0, 1.0, 1.0};
    spec.resolution = n;
    spec.T = T;
    spec.slab_bounds = slabs;
    return build_domain(spec);
}

ExponentField constant_exponent(const Domain& dom, double value, double smax = 0.0) {
    std::vector<ScalarField> slabs;
    for (int s = 0; s < dom.num_slabs(); ++s) {
        ScalarField f(dom.grid);
        for (double& v : f.v) v = value;
        slabs.push_back(std::move(f));
    }
    return make_exponent_field(dom, std::move(slabs), smax);
}

SpaceTimeField constant_field(const Domain& dom, double value, int nt = 1) {
    SpaceTimeField f = uniform_spacetime(dom.grid, dom.T, nt);
    for (auto& sl : f.slices)
        for (double& v : sl.v) v = value;
    return f;
}

}  // namespace

TEST_CASE("admissibility thresholds and s0 arithmetic") {
    CHECK(s_min_theory(2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s_min_theory(3) == doctest::Approx(11.0 / 5.0).epsilon(1e-15));
    CHECK(s0_exponent(2) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(s0_exponent(3) == doctest::Approx(11.0 / 3.0).epsilon(1e-15));
    // (s0/2)' = s_min, both dimensions, exact rationals
    for (int d : {2, 3}) {
        double s0 = s0_exponent(d);
        double conj = (s0 / 2) / (s0 / 2 - 1.0);
        CHECK(conj == doctest::Approx(s_min_theory(d)).epsilon(1e-15));
    }
}

TEST_CASE("bounds validation accepts d=2 s=2 and rejects d=3 s=2") {
    Domain dom2 = unit_square(8);
    CHECK_NOTHROW(constant_exponent(dom2, 2.0));

    DomainSpec spec;
    spec.d = 3;
    spec.extents = {1.0, 1.0, 1.0};
    spec.resolution = 4;
    spec.T = 1.0;
    Domain dom3 = build_domain(spec);
    CHECK_THROWS_AS(constant_exponent(dom3, 2.0), ConfigError);
    CHECK_NOTHROW(constant_exponent(dom3, 2.2));  // 11/5 met
}

TEST_CASE("time jump between slabs is allowed, log-Holder is per-slab") {
    Domain dom = unit_square(8, 1.0, {0.0, 0.5, 1.0});
    std::vector<ScalarField> slabs;
    ScalarField a(dom.grid), b(dom.grid);
    for (double& v : a.v) v = 2.0;
    for (double& v : b.v) v = 3.0;
    slabs.push_back(a);
    slabs.push_back(b);
    ExponentField ex = make_exponent_field(dom, std::move(slabs), 3.0);
    CHECK(ex.num_slabs() == 2);
    // constant in space per slab -> zero constant despite the time jump
    CHECK(ex.log_holder_uniform == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(ex.slab_of(0.25) == 0);
    CHECK(ex.slab_of(0.75) == 1);
}

TEST_CASE("non-finite exponent rejected") {
    Domain dom = unit_square(4);
    ScalarField f(dom.grid);
    for (double& v : f.v) v = 2.0;
    f.v[3] = std::numeric_limits<double>::quiet_NaN();
    std::vector<ScalarField> slabs = {f};
    CHECK_THROWS_AS(make_exponent_field(dom, std::move(slabs), 0.0), NumericError);
}

TEST_CASE("conjugate field: closed forms and involution") {
    Domain dom = unit_square(8);
    for (double s : {2.0, 4.0, 11.0 / 5.0}) {
        ExponentField ex = constant_exponent(dom, s, std::max(s, 2.0));
        ExponentField conj = conjugate_field(ex);
        double expected = s / (s - 1.0);
        CHECK(conj.slabs[0].v[5] == doctest::Approx(expected).epsilon(1e-15));
        ExponentField back = conjugate_field(conj);
        for (std::size_t c = 0; c < back.slabs[0].size(); ++c)
            CHECK(back.slabs[0].v[c] == doctest::Approx(ex.slabs[0].v[c]).epsilon(1e-14));
    }
}

TEST_CASE("modular: measure, zero case and piecewise-constant quadrature") {
    Domain dom = unit_square(16, 2.0);  // measure of the cylinder = 2
    ExponentField ex = constant_exponent(dom, 2.5, 3.0);

    SpaceTimeField one = constant_field(dom, 1.0, 4);
    CHECK(modular(one, ex) == doctest::Approx(2.0).epsilon(1e-12));

    SpaceTimeField zero = constant_field(dom, 0.0, 4);
    CHECK(modular(zero, ex) == 0.0);

    // |g| = 2, s = 2 on the first half in time (measure 1), s = 3 on the second
    Domain domj = unit_square(16, 2.0, {0.0, 1.0, 2.0});
    std::vector<ScalarField> slabs;
    ScalarField s2(domj.grid), s3(domj.grid);
    for (double& v : s2.v) v = 2.0;
    for (double& v : s3.v) v = 3.0;
    slabs.push_back(s2);
    slabs.push_back(s3);
    ExponentField exj = make_exponent_field(domj, std::move(slabs), 3.0);
    SpaceTimeField two = constant_field(domj, 2.0, 2);  // slice times 0.5 and 1.5
    CHECK(modular(two, exj) == doctest::Approx(4.0 + 8.0).epsilon(1e-12));
}

TEST_CASE("luxemburg norm: constant exponent matches Lp, mixed matches closed form") {
    Domain dom = unit_square(16, 1.0);
    Rng rng(42);
    for (double p : {2.0, 3.0}) {
        ExponentField ex = constant_exponent(dom, p, std::max(p, 2.0));
        SpaceTimeField g = constant_field(dom, 0.0, 2);
        for (auto& sl : g.slices)
            for (double& v : sl.v) v = rng.normal();
        ModularReport rep = luxemburg_norm(g, ex);
        double lp = std::pow(modular(g, ex), 1.0 / p);
        CHECK(rep.luxemburg_norm == doctest::Approx(lp).epsilon(1e-9));
        // norm-modular consistency
        double m = 0.0;
        {
            SpaceTimeField scaled = g;
            for (auto& sl : scaled.slices)
                for (double& v : sl.v) v /= rep.luxemburg_norm;
            m = modular(scaled, ex);
        }
        CHECK(m == doctest::Approx(1.0).epsilon(1e-8));
    }

    // g = 1 on measure-2 cylinder, s = 2 on one half, s = 4 on the other:
    // lambda solves 1/l^2 + 1/l^4 = 1, l = ((sqrt 5 - 1)/2)^{-1/2}
    Domain domj = unit_square(16, 2.0, {0.0, 1.0, 2.0});
    std::vector<ScalarField> slabs;
    ScalarField s2(domj.grid), s4(domj.grid);
    for (double& v : s2.v) v = 2.0;
    for (double& v : s4.v) v = 4.0;
    slabs.push_back(s2);
    slabs.push_back(s4);
    ExponentField exj = make_exponent_field(domj, std::move(slabs), 4.0);
    SpaceTimeField one = constant_field(domj, 1.0, 2);
    ModularReport rep = luxemburg_norm(one, exj, 1e-12);
    CHECK(rep.luxemburg_norm == doctest::Approx(1.2720196495140689).epsilon(1e-8));

    SpaceTimeField zero = constant_field(domj, 0.0, 2);
    ModularReport zrep = luxemburg_norm(zero, exj);
    CHECK(zrep.luxemburg_norm == 0.0);
    CHECK(zrep.iterations == 0);
}

TEST_CASE("luxemburg homogeneity and monotonicity") {
    Domain dom = unit_square(12, 1.0);
    ExponentField ex = constant_exponent(dom, 2.0, 3.0);
    // mixed spatial exponent field
    std::vector<ScalarField> slabs;
    ScalarField sf(dom.grid);
    for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i) sf.at(i, j) = 2.0 + (i < 6 ? 0.0 : 1.0);
    slabs.push_back(sf);
    ExponentField mixed = make_exponent_field(dom, std::move(slabs), 3.0);

    Rng rng(7);
    SpaceTimeField g = uniform_spacetime(dom.grid, dom.T, 2);
    for (auto& sl : g.slices)
        for (double& v : sl.v) v = rng.normal();
    double base = luxemburg_norm(g, mixed).luxemburg_norm;
    for (double c : {0.25, 0.5, 2.0, 4.0}) {
        SpaceTimeField cg = g;
        for (auto& sl : cg.slices)
            for (double& v : sl.v) v *= c;
        CHECK(luxemburg_norm(cg, mixed).luxemburg_norm ==
              doctest::Approx(c * base).epsilon(1e-9));
    }

    // |g1| <= |g2| pointwise implies both orderings
    SpaceTimeField g2 = g;
    for (auto& sl : g2.slices)
        for (double& v : sl.v) v *= 1.5;
    CHECK(modular(g, mixed) <= modular(g2, mixed));
    CHECK(luxemburg_norm(g, mixed).luxemburg_norm <=
          luxemburg_norm(g2, mixed).luxemburg_norm);
}

TEST_CASE("modular convergence scales across lambda (bounded exponent equivalence)") {
    Domain dom = unit_square(12, 1.0);
    ExponentField ex = constant_exponent(dom, 2.5, 3.0);
    Rng rng(11);
    SpaceTimeField g = uniform_spacetime(dom.grid, dom.T, 2);
    for (auto& sl : g.slices)
        for (double& v : sl.v) v = rng.normal();
    // g_n -> g with modular(g_n - g) -> 0; the scaled modulars vanish too
    std::vector<double> lambdas = {0.25, 0.5, 2.0, 4.0};
    double prev[4] = {1e300, 1e300, 1e300, 1e300};
    for (int n = 1; n <= 4; ++n) {
        double amp = std::pow(10.0, -n);
        SpaceTimeField diff = g;
        for (auto& sl : diff.slices)
            for (double& v : sl.v) v *= amp;  // g_n - g
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            SpaceTimeField scaled = diff;
            for (auto& sl : scaled.slices)
                for (double& v : sl.v) v /= lambdas[li];
            double m = modular(scaled, ex);
            CHECK(m < prev[li]);
            prev[li] = m;
        }
    }
    for (double m : prev) CHECK(m < 1e-6);
}

TEST_CASE("holder pairing: identity case, zero case, bound on random data") {
    Domain dom = unit_square(16, 1.0);
    ExponentField ex = constant_exponent(dom, 2.0, 2.0);
    SpaceTimeField one = constant_field(dom, 1.0, 1);
    PairingReport rep = holder_pairing(one, one, ex);
    CHECK(rep.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(rep.value) <= rep.bound * (1 + 1e-12));

    SpaceTimeField zero = constant_field(dom, 0.0, 1);
    CHECK(holder_pairing(zero, one, ex).value == 0.0);

    // random phi, psi with mixed exponent; brute-force sum is the oracle
    std::vector<ScalarField> slabs;
    ScalarField sf(dom.grid);
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) sf.at(i, j) = 2.0 + (j % 2 ? 0.5 : 0.0);
    slabs.push_back(sf);
    ExponentField mixed = make_exponent_field(dom, std::move(slabs), 2.5);
    Rng rng(3);
    SpaceTimeField phi = constant_field(dom, 0.0, 1), psi = constant_field(dom, 0.0, 1);
    for (auto& sl : phi.slices)
        for (double& v : sl.v) v = rng.normal();
    for (auto& sl : psi.slices)
        for (double& v : sl.v) v = rng.normal();
    PairingReport rp = holder_pairing(phi, psi, mixed);
    double brute = 0.0;
    double celldv = dom.grid.h * dom.grid.h;
    for (std::size_t c = 0; c < phi.slices[0].size(); ++c)
        brute += phi.slices[0].v[c] * psi.slices[0].v[c];
    brute *= celldv * phi.weights[0];
    CHECK(rp.value == doctest::Approx(brute).epsilon(1e-13));
    CHECK(std::fabs(rp.value) <= rp.bound * (1 + 1e-12));
}

TEST_CASE("product convergence: modular sequences give L1 product convergence") {
    Domain dom = unit_square(12, 1.0);
    std::vector<ScalarField> slabs;
    ScalarField sf(dom.grid);
    for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i) sf.at(i, j) = 2.5 + 0.4 * std::sin(2.0 * 3.14159 * i / 12.0);
    slabs.push_back(sf);
    ExponentField ex = make_exponent_field(dom, std::move(slabs), 2.9);
    ExponentField conj = conjugate_field(ex);

    Rng rng(5);
    SpaceTimeField phi = uniform_spacetime(dom.grid, 1.0, 2);
    SpaceTimeField psi = phi;
    for (auto& sl : phi.slices)
        for (double& v : sl.v) v = rng.normal();
    for (auto& sl : psi.slices)
        for (double& v : sl.v) v = rng.normal();

    double celldv = dom.grid.h * dom.grid.h;
    double prev = 1e300;
    for (int n = 1; n <= 5; ++n) {
        double amp = std::pow(2.0, -n);
        // phi_n = phi + amp * bump, psi_n = psi - amp * bump
        double l1 = 0.0;
        for (std::size_t m = 0; m < phi.num_slices(); ++m)
            for (std::size_t c = 0; c < phi.slices[m].size(); ++c) {
                double pn = phi.slices[m].v[c] + amp;
                double qn = psi.slices[m].v[c] - amp;
                l1 += std::fabs(pn * qn - phi.slices[m].v[c] * psi.slices[m].v[c]) * celldv *
                      phi.weights[m];
            }
        CHECK(l1 < prev);
        prev = l1;
    }
    CHECK(prev < 0.2);
}

TEST_CASE("exponent csv round trip") {
    Domain dom = unit_square(6, 1.0, {0.0, 0.5, 1.0});
    std::vector<ScalarField> slabs;
    for (int s = 0; s < 2; ++s) {
        ScalarField f(dom.grid);
        for (int j = 0; j < 6; ++j)
            for (int i = 0; i < 6; ++i) f.at(i, j) = 2.0 + 0.1 * s + 0.01 * i + 0.001 * j;
        slabs.push_back(std::move(f));
    }
    ExponentField ex = make_exponent_field(dom, std::move(slabs), 3.0);
    std::string csv = exponent_csv(ex);
    ExponentField back = exponent_from_csv(dom, csv, 3.0);
    for (int s = 0; s < 2; ++s)
        for (std::size_t c = 0; c < ex.slabs[s].size(); ++c)
            CHECK(back.slabs[s].v[c] == doctest::Approx(ex.slabs[s].v[c]).epsilon(1e-15));
}
