#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vexflow/mollifier.hpp"

using namespace vexflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

Domain unit_square(int n, double T = 1.0) {
    DomainSpec spec;
    spec.d = 2;
    spec.extents = {1.0, 1.0, 1.0};
    spec.resolution = n;
    spec.T = T;
    return build_domain(spec);
}

ExponentField constant_exponent(const Domain& dom, double value, double smax) {
    std::vector<ScalarField> slabs(dom.num_slabs(), ScalarField(dom.grid));
    for (auto& f : slabs)
        for (double& v : f.v) v = value;
    return make_exponent_field(dom, std::move(slabs), smax);
}

ScalarField bump_cutoff(const GridLayout& g, double cx, double cy, double radius) {
    ScalarField psi(g);
    for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i) {
            double dx = g.center(0, i) - cx, dy = g.center(1, j) - cy;
            double r2 = (dx * dx + dy * dy) / (radius * radius);
            psi.at(i, j) = r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) * std::exp(1.0) : 0.0;
        }
    return psi;
}

}  // namespace

TEST_CASE("kernel: discrete unit mass, nonnegative, support radius") {
    for (double eps : {0.05, 0.1, 0.2}) {
        Kernel k = make_kernel(2, 1.0 / 64, eps);
        double mass = 0.0;
        for (double w : k.w) {
            CHECK(w >= 0.0);
            mass += w;
        }
        mass *= std::pow(k.h, 2);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& t : k.taps)
            CHECK((t[0] * t[0] + t[1] * t[1]) * k.h * k.h < eps * eps);
    }
    CHECK_THROWS_AS(make_kernel(2, 1.0 / 64, 1.0 / 64), NumericError);
}

TEST_CASE("spatial mollify: constants preserved away from the boundary") {
    Domain dom = unit_square(64);
    SpaceTimeField u = uniform_spacetime(dom.grid, 1.0, 1);
    for (double& v : u.slices[0].v) v = 3.25;
    SpaceTimeField ue = spatial_mollify(u, 0.1);
    // interior points further than eps from the wall see the full kernel
    for (int j = 10; j < 54; ++j)
        for (int i = 10; i < 54; ++i)
            CHECK(ue.slices[0].at(i, j) == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("spatial mollify: affine functions reproduced at interior points") {
    Domain dom = unit_square(64);
    SpaceTimeField u = uniform_spacetime(dom.grid, 1.0, 1);
    const GridLayout& g = dom.grid;
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i)
            u.slices[0].at(i, j) = 0.7 + 1.3 * g.center(0, i) - 2.1 * g.center(1, j);
    SpaceTimeField ue = spatial_mollify(u, 0.1);
    for (int j = 12; j < 52; ++j)
        for (int i = 12; i < 52; ++i)
            CHECK(ue.slices[0].at(i, j) ==
                  doctest::Approx(u.slices[0].at(i, j)).epsilon(1e-12));
}

TEST_CASE("spatial mollify: half-plane indicator becomes a symmetric transition") {
    Domain dom = unit_square(64);
    const GridLayout& g = dom.grid;
    SpaceTimeField u = uniform_spacetime(g, 1.0, 1);
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i)
            u.slices[0].at(i, j) = g.center(0, i) < 0.5 ? 1.0 : 0.0;
    double eps = 0.1;
    SpaceTimeField ue = spatial_mollify(u, eps);
    int j = 32;
    // symmetric pair across the interface sums to 1 (even kernel)
    for (int off = 0; off < 5; ++off)
        CHECK(ue.slices[0].at(31 - off, j) + ue.slices[0].at(32 + off, j) ==
              doctest::Approx(1.0).epsilon(1e-12));
    // monotone transition of width ~2 eps
    for (int i = 16; i < 48; ++i)
        CHECK(ue.slices[0].at(i, j) >= ue.slices[0].at(i + 1, j) - 1e-13);
    CHECK(ue.slices[0].at(32 - int(eps / g.h) - 2, j) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ue.slices[0].at(32 + int(eps / g.h) + 2, j) == doctest::Approx(0.0).epsilon(1e-12));

    // 1D quadrature oracle: profile equals the kernel marginal mass beyond the line
    Kernel k = make_kernel(2, g.h, eps);
    int i_test = 33;
    double expect = 0.0;
    for (std::size_t t = 0; t < k.taps.size(); ++t) {
        int src = i_test - k.taps[t][0];
        if (g.center(0, src) < 0.5) expect += k.w[t];
    }
    expect *= g.h * g.h;
    CHECK(ue.slices[0].at(i_test, j) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("young bound: mollification does not increase the l1 norm") {
    Domain dom = unit_square(48);
    Rng rng(3);
    SpaceTimeField u = uniform_spacetime(dom.grid, 1.0, 1);
    for (double& v : u.slices[0].v) v = rng.normal();
    SpaceTimeField ue = spatial_mollify(u, 0.08);
    double l1 = 0, l1e = 0;
    for (double v : u.slices[0].v) l1 += std::fabs(v);
    for (double v : ue.slices[0].v) l1e += std::fabs(v);
    CHECK(l1e <= l1 * (1 + 1e-12));
}

TEST_CASE("temporal mollify: constant in time unchanged, jump averages at midpoint") {
    Domain dom = unit_square(16, 1.0);
    SpaceTimeField u = uniform_spacetime(dom.grid, 1.0, 64);
    for (auto& sl : u.slices)
        for (double& v : sl.v) v = 2.0;
    SpaceTimeField ue = temporal_mollify(u, 0.1, TimeExtension::InitialHold);
    // InitialHold keeps the left end exact; right end decays to zero extension
    for (std::size_t m = 0; m + 8 < u.num_slices(); ++m)
        CHECK(ue.slices[m].v[5] == doctest::Approx(2.0).epsilon(1e-12));

    // jump at t* = 0.5: midpoint slices average the one-sided limits
    SpaceTimeField w = uniform_spacetime(dom.grid, 1.0, 64);
    for (std::size_t m = 0; m < w.num_slices(); ++m)
        for (double& v : w.slices[m].v) v = w.times[m] < 0.5 ? 1.0 : 3.0;
    double eps = 0.08;
    SpaceTimeField we = temporal_mollify(w, eps, TimeExtension::Zero);
    // slice 31 and 32 straddle 0.5 symmetrically
    double a = we.slices[31].v[0], b = we.slices[32].v[0];
    CHECK(0.5 * (a + b) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(we.slices[20].v[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(we.slices[44].v[0] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("temporal and spatial mollification commute") {
    Domain dom = unit_square(24, 1.0);
    Rng rng(8);
    SpaceTimeField u = uniform_spacetime(dom.grid, 1.0, 32);
    for (auto& sl : u.slices)
        for (double& v : sl.v) v = rng.normal();
    SpaceTimeField a = temporal_mollify(spatial_mollify(u, 0.15), 0.1);
    SpaceTimeField b = spatial_mollify(temporal_mollify(u, 0.1), 0.15);
    for (std::size_t m = 0; m < u.num_slices(); ++m)
        for (std::size_t c = 0; c < a.slices[m].size(); ++c)
            CHECK(a.slices[m].v[c] == doctest::Approx(b.slices[m].v[c]).epsilon(1e-12));
}

TEST_CASE("localized double smoothing: support control and the support-leak error") {
    Domain dom = unit_square(64);
    ScalarField psi = bump_cutoff(dom.grid, 0.5, 0.5, 0.22);
    double margin = support_margin(psi, dom);
    CHECK(margin > 0.25);

    VectorSpaceTime u(2);
    Rng rng(4);
    for (auto& comp : u) {
        comp = uniform_spacetime(dom.grid, 1.0, 1);
        for (double& v : comp.slices[0].v) v = rng.normal();
    }
    VectorSpaceTime w = localized_double_smooth(u, psi, 0.05, dom);
    // support stays strictly inside Omega
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i) {
            double dx = dom.grid.center(0, i) - 0.5, dy = dom.grid.center(1, j) - 0.5;
            if (std::sqrt(dx * dx + dy * dy) > 0.22 + 2 * 0.05 + 2 * dom.grid.h) {
                CHECK(w[0].slices[0].at(i, j) == 0.0);
                CHECK(w[1].slices[0].at(i, j) == 0.0);
            }
        }
    CHECK_THROWS_AS(localized_double_smooth(u, psi, 0.2, dom), NumericError);

    // zero input stays zero
    VectorSpaceTime z(2);
    for (auto& comp : z) comp = uniform_spacetime(dom.grid, 1.0, 1);
    VectorSpaceTime wz = localized_double_smooth(z, psi, 0.05, dom);
    for (double v : wz[0].slices[0].v) CHECK(v == 0.0);
}

TEST_CASE("psi = 1 on the core: double smoothing equals plain double mollification there") {
    Domain dom = unit_square(64);
    ScalarField psi(dom.grid);
    const GridLayout& g = dom.grid;
    // psi = 1 on a large core, smooth falloff outside
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i) {
            double dx = g.center(0, i) - 0.5, dy = g.center(1, j) - 0.5;
            double r = std::sqrt(dx * dx + dy * dy);
            psi.at(i, j) = r < 0.25 ? 1.0 : (r < 0.35 ? (0.35 - r) / 0.1 : 0.0);
        }
    VectorSpaceTime u(1);
    u[0] = uniform_spacetime(g, 1.0, 1);
    // u supported in the core interior
    for (int j = 28; j < 36; ++j)
        for (int i = 28; i < 36; ++i) u[0].slices[0].at(i, j) = 1.0 + 0.1 * i - 0.05 * j;
    double eps = 0.04;
    VectorSpaceTime w = localized_double_smooth(u, psi, eps, dom);
    Kernel k = make_kernel(2, g.h, eps);
    ScalarField twice = spatial_mollify_slice(spatial_mollify_slice(u[0].slices[0], k), k);
    for (int j = 26; j < 38; ++j)
        for (int i = 26; i < 38; ++i)
            CHECK(w[0].slices[0].at(i, j) == doctest::Approx(twice.at(i, j)).epsilon(1e-12));
}

TEST_CASE("convergence ladder: smooth field decreases at second order, bound holds") {
    Domain dom = unit_square(128);
    const GridLayout& g = dom.grid;
    ExponentField ex = constant_exponent(dom, 2.3, 2.6);
    ScalarField psi = bump_cutoff(g, 0.5, 0.5, 0.3);

    VectorSpaceTime u(2);
    for (int c = 0; c < 2; ++c) {
        u[c] = uniform_spacetime(g, 1.0, 2);
        for (std::size_t m = 0; m < 2; ++m)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < g.n[0]; ++i) {
                    double x = g.center(0, i), y = g.center(1, j);
                    u[c].slices[m].at(i, j) = std::sin(2 * kPi * x) * std::sin(2 * kPi * y) *
                                              (c == 0 ? 1.0 : -0.5) * (m == 0 ? 1.0 : 0.7);
                }
    }
    std::vector<double> eps_list = {0.064, 0.032, 0.016};
    ConvergenceLadder lad = convergence_ladder(u, psi, eps_list, ex, dom);
    CHECK(lad.l1_monotone);
    CHECK(lad.modular_monotone);
    CHECK(lad.linf_bound_ok);
    // second order in the L1 column
    double order = std::log2(lad.rungs[0].l1_dist / lad.rungs[1].l1_dist);
    CHECK(order > 1.6);
    CHECK(lad.rungs.back().modular_dist < 1e-3);

    // zero field: all distances vanish
    VectorSpaceTime z(2);
    for (auto& comp : z) comp = uniform_spacetime(g, 1.0, 2);
    ConvergenceLadder lz = convergence_ladder(z, psi, eps_list, ex, dom);
    for (const auto& r : lz.rungs) {
        CHECK(r.l1_dist == 0.0);
        CHECK(r.modular_dist == 0.0);
    }
    std::string csv = ladder_csv(lad, 2);
    CHECK(csv.find("eps,") == 0);
}

TEST_CASE("minimizer independence on covering balls") {
    Domain dom = unit_square(48);
    std::vector<ScalarField> slabs(1, ScalarField(dom.grid));
    const GridLayout& g = dom.grid;
    for (int j = 0; j < 48; ++j)
        for (int i = 0; i < 48; ++i)
            slabs[0].at(i, j) = 2.4 + 0.3 * std::sin(2 * kPi * g.center(0, i)) *
                                          std::cos(2 * kPi * g.center(1, j));
    ExponentField ex = make_exponent_field(dom, std::move(slabs), 2.7);
    Covering cov = build_covering(dom, ex);
    MinimizerCheck mc = minimizer_independence_check(ex, cov, dom, {1.0, 2.0, 10.0, 100.0});
    CHECK(mc.ok);
    CHECK(mc.worst_gap < 1e-12);
}

TEST_CASE("infimum comparability with the covering constant M") {
    Domain dom = unit_square(48);
    std::vector<ScalarField> slabs(1, ScalarField(dom.grid));
    const GridLayout& g = dom.grid;
    for (int j = 0; j < 48; ++j)
        for (int i = 0; i < 48; ++i)
            slabs[0].at(i, j) = 2.4 + 0.2 * std::sin(2 * kPi * g.center(0, i));
    ExponentField ex = make_exponent_field(dom, std::move(slabs), 2.6);
    InfimumCheck ic = infimum_comparability_check(ex, dom, 5.0, {0.05, 0.1, 0.2});
    CHECK(ic.ok);
    CHECK(ic.M >= 1.0);
    CHECK(ic.worst_ratio <= ic.M * (1 + 1e-12));
}

TEST_CASE("weighted L2 convergence and double-average L1 convergence") {
    Domain dom = unit_square(64);
    const GridLayout& g = dom.grid;
    ScalarField f(g);
    Rng rng(6);
    for (double& v : f.v) v = rng.normal();
    ScalarField psi = bump_cutoff(g, 0.5, 0.5, 0.3);
    std::vector<double> eps = {0.12, 0.06, 0.03};
    std::vector<double> gaps = weighted_l2_gap(f, psi, eps);
    for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] < gaps[i - 1]);

    SpaceTimeField v = uniform_spacetime(g, 1.0, 1);
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i)
            v.slices[0].at(i, j) =
                std::sin(2 * kPi * g.center(0, i)) * std::cos(kPi * g.center(1, j));
    std::vector<double> dgaps = double_average_l1_gap(v, eps);
    for (std::size_t i = 1; i < dgaps.size(); ++i) CHECK(dgaps[i] < dgaps[i - 1]);
}
