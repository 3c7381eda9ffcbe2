#include "vexflow/domain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "vexflow/expr.hpp"
#include "vexflow/exponent.hpp"

namespace vexflow {

int Domain::slab_of(double t) const {
    int ns = num_slabs();
    for (int s = 0; s < ns; ++s)
        if (t < slab_bounds[s + 1]) return s;
    return ns - 1;
}

Domain build_domain(const DomainSpec& spec) {
    if (!(spec.T > 0)) throw ConfigError("final time T must be positive");
    Domain dom;
    dom.grid = make_layout(spec.d, spec.extents, spec.resolution);
    dom.T = spec.T;

    if (spec.slab_bounds.empty()) {
        dom.slab_bounds = {0.0, spec.T};
    } else {
        dom.slab_bounds = spec.slab_bounds;
        if (dom.slab_bounds.size() < 2 || std::fabs(dom.slab_bounds.front()) > 1e-14 ||
            std::fabs(dom.slab_bounds.back() - spec.T) > 1e-12)
            throw ConfigError("time slabs must partition [0, T]");
        for (std::size_t i = 1; i < dom.slab_bounds.size(); ++i)
            if (!(dom.slab_bounds[i] > dom.slab_bounds[i - 1]))
                throw ConfigError("time slab boundaries must be strictly increasing");
    }

    const GridLayout& g = dom.grid;
    dom.mask.assign(g.cells(), 1);
    if (spec.mask_rule != "all") {
        Expr rule = Expr::parse(spec.mask_rule);
        for (int k = 0; k < g.n[2]; ++k)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < g.n[0]; ++i)
                    dom.mask[g.idx(i, j, k)] =
                        rule.eval(0.0, g.center(0, i), g.center(1, j),
                                  g.d == 3 ? g.center(2, k) : 0.0) > 0.0;
    }
    dom.interior_cells = 0;
    for (auto m : dom.mask) dom.interior_cells += m;
    if (dom.interior_cells == 0) throw ConfigError("degenerate domain: mask selects no cells");

    // connectivity (face-adjacency BFS from the first masked cell)
    std::vector<std::uint8_t> seen(g.cells(), 0);
    std::deque<std::array<int, 3>> queue;
    bool started = false;
    for (int k = 0; k < g.n[2] && !started; ++k)
        for (int j = 0; j < g.n[1] && !started; ++j)
            for (int i = 0; i < g.n[0] && !started; ++i)
                if (dom.mask[g.idx(i, j, k)]) {
                    queue.push_back({i, j, k});
                    seen[g.idx(i, j, k)] = 1;
                    started = true;
                }
    std::size_t visited = 0;
    auto push = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0 || i >= g.n[0] || j >= g.n[1] || k >= g.n[2]) return;
        std::size_t c = g.idx(i, j, k);
        if (!dom.mask[c] || seen[c]) return;
        seen[c] = 1;
        queue.push_back({i, j, k});
    };
    while (!queue.empty()) {
        auto [i, j, k] = queue.front();
        queue.pop_front();
        ++visited;
        push(i - 1, j, k);
        push(i + 1, j, k);
        push(i, j - 1, k);
        push(i, j + 1, k);
        if (g.d == 3) {
            push(i, j, k - 1);
            push(i, j, k + 1);
        }
    }
    if (visited != dom.interior_cells) throw ConfigError("domain mask is not connected");

    // nearest boundary distance by multi-source BFS (cell-graph metric)
    dom.boundary_dist.assign(g.cells(), -1.0);
    std::deque<std::array<int, 3>> front;
    auto outside = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0 || i >= g.n[0] || j >= g.n[1] || k >= g.n[2]) return true;
        return dom.mask[g.idx(i, j, k)] == 0;
    };
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                std::size_t c = g.idx(i, j, k);
                if (!dom.mask[c]) continue;
                bool bdry = outside(i - 1, j, k) || outside(i + 1, j, k) ||
                            outside(i, j - 1, k) || outside(i, j + 1, k);
                if (g.d == 3) bdry = bdry || outside(i, j, k - 1) || outside(i, j, k + 1);
                if (bdry) {
                    dom.boundary_dist[c] = 0.5 * g.h;
                    front.push_back({i, j, k});
                }
            }
    while (!front.empty()) {
        auto [i, j, k] = front.front();
        front.pop_front();
        double base = dom.boundary_dist[g.idx(i, j, k)];
        auto relax = [&](int ii, int jj, int kk) {
            if (outside(ii, jj, kk)) return;
            std::size_t c = g.idx(ii, jj, kk);
            if (dom.boundary_dist[c] < 0) {
                dom.boundary_dist[c] = base + g.h;
                front.push_back({ii, jj, kk});
            }
        };
        relax(i - 1, j, k);
        relax(i + 1, j, k);
        relax(i, j - 1, k);
        relax(i, j + 1, k);
        if (g.d == 3) {
            relax(i, j, k - 1);
            relax(i, j, k + 1);
        }
    }
    return dom;
}

namespace {

struct BallLattice {
    std::vector<std::array<double, 3>> centers;
};

BallLattice lattice_centers(const GridLayout& g, double r) {
    BallLattice out;
    int m[3] = {1, 1, 1};
    for (int a = 0; a < g.d; ++a) m[a] = std::max(1, int(std::ceil(g.ext[a] / r)));
    for (int k = 0; k < m[2]; ++k)
        for (int j = 0; j < m[1]; ++j)
            for (int i = 0; i < m[0]; ++i)
                out.centers.push_back({(i + 0.5) * r, (j + 0.5) * r,
                                       g.d == 3 ? (k + 0.5) * r : 0.0});
    return out;
}

double dist2(const GridLayout& g, const std::array<double, 3>& c, int i, int j, int k) {
    double dx = g.center(0, i) - c[0];
    double dy = g.center(1, j) - c[1];
    double dz = g.d == 3 ? g.center(2, k) - c[2] : 0.0;
    return dx * dx + dy * dy + dz * dz;
}

// Oscillation criterion from the covering construction: over every ball of
// radius 2r the per-slab spread of s must not exceed s_min/d.
bool covering_admissible(const Domain& dom, const ExponentField& s, double r) {
    const GridLayout& g = dom.grid;
    double limit = s_min_theory(g.d) / g.d + 1e-12;
    BallLattice lat = lattice_centers(g, r);
    double rad2 = 4.0 * r * r;
    for (const auto& c : lat.centers) {
        int i0 = std::max(0, int((c[0] - 2 * r) / g.h) - 1);
        int i1 = std::min(g.n[0] - 1, int((c[0] + 2 * r) / g.h) + 1);
        int j0 = std::max(0, int((c[1] - 2 * r) / g.h) - 1);
        int j1 = std::min(g.n[1] - 1, int((c[1] + 2 * r) / g.h) + 1);
        int k0 = 0, k1 = g.n[2] - 1;
        if (g.d == 3) {
            k0 = std::max(0, int((c[2] - 2 * r) / g.h) - 1);
            k1 = std::min(g.n[2] - 1, int((c[2] + 2 * r) / g.h) + 1);
        }
        for (int sl = 0; sl < s.num_slabs(); ++sl) {
            double lo = 1e300, hi = -1e300;
            const ScalarField& f = s.slabs[sl];
            for (int k = k0; k <= k1; ++k)
                for (int j = j0; j <= j1; ++j)
                    for (int i = i0; i <= i1; ++i) {
                        if (!dom.mask[g.idx(i, j, k)]) continue;
                        if (dist2(g, c, i, j, k) > rad2) continue;
                        double v = f.at(i, j, k);
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
            if (hi > lo && hi - lo > limit) return false;
        }
    }
    return true;
}

}  // namespace

Covering build_covering(const Domain& dom, const ExponentField& s) {
    const GridLayout& g = dom.grid;
    double diam = 0.0;
    for (int a = 0; a < g.d; ++a) diam += g.ext[a] * g.ext[a];
    diam = std::sqrt(diam);

    double lo = 2.0 * g.h, hi = diam;
    if (!covering_admissible(dom, s, lo))
        throw NumericError("covering: no admissible radius above one grid cell; grid too coarse "
                           "for the exponent oscillation");
    double r;
    if (covering_admissible(dom, s, hi)) {
        r = hi;
    } else {
        for (int it = 0; it < 50; ++it) {
            double mid = 0.5 * (lo + hi);
            if (covering_admissible(dom, s, mid))
                lo = mid;
            else
                hi = mid;
        }
        r = lo;  // ties toward larger r
    }
    // grid oscillation is not exactly monotone in r; re-verify and back off if needed
    int guard = 0;
    while (!covering_admissible(dom, s, r) && guard++ < 200) r *= 0.95;
    if (r < 2.0 * g.h)
        throw NumericError("covering: admissibility fallback went below one grid cell");

    Covering cov;
    cov.r = r;
    cov.d = g.d;
    BallLattice lat = lattice_centers(g, r);
    double rad2 = 4.0 * r * r;
    for (const auto& c : lat.centers) {
        std::vector<double> qv, rv, Rv;
        bool any = false;
        for (int sl = 0; sl < s.num_slabs(); ++sl) {
            double qlo = 1e300, qhi = -1e300;
            const ScalarField& f = s.slabs[sl];
            int i0 = std::max(0, int((c[0] - 2 * r) / g.h) - 1);
            int i1 = std::min(g.n[0] - 1, int((c[0] + 2 * r) / g.h) + 1);
            int j0 = std::max(0, int((c[1] - 2 * r) / g.h) - 1);
            int j1 = std::min(g.n[1] - 1, int((c[1] + 2 * r) / g.h) + 1);
            int k0 = 0, k1 = g.n[2] - 1;
            if (g.d == 3) {
                k0 = std::max(0, int((c[2] - 2 * r) / g.h) - 1);
                k1 = std::min(g.n[2] - 1, int((c[2] + 2 * r) / g.h) + 1);
            }
            for (int k = k0; k <= k1; ++k)
                for (int j = j0; j <= j1; ++j)
                    for (int i = i0; i <= i1; ++i) {
                        if (!dom.mask[g.idx(i, j, k)]) continue;
                        if (dist2(g, c, i, j, k) > rad2) continue;
                        double v = f.at(i, j, k);
                        qlo = std::min(qlo, v);
                        qhi = std::max(qhi, v);
                        any = true;
                    }
            qv.push_back(qlo);
            rv.push_back(qhi);
            Rv.push_back(qlo * (1.0 + 2.0 / g.d));
        }
        if (!any) continue;  // ball never meets Omega
        cov.centers.push_back(c);
        cov.q.push_back(qv);
        cov.rr.push_back(rv);
        cov.R.push_back(Rv);
    }
    return cov;
}

void partition_of_unity(Covering& cov, const Domain& dom) {
    const GridLayout& g = dom.grid;
    double w = cov.r / 4.0;          // mollifier width
    double ind = 0.75 * cov.r;       // indicator radius, so supp zeta_i stays inside B_r
    int wt = int(w / g.h);           // kernel taps per axis

    // bump taps on grid offsets strictly inside the kernel ball
    std::vector<std::array<int, 3>> taps;
    std::vector<double> tapw;
    for (int k = (g.d == 3 ? -wt : 0); k <= (g.d == 3 ? wt : 0); ++k)
        for (int j = -wt; j <= wt; ++j)
            for (int i = -wt; i <= wt; ++i) {
                double rho2 = (i * i + j * j + k * k) * g.h * g.h / (w * w);
                if (rho2 >= 1.0) continue;
                taps.push_back({i, j, k});
                tapw.push_back(std::exp(-1.0 / (1.0 - rho2)));
            }
    if (taps.empty()) {
        taps.push_back({0, 0, 0});
        tapw.push_back(1.0);
    }

    const std::size_t nb = cov.num_balls();
    cov.zeta.assign(nb, ScalarField(g));
    int nn[3] = {g.n[0] + 1, g.n[1] + 1, g.d == 3 ? g.n[2] + 1 : 1};
    std::size_t nodes = std::size_t(nn[0]) * nn[1] * nn[2];
    cov.zeta_node.assign(nb, std::vector<double>(nodes, 0.0));

    auto raw_at = [&](const std::array<double, 3>& c, double x, double y, double z) {
        double acc = 0.0;
        for (std::size_t t = 0; t < taps.size(); ++t) {
            double px = x - taps[t][0] * g.h - c[0];
            double py = y - taps[t][1] * g.h - c[1];
            double pz = g.d == 3 ? z - taps[t][2] * g.h - c[2] : 0.0;
            if (px * px + py * py + pz * pz <= ind * ind) acc += tapw[t];
        }
        return acc;
    };

    std::vector<double> cell_sum(g.cells(), 0.0), node_sum(nodes, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const auto& c = cov.centers[b];
        int i0 = std::max(0, int((c[0] - cov.r) / g.h) - 1);
        int i1 = std::min(g.n[0] - 1, int((c[0] + cov.r) / g.h) + 1);
        int j0 = std::max(0, int((c[1] - cov.r) / g.h) - 1);
        int j1 = std::min(g.n[1] - 1, int((c[1] + cov.r) / g.h) + 1);
        int k0 = 0, k1 = g.n[2] - 1;
        if (g.d == 3) {
            k0 = std::max(0, int((c[2] - cov.r) / g.h) - 1);
            k1 = std::min(g.n[2] - 1, int((c[2] + cov.r) / g.h) + 1);
        }
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    double v = raw_at(c, g.center(0, i), g.center(1, j),
                                      g.d == 3 ? g.center(2, k) : 0.0);
                    cov.zeta[b].at(i, j, k) = v;
                    cell_sum[g.idx(i, j, k)] += v;
                }
        int ni0 = std::max(0, int((c[0] - cov.r) / g.h) - 1);
        int ni1 = std::min(nn[0] - 1, int((c[0] + cov.r) / g.h) + 2);
        int nj0 = std::max(0, int((c[1] - cov.r) / g.h) - 1);
        int nj1 = std::min(nn[1] - 1, int((c[1] + cov.r) / g.h) + 2);
        int nk0 = 0, nk1 = nn[2] - 1;
        if (g.d == 3) {
            nk0 = std::max(0, int((c[2] - cov.r) / g.h) - 1);
            nk1 = std::min(nn[2] - 1, int((c[2] + cov.r) / g.h) + 2);
        }
        for (int k = nk0; k <= nk1; ++k)
            for (int j = nj0; j <= nj1; ++j)
                for (int i = ni0; i <= ni1; ++i) {
                    double v = raw_at(c, i * g.h, j * g.h, g.d == 3 ? k * g.h : 0.0);
                    std::size_t nidx = (std::size_t(k) * nn[1] + j) * nn[0] + i;
                    cov.zeta_node[b][nidx] = v;
                    node_sum[nidx] += v;
                }
    }

    for (std::size_t c = 0; c < g.cells(); ++c) {
        if (!dom.mask[c]) {
            for (std::size_t b = 0; b < nb; ++b) cov.zeta[b].v[c] = 0.0;
            continue;
        }
        if (cell_sum[c] <= 0.0) {
            throw NumericError(
                "partition of unity: cell outside every covering ball, normalization would "
                "divide by zero");
        }
        for (std::size_t b = 0; b < nb; ++b) cov.zeta[b].v[c] /= cell_sum[c];
    }
    for (std::size_t c = 0; c < nodes; ++c) {
        if (node_sum[c] > 0.0)
            for (std::size_t b = 0; b < nb; ++b) cov.zeta_node[b][c] /= node_sum[c];
        else
            for (std::size_t b = 0; b < nb; ++b) cov.zeta_node[b][c] = 0.0;
    }
}

std::string covering_csv(const Covering& cov, const Domain& dom) {
    std::ostringstream out;
    out << "ball,cx,cy,cz,r";
    for (int sl = 0; sl < dom.num_slabs(); ++sl)
        out << ",q_slab" << sl << ",r_slab" << sl << ",R_slab" << sl;
    out << "\n";
    for (std::size_t b = 0; b < cov.num_balls(); ++b) {
        out << b << "," << format_double(cov.centers[b][0]) << ","
            << format_double(cov.centers[b][1]) << "," << format_double(cov.centers[b][2]) << ","
            << format_double(cov.r);
        for (int sl = 0; sl < dom.num_slabs(); ++sl)
            out << "," << format_double(cov.q[b][sl]) << "," << format_double(cov.rr[b][sl])
                << "," << format_double(cov.R[b][sl]);
        out << "\n";
    }
    return out.str();
}

namespace {

// sin^2(m pi x) basis: value and first two derivatives. Both the function and
// its derivative vanish at x = 0, 1, so potentials built from products have
// zero trace together with their curls and gradients.
struct Sin2 {
    double f, df, ddf;
};
Sin2 sin2_basis(int m, double x) {
    const double pi = 3.14159265358979323846;
    double s = std::sin(pi * m * x), c = std::cos(pi * m * x);
    return {s * s, 2 * pi * m * s * c, 2 * pi * pi * m * m * (c * c - s * s)};
}

// One random trig potential: value not needed, first and second partials are.
struct TrigPotential {
    int d;
    int K = 2;
    std::vector<double> coef;  // K^d coefficients
    std::array<double, 3> scale;

    void sample(Rng& rng, const GridLayout& g, double amp) {
        d = g.d;
        int n = 1;
        for (int a = 0; a < d; ++a) n *= K;
        coef.resize(n);
        for (double& c : coef) c = amp * rng.normal();
        for (int a = 0; a < 3; ++a) scale[a] = a < d && g.ext[a] > 0 ? 1.0 / g.ext[a] : 0.0;
    }
    // grad[a], hess[a][b] at physical point p
    void eval(const std::array<double, 3>& p, double grad[3], double hess[3][3]) const {
        for (int a = 0; a < 3; ++a) {
            grad[a] = 0;
            for (int b = 0; b < 3; ++b) hess[a][b] = 0;
        }
        std::array<double, 3> u;
        for (int a = 0; a < d; ++a) u[a] = p[a] * scale[a];
        int idx = 0;
        for (int m2 = 1; m2 <= (d == 3 ? K : 1); ++m2)
            for (int m1 = 1; m1 <= K; ++m1)
                for (int m0 = 1; m0 <= K; ++m0, ++idx) {
                    Sin2 b0 = sin2_basis(m0, u[0]);
                    Sin2 b1 = sin2_basis(m1, u[1]);
                    Sin2 b2 = d == 3 ? sin2_basis(m2, u[2]) : Sin2{1, 0, 0};
                    double c = coef[idx];
                    double v[3] = {b0.f, b1.f, b2.f};
                    double dv[3] = {b0.df * scale[0], b1.df * scale[1], b2.df * scale[2]};
                    double ddv[3] = {b0.ddf * scale[0] * scale[0], b1.ddf * scale[1] * scale[1],
                                     b2.ddf * scale[2] * scale[2]};
                    for (int a = 0; a < d; ++a) {
                        double g1 = c;
                        for (int x = 0; x < d; ++x) g1 *= (x == a) ? dv[x] : v[x];
                        grad[a] += g1;
                        for (int b = a; b < d; ++b) {
                            double g2 = c;
                            if (a == b) {
                                for (int x = 0; x < d; ++x) g2 *= (x == a) ? ddv[x] : v[x];
                            } else {
                                for (int x = 0; x < d; ++x)
                                    g2 *= (x == a || x == b) ? dv[x] : v[x];
                            }
                            hess[a][b] += g2;
                            if (a != b) hess[b][a] += g2;
                        }
                    }
                }
    }
};

}  // namespace

KornReport korn_constant_estimate(const Domain& dom, double q, int n_samples,
                                  std::uint64_t seed, bool divergence_free_only) {
    if (n_samples < 1) throw ConfigError("korn estimate needs n_samples >= 1");
    const GridLayout& g = dom.grid;
    Rng rng(seed);
    KornReport rep;
    double celldv = std::pow(g.h, g.d);

    for (int sample = 0; sample < n_samples; ++sample) {
        // u = curl(A) + grad(chi); in 2D the vector potential is the scalar A[2]
        TrigPotential A[3], chi;
        int ncomp = g.d == 3 ? 3 : 1;
        for (int c = 0; c < ncomp; ++c) A[c].sample(rng, g, 1.0);
        chi.sample(rng, g, divergence_free_only ? 0.0 : 0.5);

        double grad_q = 0.0, sym_q = 0.0, u_2 = 0.0;
        for (int k = 0; k < g.n[2]; ++k)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < g.n[0]; ++i) {
                    if (!dom.mask[g.idx(i, j, k)]) continue;
                    std::array<double, 3> p = {g.center(0, i), g.center(1, j),
                                               g.d == 3 ? g.center(2, k) : 0.0};
                    double u[3] = {0, 0, 0};
                    double J[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
                    if (g.d == 2) {
                        double ag[3], ah[3][3];
                        A[0].eval(p, ag, ah);
                        u[0] = ag[1];
                        u[1] = -ag[0];
                        J[0][0] = ah[1][0];
                        J[0][1] = ah[1][1];
                        J[1][0] = -ah[0][0];
                        J[1][1] = -ah[0][1];
                    } else {
                        double ag[3][3], ah[3][3][3];
                        for (int c = 0; c < 3; ++c) A[c].eval(p, ag[c], ah[c]);
                        // u_a = eps_{abc} d_b A_c
                        u[0] = ag[2][1] - ag[1][2];
                        u[1] = ag[0][2] - ag[2][0];
                        u[2] = ag[1][0] - ag[0][1];
                        for (int b = 0; b < 3; ++b) {
                            J[0][b] = ah[2][1][b] - ah[1][2][b];
                            J[1][b] = ah[0][2][b] - ah[2][0][b];
                            J[2][b] = ah[1][0][b] - ah[0][1][b];
                        }
                    }
                    double cg[3], ch[3][3];
                    chi.eval(p, cg, ch);
                    for (int a = 0; a < g.d; ++a) {
                        u[a] += cg[a];
                        for (int b = 0; b < g.d; ++b) J[a][b] += ch[a][b];
                    }
                    double gradF = 0, symF = 0, uu = 0;
                    for (int a = 0; a < g.d; ++a) {
                        uu += u[a] * u[a];
                        for (int b = 0; b < g.d; ++b) {
                            gradF += J[a][b] * J[a][b];
                            double s = 0.5 * (J[a][b] + J[b][a]);
                            symF += s * s;
                        }
                    }
                    grad_q += std::pow(std::sqrt(gradF), q) * celldv;
                    sym_q += std::pow(std::sqrt(symF), q) * celldv;
                    u_2 += uu * celldv;
                }
        double num = std::pow(grad_q, 1.0 / q);
        double den = std::pow(sym_q, 1.0 / q) + std::sqrt(u_2);
        if (den < 1e-14) {  // u = 0 sample: 0/0, skipped by rule
            ++rep.samples_skipped;
            continue;
        }
        rep.constant = std::max(rep.constant, num / den);
        ++rep.samples_used;
    }
    return rep;
}

}  // namespace vexflow
