#include "vexflow/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vexflow {

namespace {
double bump(double rho2) { return rho2 < 1.0 ? std::exp(-1.0 / (1.0 - rho2)) : 0.0; }
}  // namespace

Kernel make_kernel(int d, double h, double eps) {
    if (eps < 2.0 * h) throw NumericError("mollifier kernel under-resolved: eps < 2h");
    Kernel k;
    k.eps = eps;
    k.h = h;
    k.d = d;
    k.reach = int(eps / h);
    double mass = 0.0;
    for (int kz = (d == 3 ? -k.reach : 0); kz <= (d == 3 ? k.reach : 0); ++kz)
        for (int ky = -k.reach; ky <= k.reach; ++ky)
            for (int kx = -k.reach; kx <= k.reach; ++kx) {
                double rho2 = (kx * kx + ky * ky + kz * kz) * h * h / (eps * eps);
                double v = bump(rho2);
                if (v <= 0.0) continue;
                k.taps.push_back({kx, ky, kz});
                k.w.push_back(v);
                mass += v;
            }
    double celldv = std::pow(h, d);
    for (double& v : k.w) v /= mass * celldv;  // discrete unit mass: sum w h^d = 1
    return k;
}

Kernel make_time_kernel(double dt, double eps) {
    if (eps < 2.0 * dt) throw NumericError("temporal mollifier under-resolved: eps < 2*dt");
    Kernel k;
    k.eps = eps;
    k.h = dt;
    k.d = 1;
    k.reach = int(eps / dt);
    double mass = 0.0;
    for (int m = -k.reach; m <= k.reach; ++m) {
        double rho2 = m * m * dt * dt / (eps * eps);
        double v = bump(rho2);
        if (v <= 0.0) continue;
        k.taps.push_back({m, 0, 0});
        k.w.push_back(v);
        mass += v;
    }
    for (double& v : k.w) v /= mass * dt;
    return k;
}

double Kernel::sup_norm() const {
    double m = 0.0;
    for (double v : w) m = std::max(m, v);
    return m;
}

double Kernel::grad_l1_norm() const {
    // centered differences of the tap array, L1 per axis, combined in l2
    int R = reach + 1;
    int nz = d == 3 ? 2 * R + 1 : 1;
    int ny = 2 * R + 1, nx = 2 * R + 1;
    std::vector<double> grid(std::size_t(nx) * ny * nz, 0.0);
    auto at = [&](int i, int j, int k) -> double& {
        return grid[(std::size_t(d == 3 ? k + R : 0) * ny + (j + R)) * nx + (i + R)];
    };
    for (std::size_t t = 0; t < taps.size(); ++t) at(taps[t][0], taps[t][1], taps[t][2]) = w[t];
    double celldv = std::pow(h, d);
    double sum2 = 0.0;
    for (int axis = 0; axis < d; ++axis) {
        double l1 = 0.0;
        for (int k = (d == 3 ? -R + 1 : 0); k <= (d == 3 ? R - 1 : 0); ++k)
            for (int j = -R + 1; j <= R - 1; ++j)
                for (int i = -R + 1; i <= R - 1; ++i) {
                    double hi = at(i + (axis == 0), j + (axis == 1), k + (axis == 2));
                    double lo = at(i - (axis == 0), j - (axis == 1), k - (axis == 2));
                    l1 += std::fabs(hi - lo) / (2.0 * h) * celldv;
                }
        sum2 += l1 * l1;
    }
    return std::sqrt(sum2);
}

ScalarField spatial_mollify_slice(const ScalarField& u, const Kernel& k) {
    const GridLayout& g = u.g;
    ScalarField out(g);
    double celldv = std::pow(g.h, g.d);
    for (int kz = 0; kz < g.n[2]; ++kz)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                double acc = 0.0;
                for (std::size_t t = 0; t < k.taps.size(); ++t) {
                    int ii = i - k.taps[t][0];
                    int jj = j - k.taps[t][1];
                    int kk = kz - (g.d == 3 ? k.taps[t][2] : 0);
                    if (ii < 0 || jj < 0 || kk < 0 || ii >= g.n[0] || jj >= g.n[1] ||
                        kk >= g.n[2])
                        continue;  // zero extension
                    acc += k.w[t] * u.at(ii, jj, kk);
                }
                out.at(i, j, kz) = acc * celldv;
            }
    return out;
}

SpaceTimeField spatial_mollify(const SpaceTimeField& u, double eps) {
    if (u.num_slices() == 0) return u;
    Kernel k = make_kernel(u.slices[0].g.d, u.slices[0].g.h, eps);
    SpaceTimeField out = u;
    for (std::size_t m = 0; m < u.num_slices(); ++m)
        out.slices[m] = spatial_mollify_slice(u.slices[m], k);
    return out;
}

SpaceTimeField temporal_mollify(const SpaceTimeField& u, double eps, TimeExtension ext) {
    if (u.num_slices() < 2) throw NumericError("temporal mollify needs at least two slices");
    double dt = u.weights[0];
    for (double w : u.weights)
        if (std::fabs(w - dt) > 1e-12 * dt)
            throw NumericError("temporal mollify requires uniformly sampled slices");
    Kernel k = make_time_kernel(dt, eps);
    SpaceTimeField out = u;
    int nt = int(u.num_slices());
    for (int m = 0; m < nt; ++m) {
        ScalarField acc(u.slices[0].g);
        for (std::size_t t = 0; t < k.taps.size(); ++t) {
            int mm = m - k.taps[t][0];
            const ScalarField* src = nullptr;
            if (mm >= 0 && mm < nt) {
                src = &u.slices[mm];
            } else if (mm < 0 && ext == TimeExtension::InitialHold) {
                src = &u.slices[0];
            } else {
                continue;  // zero extension
            }
            double w = k.w[t] * dt;
            for (std::size_t c = 0; c < acc.size(); ++c) acc.v[c] += w * src->v[c];
        }
        out.slices[m] = std::move(acc);
    }
    return out;
}

double support_margin(const ScalarField& psi, const Domain& dom) {
    double margin = 1e300;
    bool any = false;
    for (std::size_t c = 0; c < psi.size(); ++c)
        if (psi.v[c] != 0.0) {
            any = true;
            if (dom.mask[c] == 0)
                throw NumericError("cutoff psi is supported outside Omega");
            margin = std::min(margin, dom.boundary_dist[c]);
        }
    if (!any) throw NumericError("cutoff psi vanishes identically");
    return margin;
}

VectorSpaceTime localized_double_smooth(const VectorSpaceTime& u, const ScalarField& psi,
                                        double eps, const Domain& dom) {
    double eps0 = 0.5 * support_margin(psi, dom) - dom.grid.h;  // conservative by one cell
    if (!(eps < eps0))
        throw NumericError("support leak: eps >= eps0 = " + format_double(eps0));
    Kernel k = make_kernel(dom.grid.d, dom.grid.h, eps);
    VectorSpaceTime out(u.size());
    for (std::size_t c = 0; c < u.size(); ++c) {
        out[c] = u[c];
        for (std::size_t m = 0; m < u[c].num_slices(); ++m) {
            ScalarField smoothed = spatial_mollify_slice(u[c].slices[m], k);
            for (std::size_t i = 0; i < smoothed.size(); ++i) smoothed.v[i] *= psi.v[i];
            out[c].slices[m] = spatial_mollify_slice(smoothed, k);
        }
    }
    return out;
}

std::vector<ScalarField> sym_gradient_slice(const std::vector<ScalarField>& comps) {
    const GridLayout& g = comps[0].g;
    int d = g.d;
    auto dval = [&](const ScalarField& f, int axis, int i, int j, int k) {
        int ip = i + (axis == 0), im = i - (axis == 0);
        int jp = j + (axis == 1), jm = j - (axis == 1);
        int kp = k + (axis == 2), km = k - (axis == 2);
        double hi = (ip < g.n[0] && jp < g.n[1] && kp < g.n[2]) ? f.at(ip, jp, kp) : 0.0;
        double lo = (im >= 0 && jm >= 0 && km >= 0) ? f.at(im, jm, km) : 0.0;
        return (hi - lo) / (2.0 * g.h);
    };
    int ncomp = d == 2 ? 3 : 6;  // xx, yy, (zz), xy, (xz, yz)
    std::vector<ScalarField> out(ncomp, ScalarField(g));
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                double J[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) J[a][b] = dval(comps[a], b, i, j, k);
                if (d == 2) {
                    out[0].at(i, j, k) = J[0][0];
                    out[1].at(i, j, k) = J[1][1];
                    out[2].at(i, j, k) = 0.5 * (J[0][1] + J[1][0]);
                } else {
                    out[0].at(i, j, k) = J[0][0];
                    out[1].at(i, j, k) = J[1][1];
                    out[2].at(i, j, k) = J[2][2];
                    out[3].at(i, j, k) = 0.5 * (J[0][1] + J[1][0]);
                    out[4].at(i, j, k) = 0.5 * (J[0][2] + J[2][0]);
                    out[5].at(i, j, k) = 0.5 * (J[1][2] + J[2][1]);
                }
            }
    return out;
}

ScalarField frobenius_slice(const std::vector<ScalarField>& sym, int d) {
    ScalarField out(sym[0].g);
    int ndiag = d;
    for (std::size_t c = 0; c < out.size(); ++c) {
        double acc = 0.0;
        for (int a = 0; a < ndiag; ++a) acc += sym[a].v[c] * sym[a].v[c];
        for (std::size_t a = ndiag; a < sym.size(); ++a) acc += 2.0 * sym[a].v[c] * sym[a].v[c];
        out.v[c] = std::sqrt(acc);
    }
    return out;
}

namespace {

double linf_time_l1_space(const VectorSpaceTime& u) {
    // sqrt(sum over components of ||u_c||_{L^inf_t L^1_x}^2)
    const GridLayout& g = u[0].slices[0].g;
    double celldv = std::pow(g.h, g.d);
    double sum2 = 0.0;
    for (const auto& comp : u) {
        double best = 0.0;
        for (const auto& sl : comp.slices) {
            double l1 = 0.0;
            for (double v : sl.v) l1 += std::fabs(v);
            best = std::max(best, l1 * celldv);
        }
        sum2 += best * best;
    }
    return std::sqrt(sum2);
}

}  // namespace

ConvergenceLadder convergence_ladder(const VectorSpaceTime& u, const ScalarField& psi,
                                     const std::vector<double>& eps_list,
                                     const ExponentField& s, const Domain& dom,
                                     double l1_threshold, double modular_threshold) {
    if (eps_list.empty()) throw ConfigError("convergence ladder: empty eps list");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw ConfigError("convergence ladder: eps list must decrease");

    const GridLayout& g = dom.grid;
    int d = g.d;
    double celldv = std::pow(g.h, d);
    const std::size_t nt = u[0].num_slices();

    // reference u psi and its symmetric gradient
    VectorSpaceTime upsi(u.size());
    for (std::size_t c = 0; c < u.size(); ++c) {
        upsi[c] = u[c];
        for (auto& sl : upsi[c].slices)
            for (std::size_t i = 0; i < sl.size(); ++i) sl.v[i] *= psi.v[i];
    }
    std::vector<std::vector<ScalarField>> D_ref(nt);
    for (std::size_t m = 0; m < nt; ++m) {
        std::vector<ScalarField> comps;
        for (const auto& c : upsi) comps.push_back(c.slices[m]);
        D_ref[m] = sym_gradient_slice(comps);
    }

    double uL = linf_time_l1_space(u);
    double psiSup = 0.0;
    for (double v : psi.v) psiSup = std::max(psiSup, std::fabs(v));

    ConvergenceLadder lad;
    double E = 0.0;
    for (double eps : eps_list) {
        Kernel k = make_kernel(d, g.h, eps);
        E = std::max(E, std::pow(eps, d + 1) * k.grad_l1_norm() * k.sup_norm() * psiSup * uL);
    }
    lad.E = E;

    for (double eps : eps_list) {
        VectorSpaceTime w = localized_double_smooth(u, psi, eps, dom);
        LadderRung rung;
        rung.eps = eps;
        rung.linf_bound_E = E;
        SpaceTimeField diffmag = u[0];  // layout carrier for the modular
        for (std::size_t m = 0; m < nt; ++m) {
            double l1 = 0.0;
            for (std::size_t c = 0; c < u.size(); ++c)
                for (std::size_t i = 0; i < w[c].slices[m].size(); ++i)
                    l1 += std::fabs(w[c].slices[m].v[i] - upsi[c].slices[m].v[i]);
            rung.l1_dist += l1 * celldv * u[0].weights[m];

            std::vector<ScalarField> comps;
            for (const auto& c : w) comps.push_back(c.slices[m]);
            std::vector<ScalarField> Dw = sym_gradient_slice(comps);
            ScalarField Dmag = frobenius_slice(Dw, d);
            for (double v : Dmag.v) rung.linf_D = std::max(rung.linf_D, v);
            for (std::size_t a = 0; a < Dw.size(); ++a)
                for (std::size_t i = 0; i < Dw[a].size(); ++i)
                    Dw[a].v[i] -= D_ref[m][a].v[i];
            diffmag.slices[m] = frobenius_slice(Dw, d);
        }
        rung.modular_dist = modular(diffmag, s);
        lad.rungs.push_back(rung);
    }

    lad.l1_monotone = lad.modular_monotone = true;
    for (std::size_t i = 1; i < lad.rungs.size(); ++i) {
        if (lad.rungs[i].l1_dist > lad.rungs[i - 1].l1_dist) lad.l1_monotone = false;
        if (lad.rungs[i].modular_dist > lad.rungs[i - 1].modular_dist)
            lad.modular_monotone = false;
    }
    lad.linf_bound_ok = true;
    for (const auto& r : lad.rungs)
        if (r.linf_D * std::pow(r.eps, d + 1) > E * (1.0 + 1e-12)) lad.linf_bound_ok = false;
    const LadderRung& last = lad.rungs.back();
    lad.pass = lad.l1_monotone && lad.modular_monotone && lad.linf_bound_ok &&
               last.l1_dist < l1_threshold && last.modular_dist < modular_threshold;
    return lad;
}

std::string ladder_csv(const ConvergenceLadder& lad, int d) {
    std::ostringstream out;
    out << "eps,l1_dist,modular_dist,linf_eps_pow,E\n";
    for (const auto& r : lad.rungs)
        out << format_double(r.eps) << "," << format_double(r.l1_dist) << ","
            << format_double(r.modular_dist) << ","
            << format_double(r.linf_D * std::pow(r.eps, d + 1)) << "," << format_double(lad.E)
            << "\n";
    return out.str();
}

MinimizerCheck minimizer_independence_check(const ExponentField& s, const Covering& cov,
                                            const Domain& dom,
                                            const std::vector<double>& xi_values) {
    MinimizerCheck rep;
    const GridLayout& g = dom.grid;
    double rad2 = cov.r * cov.r;
    for (std::size_t b = 0; b < cov.num_balls(); ++b)
        for (int sl = 0; sl < s.num_slabs(); ++sl) {
            double smin = 1e300;
            bool any = false;
            for (int k = 0; k < g.n[2]; ++k)
                for (int j = 0; j < g.n[1]; ++j)
                    for (int i = 0; i < g.n[0]; ++i) {
                        if (!dom.mask[g.idx(i, j, k)]) continue;
                        if (dist_sq(g, cov.centers[b], i, j, k) > rad2) continue;
                        smin = std::min(smin, s.value(sl, i, j, k));
                        any = true;
                    }
            if (!any) continue;
            for (double xi : xi_values) {
                if (xi < 1.0) continue;
                // min over the ball of xi^{s} must equal xi^{min s}
                double direct = 1e300;
                for (int k = 0; k < g.n[2]; ++k)
                    for (int j = 0; j < g.n[1]; ++j)
                        for (int i = 0; i < g.n[0]; ++i) {
                            if (!dom.mask[g.idx(i, j, k)]) continue;
                            if (dist_sq(g, cov.centers[b], i, j, k) > rad2) continue;
                            direct = std::min(direct, std::pow(xi, s.value(sl, i, j, k)));
                        }
                double via_min = std::pow(xi, smin);
                double gap = std::fabs(direct - via_min) / via_min;
                rep.worst_gap = std::max(rep.worst_gap, gap);
                if (gap > 1e-12) rep.ok = false;
            }
        }
    return rep;
}

InfimumCheck infimum_comparability_check(const ExponentField& s, const Domain& dom, double E,
                                         const std::vector<double>& gammas,
                                         std::uint64_t seed) {
    InfimumCheck rep;
    double C = s.log_holder_uniform;
    rep.M = std::pow(E, C / std::log(2.0)) * std::exp(C * (dom.grid.d + 1));
    const GridLayout& g = dom.grid;
    Rng rng(seed);
    for (double gamma : gammas) {
        if (!(gamma > 0 && gamma < 0.5)) continue;
        double xi_max = E * std::pow(gamma, -(g.d + 1));
        for (int trial = 0; trial < 24; ++trial) {
            int ci = int(rng.uniform() * g.n[0]);
            int cj = int(rng.uniform() * g.n[1]);
            int ck = g.d == 3 ? int(rng.uniform() * g.n[2]) : 0;
            std::array<double, 3> c = {g.center(0, ci), g.center(1, cj),
                                       g.d == 3 ? g.center(2, ck) : 0.0};
            for (int sl = 0; sl < s.num_slabs(); ++sl) {
                double lo = 1e300, hi = -1e300;
                int reach = int(gamma / g.h) + 1;
                for (int k = std::max(0, ck - reach);
                     k <= std::min(g.n[2] - 1, ck + (g.d == 3 ? reach : 0)); ++k)
                    for (int j = std::max(0, cj - reach); j <= std::min(g.n[1] - 1, cj + reach);
                         ++j)
                        for (int i = std::max(0, ci - reach);
                             i <= std::min(g.n[0] - 1, ci + reach); ++i) {
                            if (!dom.mask[g.idx(i, j, k)]) continue;
                            if (dist_sq(g, c, i, j, k) > gamma * gamma) continue;
                            double v = s.value(sl, i, j, k);
                            lo = std::min(lo, v);
                            hi = std::max(hi, v);
                        }
                if (hi < lo) continue;
                for (int e = 0; e < 6; ++e) {
                    double xi = std::exp(std::log(xi_max) * e / 5.0);  // [1, xi_max]
                    double ratio = std::pow(xi, hi - lo);              // = xi^{s(y)} / inf
                    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
                    if (ratio > rep.M * (1 + 1e-12)) rep.ok = false;
                }
            }
        }
    }
    return rep;
}

std::vector<double> weighted_l2_gap(const ScalarField& f, const ScalarField& psi,
                                    const std::vector<double>& eps_list) {
    const GridLayout& g = f.g;
    double celldv = std::pow(g.h, g.d);
    double ref = 0.0;
    for (std::size_t c = 0; c < f.size(); ++c) ref += f.v[c] * f.v[c] * psi.v[c];
    ref *= celldv;
    std::vector<double> gaps;
    for (double eps : eps_list) {
        Kernel k = make_kernel(g.d, g.h, eps);
        ScalarField fe = spatial_mollify_slice(f, k);
        double val = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c) val += fe.v[c] * fe.v[c] * psi.v[c];
        val *= celldv;
        gaps.push_back(std::fabs(val - ref));
    }
    return gaps;
}

std::vector<double> double_average_l1_gap(const SpaceTimeField& v,
                                          const std::vector<double>& eps_list) {
    const GridLayout& g = v.slices[0].g;
    double celldv = std::pow(g.h, g.d);
    std::vector<double> gaps;
    for (double eps : eps_list) {
        Kernel k = make_kernel(g.d, g.h, eps);
        double total = 0.0;
        for (std::size_t m = 0; m < v.num_slices(); ++m) {
            ScalarField once = spatial_mollify_slice(v.slices[m], k);
            ScalarField twice = spatial_mollify_slice(once, k);
            double l1 = 0.0;
            for (std::size_t c = 0; c < twice.size(); ++c)
                l1 += std::fabs(twice.v[c] - v.slices[m].v[c]);
            total += l1 * celldv * v.weights[m];
        }
        gaps.push_back(total);
    }
    return gaps;
}

}  // namespace vexflow
