#include "vexflow/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vexflow/poisson.hpp"

namespace vexflow {

FaceField Forcing::sample(const MacGrid& g, double t) const {
    FaceField f(g);
    if (kind == Zero) return f;
    if (kind == Potential) {
        // discrete gradient of the cell-sampled potential: conservative exactly
        ScalarField pot(g.cell_layout());
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                pot.at(i, j) = potential.eval(t, (i + 0.5) * g.h, (j + 0.5) * g.h);
        return grad_to_faces(pot);
    }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) f.U(i, j) = fx.eval(t, i * g.h, (j + 0.5) * g.h);
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.V(i, j) = fy.eval(t, (i + 0.5) * g.h, j * g.h);
    return f;
}

FaceField InitialVelocity::sample(const MacGrid& g) const {
    FaceField w(g);
    if (kind == ZeroInit) return w;
    if (kind == Stream) {
        std::vector<double> psi(g.ncount());
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) psi[g.nidx(i, j)] = stream.eval(0.0, i * g.h, j * g.h);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i)
                w.U(i, j) = (psi[g.nidx(i, j + 1)] - psi[g.nidx(i, j)]) / g.h;
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                w.V(i, j) = -(psi[g.nidx(i + 1, j)] - psi[g.nidx(i, j)]) / g.h;
        w.zero_boundary_normal();  // psi constant along walls makes these zero already
        return w;
    }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) w.U(i, j) = ux.eval(0.0, i * g.h, (j + 0.5) * g.h);
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) w.V(i, j) = uy.eval(0.0, (i + 0.5) * g.h, j * g.h);
    return w;
}

namespace {

double conj_exp(double s) { return s / (s - 1.0); }

// exponent values at nodes: average of the adjacent cells that exist
std::vector<double> exponent_nodes(const ScalarField& slab) {
    int nx = slab.g.n[0], ny = slab.g.n[1];
    std::vector<double> out(std::size_t(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            double acc = 0.0;
            int cnt = 0;
            for (int dj = -1; dj <= 0; ++dj)
                for (int di = -1; di <= 0; ++di) {
                    int ci = i + di, cj = j + dj;
                    if (ci < 0 || cj < 0 || ci >= nx || cj >= ny) continue;
                    acc += slab.at(ci, cj);
                    ++cnt;
                }
            out[std::size_t(j) * (nx + 1) + i] = acc / cnt;
        }
    return out;
}

struct StressTensors {
    MacTensor alpha;       // S(t,x,Du), the unregularized base stress
    MacTensor beta;        // grad_xi m(|Du|)
    MacTensor s_theta;     // alpha + theta beta, the tensor the step actually uses
};

StressTensors eval_stress(const MacTensor& D, const StressModel& base, double theta,
                          double s_max, const ScalarField& s_cells,
                          const std::vector<double>& s_nodes) {
    const MacGrid& g = D.g;
    StressTensors out{MacTensor(g), MacTensor(g), MacTensor(g)};
    ScalarField mag_c = tensor_mag_cells(D);
    std::vector<double> mag_n = tensor_mag_nodes(D);
    for (std::size_t c = 0; c < D.xx.size(); ++c) {
        double wa = base.viscosity_weight(s_cells.v[c], mag_c.v[c]);
        double wb = s_max * (mag_c.v[c] > 0 ? std::pow(mag_c.v[c], s_max - 2.0) : 0.0);
        out.alpha.xx.v[c] = wa * D.xx.v[c];
        out.alpha.yy.v[c] = wa * D.yy.v[c];
        out.beta.xx.v[c] = wb * D.xx.v[c];
        out.beta.yy.v[c] = wb * D.yy.v[c];
        out.s_theta.xx.v[c] = out.alpha.xx.v[c] + theta * out.beta.xx.v[c];
        out.s_theta.yy.v[c] = out.alpha.yy.v[c] + theta * out.beta.yy.v[c];
    }
    for (std::size_t c = 0; c < D.xy.size(); ++c) {
        double wa = base.viscosity_weight(s_nodes[c], mag_n[c]);
        double wb = s_max * (mag_n[c] > 0 ? std::pow(mag_n[c], s_max - 2.0) : 0.0);
        out.alpha.xy[c] = wa * D.xy[c];
        out.beta.xy[c] = wb * D.xy[c];
        out.s_theta.xy[c] = out.alpha.xy[c] + theta * out.beta.xy[c];
    }
    return out;
}

ScalarField tensor_xy_to_cells(const MacTensor& T) {
    const MacGrid& g = T.g;
    ScalarField out(g.cell_layout());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.at(i, j) = 0.25 * (T.xy[g.nidx(i, j)] + T.xy[g.nidx(i + 1, j)] +
                                   T.xy[g.nidx(i, j + 1)] + T.xy[g.nidx(i + 1, j + 1)]);
    return out;
}

std::vector<CellSource> cell_sources(const ScalarField& rho) {
    std::vector<CellSource> out;
    const GridLayout& g = rho.g;
    for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i) {
            double v = rho.at(i, j);
            if (v != 0.0) out.push_back({i, j, 0, v});
        }
    return out;
}

ScalarField solve_on_cells(const ScalarField& rho, int threads) {
    FreeSpaceOp op;
    op.d = 2;
    op.h = rho.g.h;
    op.threads = threads;
    op.sources = cell_sources(rho);
    return op.eval_box(rho.g, 0, 0, 0);
}

double l2_cells(const ScalarField& f) {
    double acc = 0.0;
    for (double v : f.v) acc += v * v;
    return std::sqrt(acc * f.g.h * f.g.h);
}

double sup_cells(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.v) m = std::max(m, std::fabs(v));
    return m;
}

// full gradient magnitude squared at cells (symmetric + rotational part)
ScalarField grad_mag_sq_cells(const FaceField& w) {
    const MacGrid& g = w.g;
    ScalarField out(g.cell_layout());
    auto uat = [&](int i, int j) { return (j >= 0 && j < g.ny) ? w.U(i, j) : 0.0; };
    auto vat = [&](int i, int j) { return (i >= 0 && i < g.nx) ? w.V(i, j) : 0.0; };
    std::vector<double> nodal(g.ncount());
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double dudy = (uat(i, j) - uat(i, j - 1)) / g.h;
            double dvdx = (vat(i, j) - vat(i - 1, j)) / g.h;
            nodal[g.nidx(i, j)] = dudy * dudy + dvdx * dvdx;
        }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double dudx = (w.U(i + 1, j) - w.U(i, j)) / g.h;
            double dvdy = (w.V(i, j + 1) - w.V(i, j)) / g.h;
            double cross = 0.25 * (nodal[g.nidx(i, j)] + nodal[g.nidx(i + 1, j)] +
                                   nodal[g.nidx(i, j + 1)] + nodal[g.nidx(i + 1, j + 1)]);
            out.at(i, j) = dudx * dudx + dvdy * dvdy + cross;
        }
    return out;
}

double w1p_norm(const FaceField& w, double p) {
    ScalarField sp = speed_cells(w);
    ScalarField gm = grad_mag_sq_cells(w);
    double acc = 0.0;
    for (std::size_t c = 0; c < sp.size(); ++c)
        acc += std::pow(sp.v[c], p) + std::pow(std::sqrt(gm.v[c]), p);
    return std::pow(acc * w.g.h * w.g.h, 1.0 / p);
}

double w2inf_norm(const FaceField& w) {
    const MacGrid& g = w.g;
    double m0 = face_sup(w);
    ScalarField gm = grad_mag_sq_cells(w);
    double m1 = 0.0;
    for (double v : gm.v) m1 = std::max(m1, std::sqrt(v));
    // second differences of the face arrays as a W^{2,inf} surrogate
    double m2 = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            if (i + 1 <= g.nx && i - 1 >= 0)
                m2 = std::max(m2, std::fabs(w.U(i + 1, j) - 2 * w.U(i, j) + w.U(i - 1, j)) /
                                      (g.h * g.h));
            if (j + 1 < g.ny && j - 1 >= 0)
                m2 = std::max(m2, std::fabs(w.U(i, j + 1) - 2 * w.U(i, j) + w.U(i, j - 1)) /
                                      (g.h * g.h));
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (j + 1 <= g.ny && j - 1 >= 0)
                m2 = std::max(m2, std::fabs(w.V(i, j + 1) - 2 * w.V(i, j) + w.V(i, j - 1)) /
                                      (g.h * g.h));
            if (i + 1 < g.nx && i - 1 >= 0)
                m2 = std::max(m2, std::fabs(w.V(i + 1, j) - 2 * w.V(i, j) + w.V(i - 1, j)) /
                                      (g.h * g.h));
        }
    return m0 + m1 + m2;
}

std::vector<FaceField> dual_basis_divfree(const MacGrid& g) {
    std::vector<FaceField> out;
    const int modes[4][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    for (auto& m : modes) {
        InitialVelocity iv;
        iv.kind = InitialVelocity::Stream;
        std::ostringstream e;
        e << "sin(" << m[0] << "*pi*x/" << format_double(g.nx * g.h) << ")^2*sin(" << m[1]
          << "*pi*y/" << format_double(g.ny * g.h) << ")^2";
        iv.stream = Expr::parse(e.str());
        FaceField w = iv.sample(g);
        double n = w2inf_norm(w);
        if (n > 0) w.scale(1.0 / n);
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<FaceField> dual_basis_w1p(const MacGrid& g, double p) {
    std::vector<FaceField> out = dual_basis_divfree(g);
    const int modes[4][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    for (auto& m : modes) {
        ScalarField pot(g.cell_layout());
        const double pi = 3.14159265358979323846;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double sx = std::sin(pi * m[0] * (i + 0.5) / g.nx);
                double sy = std::sin(pi * m[1] * (j + 0.5) / g.ny);
                pot.at(i, j) = sx * sx * sy * sy;
            }
        out.push_back(grad_to_faces(pot));
    }
    for (auto& w : out) {
        double n = w1p_norm(w, p);
        if (n > 0) w.scale(1.0 / n);
    }
    return out;
}

SymTensor cell_tensor(double xx, double yy, double xy) {
    SymTensor t;
    t.d = 2;
    t.c[0] = xx;
    t.c[1] = yy;
    t.c[3] = xy;
    return t;
}

}  // namespace

RunResult run_solver(const SolverConfig& cfg, const RunOptions& opts) {
    if (!(cfg.dt > 0) || cfg.steps < 1) throw ConfigError("solver needs dt > 0 and steps >= 1");
    if (!(cfg.theta > 0))
        throw ConfigError("theta must be positive; the unregularized problem is reached only "
                           "through the theta sweep");
    if (!cfg.exponent) throw ConfigError("solver needs an exponent field");
    const MacGrid& g = cfg.grid;
    if (!cfg.exponent->grid.same_shape(g.cell_layout()))
        throw ConfigError("exponent grid does not match the solver grid");
    if (opts.pressure && !cfg.covering)
        throw ConfigError("pressure diagnostics need a covering with partition of unity");
    if (opts.local_energy && (!opts.pressure || !opts.psi))
        throw ConfigError("local energy ledger needs pressure diagnostics and a cutoff psi");

    const ExponentField& ex = *cfg.exponent;
    double s_max = ex.s_max;
    double sp_max = s_max / (s_max - 1.0);

    RunResult res;
    FaceField u = cfg.init.sample(g);
    {
        ScalarField d0 = div_cells(u);
        double dm = sup_cells(d0);
        double scale = std::max(1.0, face_sup(u) / g.h);
        if (dm > 1e-12 * scale) {
            ProjectionResult pr = project(u, cfg.projection_tol);
            FaceField diff = u;
            diff.axpy(-1.0, pr.w);
            res.columns["u0_projection_correction"] = std::sqrt(face_dot(diff, diff));
            u = pr.w;
        } else {
            res.columns["u0_projection_correction"] = 0.0;
        }
    }
    const FaceField u0 = u;
    double kinetic0 = 0.5 * face_dot(u, u);

    // cutoff samples for the local ledger and Minty weight
    ScalarField psi_cells(g.cell_layout());
    FaceField psi_faces(g);
    bool have_psi = opts.psi.has_value();
    if (have_psi) {
        const Expr& pe = *opts.psi;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                psi_cells.at(i, j) = pe.eval(0, (i + 0.5) * g.h, (j + 0.5) * g.h);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) psi_faces.U(i, j) = pe.eval(0, i * g.h, (j + 0.5) * g.h);
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) psi_faces.V(i, j) = pe.eval(0, (i + 0.5) * g.h, j * g.h);
    } else {
        for (double& v : psi_cells.v) v = 1.0;
    }

    // Minty eta samples (constant symmetric tensors)
    std::vector<SymTensor> etas;
    if (opts.minty_eta_samples > 0) {
        Rng rng(opts.seed ^ 0xabcdef12ull);
        for (int n = 0; n < opts.minty_eta_samples; ++n) {
            SymTensor e = cell_tensor(rng.normal(), rng.normal(), rng.normal());
            double mag = e.frobenius();
            double target = 1e-3 * std::pow(3.0 / 1e-3, rng.uniform());
            etas.push_back(e.scaled(mag > 0 ? target / mag : 0.0));
        }
        res.eta_integrals.assign(etas.size(), 0.0);
    }

    std::vector<FaceField> basis13, basis14;
    basis13 = dual_basis_divfree(g);
    basis14 = dual_basis_w1p(g, s_max);

    // accumulators
    double diss_cum = 0, work_cum = 0;
    double led_diss = 0, led_conv = 0, led_work = 0, led_ptrans = 0;
    double kin_psi0 = 0;
    if (have_psi) {
        for (std::size_t c = 0; c < u.u.size(); ++c) kin_psi0 += psi_faces.u[c] * u.u[c] * u.u[c];
        for (std::size_t c = 0; c < u.v.size(); ++c) kin_psi0 += psi_faces.v[c] * u.v[c] * u.v[c];
        kin_psi0 *= 0.5 * g.h * g.h;
    }

    FaceField Racc(g);          // sum dt (C - div S^theta - f)
    ScalarField Pcum(g.cell_layout());  // sum dt (sum of localized pressures)
    ScalarField ph(g.cell_layout());
    FaceField grad_ph(g);
    FaceField w_prev = u;  // u + grad ph at previous step (ph = 0 initially)

    double sup_u_l2sq = 2.0 * kinetic0;
    double mod_Du = 0, int_l2u = 0, int_gradsq = 0, l4 = 0, mod_S = 0, thDu = 0, thBeta = 0;
    double b13 = 0, b14 = 0, p4acc = 0, b11 = 0, b12 = 0;
    std::size_t nballs = cfg.covering ? cfg.covering->num_balls() : 0;
    std::vector<double> b4ball(nballs, 0.0), b8(nballs, 0.0), b8away(nballs, 0.0),
        b9(nballs, 0.0), b9away(nballs, 0.0);

    double omega = 1.0;
    double dt = cfg.dt;

    if (opts.keep_trajectory) res.trajectory.push_back(u);

    for (int step = 1; step <= cfg.steps; ++step) {
        double t_old = (step - 1) * dt;
        double t_new = step * dt;
        int slab = ex.slab_of(t_new);
        const ScalarField& s_cells = ex.slabs[slab];
        std::vector<double> s_nodes = exponent_nodes(s_cells);

        MacTensor Tconv = convection_tensor(u);
        FaceField conv = div_tensor(Tconv);
        FaceField f = cfg.forcing.sample(g, t_old);
        FaceField b = u;
        b.axpy(-dt, conv);
        b.axpy(dt, f);
        b.zero_boundary_normal();

        // implicit monotone solve: w = b + dt div S^theta(Dw)
        FaceField w = u;
        StressTensors st;
        auto residual_at = [&](const FaceField& ww, FaceField& r) {
            MacTensor D = sym_grad(ww);
            st = eval_stress(D, cfg.stress, cfg.theta, s_max, s_cells, s_nodes);
            FaceField ds = div_tensor(st.s_theta);
            r = ww;
            r.axpy(-1.0, b);
            r.axpy(-dt, ds);
            r.zero_boundary_normal();
            return std::sqrt(face_dot(r, r));
        };
        FaceField r(g), rt(g);
        double rn = residual_at(w, r);
        double r0 = rn;
        double floor_abs = 1e-15 * std::max(1.0, std::sqrt(face_dot(b, b)));
        int it = 0;
        std::vector<double> history;
        while (rn > cfg.fp_tol * std::max(r0, 1e-300) && rn > floor_abs &&
               it < cfg.fp_max_iterations) {
            FaceField wt = w;
            wt.axpy(-omega, r);
            double rtn = residual_at(wt, rt);
            int backs = 0;
            while (rtn >= rn && backs < 60) {
                omega *= 0.5;
                wt = w;
                wt.axpy(-omega, r);
                rtn = residual_at(wt, rt);
                ++backs;
            }
            if (rtn >= rn) {
                std::ostringstream msg;
                msg << "nonlinear step stalled at t = " << t_new << ", residual " << rn
                    << "; consider halving dt";
                throw NumericError(msg.str());
            }
            w = wt;
            std::swap(r, rt);
            rn = rtn;
            history.push_back(rn);
            omega = std::min(omega * 1.25, 1.0);
            ++it;
        }
        if (rn > cfg.fp_tol * std::max(r0, 1e-300) && rn > floor_abs) {
            std::ostringstream msg;
            msg << "nonlinear solve did not converge in " << cfg.fp_max_iterations
                << " iterations at t = " << t_new << " (residual " << rn << ", started at "
                << r0 << "); try halving dt. history tail:";
            for (std::size_t k = history.size() > 5 ? history.size() - 5 : 0;
                 k < history.size(); ++k)
                msg << " " << history[k];
            throw NumericError(msg.str());
        }
        // refresh stress tensors at the accepted w
        double final_res = residual_at(w, r);
        (void)final_res;
        res.worst.fp_iterations = std::max(res.worst.fp_iterations, it);
        res.worst.fp_residual = std::max(res.worst.fp_residual, rn);
        res.worst.omega = omega;

        ProjectionResult pr = project(w, cfg.projection_tol);
        FaceField u_new = pr.w;
        double grad_scale = 0.0;
        {
            ScalarField gm = grad_mag_sq_cells(u_new);
            for (double v : gm.v) grad_scale = std::max(grad_scale, std::sqrt(v));
        }
        if (pr.div_after > 1e-10 * std::max(1.0, grad_scale))
            throw NumericError("projection left divergence above tolerance at t = " +
                               format_double(t_new));
        res.worst.div_after = std::max(res.worst.div_after, pr.div_after);

        // ledger pieces that only need the step tensors
        MacTensor Du_new = sym_grad(u_new);
        diss_cum += dt * tensor_dot(st.s_theta, Du_new);
        work_cum += dt * face_dot(f, u_new);
        Racc.axpy(dt, conv);
        FaceField dvS = div_tensor(st.s_theta);
        Racc.axpy(-dt, dvS);
        Racc.axpy(-dt, f);

        double kinetic = 0.5 * face_dot(u_new, u_new);
        if (opts.energy) {
            EnergyRow row;
            row.step = step;
            row.t = t_new;
            row.kinetic = kinetic;
            row.dissipation_cum = diss_cum;
            row.work_cum = work_cum;
            row.residual = std::fabs(kinetic - kinetic0 + diss_cum - work_cum);
            res.energy.push_back(row);
        }

        // monitored columns
        sup_u_l2sq = std::max(sup_u_l2sq, 2.0 * kinetic);
        MacTensor Dw = sym_grad(w);
        ScalarField Dmag = tensor_mag_cells(Dw);
        ScalarField amag = tensor_mag_cells(st.alpha);
        ScalarField bmag = tensor_mag_cells(st.beta);
        ScalarField spd = speed_cells(u_new);
        ScalarField gm2 = grad_mag_sq_cells(u_new);
        double h2 = g.h * g.h;
        for (std::size_t c = 0; c < Dmag.size(); ++c) {
            double sv = s_cells.v[c];
            double spv = sv / (sv - 1.0);
            mod_Du += dt * h2 * std::pow(Dmag.v[c], sv);
            mod_S += dt * h2 * (amag.v[c] > 0 ? std::pow(amag.v[c], spv) : 0.0);
            thDu += dt * cfg.theta * h2 * std::pow(Dmag.v[c], s_max);
            thBeta += dt * cfg.theta * h2 * (bmag.v[c] > 0 ? std::pow(bmag.v[c], sp_max) : 0.0);
            int_l2u += dt * h2 * spd.v[c] * spd.v[c];
            int_gradsq += dt * h2 * gm2.v[c];
            l4 += dt * h2 * std::pow(spd.v[c], 4.0);
        }
        if (cfg.covering)
            for (std::size_t ball = 0; ball < nballs; ++ball) {
                double Rb = cfg.covering->R[ball][slab];
                const auto& c = cfg.covering->centers[ball];
                double rad2 = 4.0 * cfg.covering->r * cfg.covering->r;
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        if (dist_sq(spd.g, c, i, j, 0) > rad2) continue;
                        b4ball[ball] += dt * h2 * std::pow(spd.at(i, j), Rb);
                    }
            }

        // time-derivative dual surrogates
        FaceField dudt = u_new;
        dudt.axpy(-1.0, u);
        dudt.scale(1.0 / dt);
        double best = 0.0;
        for (const auto& wb : basis13) best = std::max(best, std::fabs(face_dot(dudt, wb)));
        b13 += dt * best;

        if (opts.store_stress_fields) {
            res.S_cells.push_back({st.alpha.xx, st.alpha.yy, tensor_xy_to_cells(st.alpha)});
            ScalarField tbm = bmag;
            for (double& v : tbm.v) v *= cfg.theta;
            res.theta_beta_mag.push_back(std::move(tbm));
            res.Du_mag.push_back(Dmag);
            res.step_times.push_back(t_new);
        }
        if (!etas.empty()) {
            ScalarField Dxyc = tensor_xy_to_cells(Dw);
            for (std::size_t e = 0; e < etas.size(); ++e) {
                double acc = 0.0;
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        std::size_t c = Dmag.g.idx(i, j, 0);
                        SymTensor Dt = cell_tensor(Dw.xx.v[c], Dw.yy.v[c], Dxyc.v[c]);
                        double sv = s_cells.v[c];
                        SymTensor Sd = cfg.stress.evaluate(sv, Dt);
                        SymTensor Se = cfg.stress.evaluate(sv, etas[e]);
                        acc += Sd.minus(Se).dot(Dt.minus(etas[e])) * psi_cells.v[c];
                    }
                res.eta_integrals[e] += dt * h2 * acc;
            }
        }

        // pressure decomposition
        if (opts.pressure) {
            const Covering& cov = *cfg.covering;
            ScalarField sum_p1(g.cell_layout()), sum_p2(g.cell_layout());
            for (std::size_t ball = 0; ball < nballs; ++ball) {
                MacTensor a_loc = localize(st.alpha, cov.zeta[ball], cov.zeta_node[ball]);
                ScalarField rho1 = divdiv_cells(a_loc);
                ScalarField p1 = solve_on_cells(rho1, cfg.threads);
                MacTensor t_loc = localize(Tconv, cov.zeta[ball], cov.zeta_node[ball]);
                ScalarField rho2 = divdiv_cells(t_loc);
                for (double& v : rho2.v) v = -v;  // +Lap p2 = divdiv(u x u zeta)
                ScalarField p2 = solve_on_cells(rho2, cfg.threads);
                double rp = conj_exp(cov.rr[ball][slab]);
                double Rb2 = cov.R[ball][slab] / 2.0;
                double away2 = (cov.r + 2 * g.h) * (cov.r + 2 * g.h);
                double sup1 = 0, sup2 = 0;
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        std::size_t c = p1.g.idx(i, j, 0);
                        sum_p1.v[c] += p1.v[c];
                        sum_p2.v[c] += p2.v[c];
                        b8[ball] += dt * h2 * std::pow(std::fabs(p1.v[c]), rp);
                        b9[ball] += dt * h2 * std::pow(std::fabs(p2.v[c]), Rb2);
                        if (dist_sq(p1.g, cov.centers[ball], i, j, 0) > away2) {
                            sup1 = std::max(sup1, std::fabs(p1.v[c]));
                            sup2 = std::max(sup2, std::fabs(p2.v[c]));
                        }
                    }
                b8away[ball] += dt * std::pow(sup1, sp_max);
                b9away[ball] += dt * std::pow(sup2, s0_exponent(2) / 2.0);
            }
            // unlocalized reference for the localization identity
            ScalarField p1_full = solve_on_cells(divdiv_cells(st.alpha), cfg.threads);
            ScalarField diff = p1_full;
            for (std::size_t c = 0; c < diff.size(); ++c) diff.v[c] -= sum_p1.v[c];
            double rel = l2_cells(p1_full) > 0 ? l2_cells(diff) / l2_cells(p1_full) : 0.0;

            ScalarField rho3(g.cell_layout());
            {
                ScalarField divf = div_cells(f);
                rho3 = divf;  // -Lap p3 = div f
            }
            ScalarField p3 = solve_on_cells(rho3, cfg.threads);
            MacTensor tb = st.beta;
            for (double& v : tb.xx.v) v *= cfg.theta;
            for (double& v : tb.yy.v) v *= cfg.theta;
            for (double& v : tb.xy) v *= cfg.theta;
            ScalarField p4 = solve_on_cells(divdiv_cells(tb), cfg.threads);

            ScalarField P_total = sum_p1;
            for (std::size_t c = 0; c < P_total.size(); ++c)
                P_total.v[c] += sum_p2.v[c] + p3.v[c] + p4.v[c];
            for (std::size_t c = 0; c < Pcum.size(); ++c) Pcum.v[c] += dt * P_total.v[c];

            // harmonic pressure via the least-squares gradient fit of the
            // accumulated momentum residual
            FaceField R = u_new;
            R.axpy(-1.0, u0);
            R.axpy(1.0, Racc);
            FaceField gradP = grad_to_faces(Pcum);
            R.axpy(-1.0, gradP);
            GradientFit fit = fit_gradient(R, cfg.projection_tol);
            ph = fit.p;
            grad_ph = grad_to_faces(ph);

            double ph_sup = sup_cells(ph);
            double mean = 0.0;
            for (double v : ph.v) mean += v * h2;
            double area = g.nx * g.ny * h2;
            double mean_rel = ph_sup > 0 ? std::fabs(mean) / (area * ph_sup) : 0.0;
            double harm = 0.0;
            for (int j = 2; j < g.ny - 2; ++j)
                for (int i = 2; i < g.nx - 2; ++i) {
                    double lap = (ph.at(i + 1, j) + ph.at(i - 1, j) + ph.at(i, j + 1) +
                                  ph.at(i, j - 1) - 4 * ph.at(i, j)) /
                                 h2;
                    harm = std::max(harm, std::fabs(lap));
                }
            double harm_scaled = ph_sup > 0 ? harm * h2 / ph_sup : 0.0;

            PressureRow prow;
            prow.step = step;
            prow.t = t_new;
            prow.sum_p1_l2 = l2_cells(sum_p1);
            prow.sum_p2_l2 = l2_cells(sum_p2);
            prow.p3_l2 = l2_cells(p3);
            prow.p4_l2 = l2_cells(p4);
            prow.ph_l2 = l2_cells(ph);
            prow.p1_vs_unlocalized_rel = rel;
            prow.ph_mean_rel = mean_rel;
            prow.ph_harmonic_scaled = harm_scaled;
            prow.gradient_fit_misfit = fit.misfit;
            res.pressure.push_back(prow);

            double p4n = 0.0;
            for (double v : p4.v) p4n += h2 * std::pow(std::fabs(v), sp_max);
            p4acc += dt * p4n;
            double phn = 0.0;
            for (double v : ph.v) phn += h2 * std::pow(std::fabs(v), sp_max);
            b11 = std::max(b11, std::pow(phn, 1.0 / sp_max));
            for (int j = 2; j < g.ny - 2; ++j)
                for (int i = 2; i < g.nx - 2; ++i) {
                    double dxx = (ph.at(i + 1, j) - 2 * ph.at(i, j) + ph.at(i - 1, j)) / h2;
                    double dyy = (ph.at(i, j + 1) - 2 * ph.at(i, j) + ph.at(i, j - 1)) / h2;
                    double dxy = (ph.at(i + 1, j + 1) - ph.at(i + 1, j - 1) -
                                  ph.at(i - 1, j + 1) + ph.at(i - 1, j - 1)) /
                                 (4 * h2);
                    b12 = std::max({b12, std::fabs(dxx), std::fabs(dyy), std::fabs(dxy)});
                }

            // local energy ledger terms, paired with the same discrete operators
            FaceField w_new = u_new;
            w_new.axpy(1.0, grad_ph);
            if (opts.local_energy) {
                FaceField phi(g);
                for (std::size_t c = 0; c < phi.u.size(); ++c)
                    phi.u[c] = psi_faces.u[c] * w_new.u[c];
                for (std::size_t c = 0; c < phi.v.size(); ++c)
                    phi.v[c] = psi_faces.v[c] * w_new.v[c];
                MacTensor Dphi = sym_grad(phi);
                led_diss += dt * tensor_dot(st.s_theta, Dphi);
                led_conv += dt * tensor_dot(Tconv, Dphi);
                led_work += dt * face_dot(f, phi);
                ScalarField divphi = div_cells(phi);
                double tr = 0.0;
                for (std::size_t c = 0; c < divphi.size(); ++c)
                    tr += P_total.v[c] * divphi.v[c];
                led_ptrans += -dt * tr * h2;

                double kin_psi = 0.0;
                for (std::size_t c = 0; c < w_new.u.size(); ++c)
                    kin_psi += psi_faces.u[c] * w_new.u[c] * w_new.u[c];
                for (std::size_t c = 0; c < w_new.v.size(); ++c)
                    kin_psi += psi_faces.v[c] * w_new.v[c] * w_new.v[c];
                kin_psi *= 0.5 * h2;

                LocalEnergyRow lrow;
                lrow.step = step;
                lrow.t = t_new;
                lrow.kinetic_psi = kin_psi;
                lrow.dissipation_cum = led_diss;
                lrow.convection_cum = led_conv;
                lrow.work_cum = led_work;
                lrow.pressure_transport_cum = led_ptrans;
                lrow.residual = std::fabs(kin_psi - kin_psi0 + led_diss - led_conv - led_work -
                                          led_ptrans);
                res.local_energy.push_back(lrow);
            }

            FaceField dwdt = w_new;
            dwdt.axpy(-1.0, w_prev);
            dwdt.scale(1.0 / dt);
            double best14 = 0.0;
            for (const auto& wb : basis14)
                best14 = std::max(best14, std::fabs(face_dot(dwdt, wb)));
            b14 += dt * best14;
            w_prev = w_new;
        }

        u = u_new;
        if (opts.keep_trajectory) res.trajectory.push_back(u);
    }

    res.u_final = u;
    res.ph_final = ph;
    res.columns["B1_sup_u_l2_sq"] = sup_u_l2sq;
    res.columns["B2_modular_Du"] = mod_Du;
    res.columns["B3_l2_w12"] = std::sqrt(int_l2u + int_gradsq);
    res.columns["B4_u_s0"] = std::pow(l4, 0.25);
    res.columns["B5_modular_S"] = mod_S;
    res.columns["B6_theta_Du_smax"] = thDu;
    res.columns["B7_theta_beta"] = thBeta;
    res.columns["B13_dtu_dual_surrogate"] = b13;
    res.columns["int_l4"] = l4;
    res.columns["int_gradsq"] = int_gradsq;
    if (nballs) {
        double m = 0;
        for (double v : b4ball) m = std::max(m, v);
        res.columns["B4b_ball_modular"] = m;
    }
    if (opts.pressure) {
        double m8 = 0, m8a = 0, m9 = 0, m9a = 0;
        for (std::size_t b = 0; b < nballs; ++b) {
            m8 = std::max(m8, b8[b]);
            m8a = std::max(m8a, b8away[b]);
            m9 = std::max(m9, b9[b]);
            m9a = std::max(m9a, b9away[b]);
        }
        res.columns["B8_p1_ball_modular"] = m8;
        res.columns["B8b_p1_away"] = std::pow(m8a, 1.0 / sp_max);
        res.columns["B9_p2_ball_modular"] = m9;
        res.columns["B9b_p2_away"] = std::pow(m9a, 2.0 / s0_exponent(2));
        res.columns["B10_p4_scaled"] =
            std::pow(p4acc, 1.0 / sp_max) * std::pow(cfg.theta, -1.0 / s_max);
        res.columns["C11_p4_norm"] = std::pow(p4acc, 1.0 / sp_max);
        res.columns["B11_ph_linf_lsmax"] = b11;
        res.columns["B12_ph_w2inf"] = b12;
        res.columns["B14_dtw_dual_surrogate"] = b14;
    }
    return res;
}

double r0_exponent(double q, int d) { return q * (1.0 + 2.0 / d); }

InterpolationReport interpolation_check(const RunResult& run, const SolverConfig& cfg) {
    InterpolationReport rep;
    rep.r0 = r0_exponent(2.0, 2);
    rep.norm_r0 = std::pow(run.columns.at("int_l4"), 0.25);
    rep.norm_linf_l2 = std::sqrt(run.columns.at("B1_sup_u_l2_sq"));
    rep.norm_l2_grad = std::sqrt(run.columns.at("int_gradsq"));
    double den = rep.norm_linf_l2 * rep.norm_l2_grad;
    rep.constant = den > 0 ? rep.norm_r0 * rep.norm_r0 / den : 0.0;
    (void)cfg;
    return rep;
}

ThetaSweep theta_sweep(SolverConfig cfg, const std::vector<double>& theta_list,
                       const RunOptions& base_opts, double growth_factor, bool keep_runs) {
    if (theta_list.empty()) throw ConfigError("theta sweep: empty theta list");
    for (std::size_t i = 1; i < theta_list.size(); ++i)
        if (!(theta_list[i] < theta_list[i - 1]))
            throw ConfigError("theta sweep: list must decrease");
    ThetaSweep sweep;
    sweep.thetas = theta_list;
    if (theta_list.size() == 1) {
        sweep.degenerate = true;
        sweep.notes = "single-theta sweep: trend checks skipped";
    }
    for (double th : theta_list) {
        cfg.theta = th;
        RunResult run = run_solver(cfg, base_opts);
        sweep.columns.push_back(run.columns);
        if (keep_runs) sweep.runs.push_back(std::move(run));
    }
    const char* monitored[] = {"B1_sup_u_l2_sq", "B2_modular_Du",     "B3_l2_w12",
                               "B4_u_s0",        "B5_modular_S",      "B6_theta_Du_smax",
                               "B7_theta_beta"};
    for (const char* key : monitored) {
        double lo = 1e300, hi = 0.0;
        for (const auto& cols : sweep.columns) {
            auto it = cols.find(key);
            if (it == cols.end()) continue;
            lo = std::min(lo, it->second);
            hi = std::max(hi, it->second);
        }
        if (hi > growth_factor * std::max(lo, 1e-300) && hi > 1e-12) sweep.growth_ok = false;
    }
    if (!sweep.degenerate) {
        for (std::size_t i = 1; i < sweep.columns.size(); ++i) {
            auto a = sweep.columns[i - 1].find("C11_p4_norm");
            auto b = sweep.columns[i].find("C11_p4_norm");
            if (a != sweep.columns[i - 1].end() && b != sweep.columns[i].end())
                if (!(b->second < a->second)) sweep.p4_decreasing = false;
        }
    }
    return sweep;
}

MintyReport minty_identification(const ThetaSweep& sweep, const SolverConfig& cfg) {
    if (sweep.runs.empty())
        throw ConfigError("minty identification needs a sweep run with kept runs");
    MintyReport rep;
    rep.thetas = sweep.thetas;
    const ExponentField& ex = *cfg.exponent;
    ExponentField conj = conjugate_field(ex);
    const RunResult& finest = sweep.runs.back();  // smallest theta is the limit surrogate

    for (std::size_t r = 0; r < sweep.runs.size(); ++r) {
        const RunResult& run = sweep.runs[r];
        double mn = 1e300;
        for (double v : run.eta_integrals) mn = std::min(mn, v);
        rep.min_eta_integral.push_back(run.eta_integrals.empty() ? 0.0 : mn);
        if (mn < -1e-8) rep.monotonicity_ok = false;

        SpaceTimeField tb;
        tb.slices = run.theta_beta_mag;
        tb.times = run.step_times;
        tb.weights.assign(run.step_times.size(), cfg.dt);
        rep.reg_gap.push_back(luxemburg_norm(tb, conj).luxemburg_norm);

        SpaceTimeField dist;
        dist.times = run.step_times;
        dist.weights.assign(run.step_times.size(), cfg.dt);
        for (std::size_t n = 0; n < run.S_cells.size(); ++n) {
            ScalarField mag(run.S_cells[n][0].g);
            for (std::size_t c = 0; c < mag.size(); ++c) {
                double dx = run.S_cells[n][0].v[c] - finest.S_cells[n][0].v[c];
                double dy = run.S_cells[n][1].v[c] - finest.S_cells[n][1].v[c];
                double dxy = run.S_cells[n][2].v[c] - finest.S_cells[n][2].v[c];
                mag.v[c] = std::sqrt(dx * dx + dy * dy + 2 * dxy * dxy);
            }
            dist.slices.push_back(std::move(mag));
        }
        rep.chi_distance.push_back(luxemburg_norm(dist, conj).luxemburg_norm);
    }
    for (std::size_t i = 1; i + 1 < rep.chi_distance.size(); ++i)
        if (!(rep.chi_distance[i] < rep.chi_distance[i - 1])) rep.chi_trend_decreasing = false;
    if (rep.chi_distance.size() >= 2) {
        std::size_t last = rep.chi_distance.size() - 1;
        if (!(rep.chi_distance[last] <= rep.chi_distance[last - 1]))
            rep.chi_trend_decreasing = false;
    }
    return rep;
}

void write_checkpoints(const std::string& path, const MacGrid& g, double theta,
                       const std::vector<FaceField>& traj, const std::vector<double>& times) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint format is little-endian");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot open checkpoint file: " + path);
    const char magic[4] = {'V', 'X', 'F', '1'};
    out.write(magic, 4);
    std::int32_t version = 1, nx = g.nx, ny = g.ny;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&nx), 4);
    out.write(reinterpret_cast<const char*>(&ny), 4);
    out.write(reinterpret_cast<const char*>(&g.h), 8);
    std::int32_t nsteps = std::int32_t(traj.size());
    out.write(reinterpret_cast<const char*>(&nsteps), 4);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        std::int32_t step = std::int32_t(n);
        double t = times[n];
        out.write(reinterpret_cast<const char*>(&step), 4);
        out.write(reinterpret_cast<const char*>(&t), 8);
        out.write(reinterpret_cast<const char*>(&theta), 8);
        out.write(reinterpret_cast<const char*>(traj[n].u.data()),
                  std::streamsize(traj[n].u.size() * 8));
        out.write(reinterpret_cast<const char*>(traj[n].v.data()),
                  std::streamsize(traj[n].v.size() * 8));
    }
}

CheckpointData read_checkpoints(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericError("cannot open checkpoint file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "VXF1", 4) != 0) throw NumericError("bad checkpoint magic");
    std::int32_t version, nx, ny, nsteps;
    double h;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&nx), 4);
    in.read(reinterpret_cast<char*>(&ny), 4);
    in.read(reinterpret_cast<char*>(&h), 8);
    in.read(reinterpret_cast<char*>(&nsteps), 4);
    if (version != 1) throw NumericError("unsupported checkpoint version");
    CheckpointData data;
    data.grid.nx = nx;
    data.grid.ny = ny;
    data.grid.h = h;
    for (int n = 0; n < nsteps; ++n) {
        std::int32_t step;
        double t;
        in.read(reinterpret_cast<char*>(&step), 4);
        in.read(reinterpret_cast<char*>(&t), 8);
        in.read(reinterpret_cast<char*>(&data.theta), 8);
        FaceField f(data.grid);
        in.read(reinterpret_cast<char*>(f.u.data()), std::streamsize(f.u.size() * 8));
        in.read(reinterpret_cast<char*>(f.v.data()), std::streamsize(f.v.size() * 8));
        if (!in) throw NumericError("truncated checkpoint file");
        data.traj.push_back(std::move(f));
        data.times.push_back(t);
    }
    return data;
}

std::string energy_csv(const std::vector<EnergyRow>& rows) {
    std::ostringstream out;
    out << "step,t,kinetic,dissipation_cum,work_cum,residual\n";
    for (const auto& r : rows)
        out << r.step << "," << format_double(r.t) << "," << format_double(r.kinetic) << ","
            << format_double(r.dissipation_cum) << "," << format_double(r.work_cum) << ","
            << format_double(r.residual) << "\n";
    return out.str();
}

std::string local_energy_csv(const std::vector<LocalEnergyRow>& rows) {
    std::ostringstream out;
    out << "step,t,kinetic_psi,dissipation_cum,convection_cum,work_cum,pressure_transport_cum,"
           "residual\n";
    for (const auto& r : rows)
        out << r.step << "," << format_double(r.t) << "," << format_double(r.kinetic_psi) << ","
            << format_double(r.dissipation_cum) << "," << format_double(r.convection_cum) << ","
            << format_double(r.work_cum) << "," << format_double(r.pressure_transport_cum)
            << "," << format_double(r.residual) << "\n";
    return out.str();
}

std::string pressure_csv(const std::vector<PressureRow>& rows) {
    std::ostringstream out;
    out << "step,t,sum_p1_l2,sum_p2_l2,p3_l2,p4_l2,ph_l2,p1_vs_unlocalized_rel,ph_mean_rel,"
           "ph_harmonic_scaled,gradient_fit_misfit\n";
    for (const auto& r : rows)
        out << r.step << "," << format_double(r.t) << "," << format_double(r.sum_p1_l2) << ","
            << format_double(r.sum_p2_l2) << "," << format_double(r.p3_l2) << ","
            << format_double(r.p4_l2) << "," << format_double(r.ph_l2) << ","
            << format_double(r.p1_vs_unlocalized_rel) << "," << format_double(r.ph_mean_rel)
            << "," << format_double(r.ph_harmonic_scaled) << ","
            << format_double(r.gradient_fit_misfit) << "\n";
    return out.str();
}

std::string sweep_csv(const ThetaSweep& sweep) {
    // union of keys, fixed order
    std::vector<std::string> keys;
    for (const auto& cols : sweep.columns)
        for (const auto& [k, v] : cols)
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::ostringstream out;
    out << "theta";
    for (const auto& k : keys) {
        out << "," << k;
        if (k.find("B13") == 0 || k.find("B14") == 0) out << "_surrogate";
    }
    out << "\n";
    for (std::size_t i = 0; i < sweep.thetas.size(); ++i) {
        out << format_double(sweep.thetas[i]);
        for (const auto& k : keys) {
            auto it = sweep.columns[i].find(k);
            out << "," << (it == sweep.columns[i].end() ? "" : format_double(it->second));
        }
        out << "\n";
    }
    return out.str();
}

std::string minty_csv(const MintyReport& rep) {
    std::ostringstream out;
    out << "theta,min_eta_integral,reg_gap,chi_distance\n";
    for (std::size_t i = 0; i < rep.thetas.size(); ++i)
        out << format_double(rep.thetas[i]) << "," << format_double(rep.min_eta_integral[i])
            << "," << format_double(rep.reg_gap[i]) << "," << format_double(rep.chi_distance[i])
            << "\n";
    return out.str();
}

}  // namespace vexflow
