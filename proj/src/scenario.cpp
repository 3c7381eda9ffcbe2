#include "vexflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vexflow/mollifier.hpp"

namespace vexflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return j;
}

}  // namespace

Scenario load_scenario(const std::string& config_path) {
    json j = load_json(config_path);
    Scenario sc;
    try {
        sc.name = j.value("name", std::string("scenario"));
        sc.seed = j.value("seed", std::uint64_t(1));
        sc.output_dir = j.value("output", std::string("out"));
        sc.threads = j.value("threads", 1);

        const json& dj = j.at("domain");
        sc.domain_spec.d = dj.value("d", 2);
        auto ext = dj.value("extents", std::vector<double>{1.0, 1.0});
        for (std::size_t a = 0; a < ext.size() && a < 3; ++a)
            sc.domain_spec.extents[a] = ext[a];
        sc.domain_spec.resolution = dj.value("resolution", 64);
        sc.domain_spec.mask_rule = dj.value("mask", std::string("all"));
        sc.domain_spec.T = dj.value("T", 1.0);
        if (dj.contains("slabs"))
            sc.domain_spec.slab_bounds = dj["slabs"].get<std::vector<double>>();

        const json& ej = j.at("exponent");
        sc.declared_s_max = ej.value("s_max", 0.0);
        if (ej.contains("expr")) {
            sc.exponent_kind = "expr";
            sc.exponent_exprs = {ej["expr"].get<std::string>()};
        } else if (ej.contains("slab_exprs")) {
            sc.exponent_kind = "slab_exprs";
            sc.exponent_exprs = ej["slab_exprs"].get<std::vector<std::string>>();
        } else if (ej.contains("csv")) {
            sc.exponent_kind = "csv";
            sc.exponent_csv_path = ej["csv"].get<std::string>();
        } else {
            throw ConfigError("exponent needs one of: expr, slab_exprs, csv");
        }

        if (j.contains("stress")) {
            const json& sj = j["stress"];
            std::string kind = sj.value("kind", std::string("power_law"));
            if (kind == "power_law") {
                sc.stress_template.kind = StressKind::PowerLaw;
                sc.stress_template.nu0 = sj.value("nu0", 1.0);
                sc.stress_template.nu1 = sj.value("nu1", 1.0);
            } else if (kind == "table") {
                sc.stress_template.kind = StressKind::CustomRadial;
                sc.stress_template.xi_knots = sj.at("xi").get<std::vector<double>>();
                sc.stress_template.phi_values = sj.at("phi").get<std::vector<double>>();
                if (sc.stress_template.xi_knots.size() != sc.stress_template.phi_values.size())
                    throw ConfigError("stress table: xi and phi lengths differ");
            } else {
                throw ConfigError("unknown stress kind: " + kind);
            }
            sc.stress_template.h_coercivity = sj.value("h", 1.0);
            sc.stress_template.c_coercivity = sj.value("c", 0.0);
        }

        if (j.contains("theta")) {
            if (j["theta"].is_array())
                sc.theta_list = j["theta"].get<std::vector<double>>();
            else
                sc.theta_list = {j["theta"].get<double>()};
        }
        sc.dt = j.value("dt", 0.0);
        sc.steps = j.value("steps", 0);

        if (j.contains("u0")) {
            const json& uj = j["u0"];
            if (uj.contains("stream")) {
                sc.init.kind = InitialVelocity::Stream;
                sc.init.stream = Expr::parse(uj["stream"].get<std::string>());
            } else if (uj.contains("ux")) {
                sc.init.kind = InitialVelocity::Components;
                sc.init.ux = Expr::parse(uj["ux"].get<std::string>());
                sc.init.uy = Expr::parse(uj.at("uy").get<std::string>());
            }
        }
        if (j.contains("f")) {
            const json& fj = j["f"];
            if (fj.contains("potential")) {
                sc.forcing.kind = Forcing::Potential;
                sc.forcing.potential = Expr::parse(fj["potential"].get<std::string>());
            } else if (fj.contains("fx")) {
                sc.forcing.kind = Forcing::Components;
                sc.forcing.fx = Expr::parse(fj["fx"].get<std::string>());
                sc.forcing.fy = Expr::parse(fj.at("fy").get<std::string>());
            }
        }

        if (j.contains("diagnostics")) {
            const json& gj = j["diagnostics"];
            if (gj.contains("energy")) {
                if (gj["energy"].is_object()) {
                    sc.diag_energy = true;
                    sc.energy_residual_max = gj["energy"].value("residual_max", 0.0);
                } else {
                    sc.diag_energy = gj["energy"].get<bool>();
                }
            }
            sc.diag_pressure = gj.value("pressure", false);
            if (gj.contains("local_energy")) {
                sc.diag_local_energy = true;
                sc.psi_expr = gj["local_energy"].at("psi").get<std::string>();
            }
            sc.diag_sweep = gj.value("sweep", false);
            if (gj.contains("minty")) {
                sc.minty_eta_samples = gj["minty"].value("eta_samples", 32);
                if (sc.psi_expr.empty() && gj["minty"].contains("psi"))
                    sc.psi_expr = gj["minty"]["psi"].get<std::string>();
            }
            sc.diag_interpolation = gj.value("interpolation", false);
            sc.diag_checkpoints = gj.value("checkpoints", false);
            if (gj.contains("korn")) {
                sc.korn_samples = gj["korn"].value("samples", 8);
                sc.korn_q = gj["korn"].value("q", 2.0);
            }
            if (gj.contains("ladder")) sc.ladder_eps = gj["ladder"].get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }

    if (sc.diag_sweep && sc.theta_list.size() < 2)
        throw ConfigError("sweep enabled but theta list has fewer than two entries");
    if (sc.steps > 0 && !(sc.dt > 0)) throw ConfigError("steps given but dt missing");
    if (sc.steps > 0 && sc.theta_list.empty())
        throw ConfigError("time stepping needs a theta value");
    if (sc.steps > 0 && sc.domain_spec.d != 2)
        throw ConfigError("the time-stepping solver runs at d = 2 only");
    if (sc.steps > 0 && sc.domain_spec.mask_rule != "all")
        throw ConfigError("the time-stepping solver needs an unmasked box domain");
    return sc;
}

namespace {

ExponentField build_exponent(const Scenario& sc, const Domain& dom) {
    if (sc.exponent_kind == "csv") {
        std::ifstream in(sc.exponent_csv_path);
        if (!in) throw ConfigError("cannot open exponent csv: " + sc.exponent_csv_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return exponent_from_csv(dom, buf.str(), sc.declared_s_max);
    }
    std::vector<ScalarField> slabs;
    const GridLayout& g = dom.grid;
    for (int sl = 0; sl < dom.num_slabs(); ++sl) {
        const std::string& text = sc.exponent_kind == "expr"
                                      ? sc.exponent_exprs[0]
                                      : sc.exponent_exprs.at(sl);
        Expr e = Expr::parse(text);
        ScalarField f(g);
        double tmid = dom.slab_mid(sl);
        for (int k = 0; k < g.n[2]; ++k)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < g.n[0]; ++i)
                    f.at(i, j, k) = e.eval(tmid, g.center(0, i), g.center(1, j),
                                           g.d == 3 ? g.center(2, k) : 0.0);
        slabs.push_back(std::move(f));
    }
    if (sc.exponent_kind == "slab_exprs" && int(sc.exponent_exprs.size()) != dom.num_slabs())
        throw ConfigError("slab_exprs length must equal the number of slabs");
    return make_exponent_field(dom, std::move(slabs), sc.declared_s_max);
}

}  // namespace

std::string VerifyReport::text() const {
    std::ostringstream out;
    for (const auto& f : findings)
        out << (f.pass ? "PASS " : "FAIL ") << f.check << ": " << f.detail << "\n";
    out << (pass ? "verification PASS" : "verification FAIL") << "\n";
    return out.str();
}

VerifyReport verify_scenario(const Scenario& sc) {
    VerifyReport rep;
    auto add = [&](const std::string& check, bool ok, const std::string& detail) {
        rep.findings.push_back({check, ok, detail});
        if (!ok) rep.pass = false;
    };

    Domain dom;
    try {
        dom = build_domain(sc.domain_spec);
        std::ostringstream d;
        d << dom.interior_cells << " cells, " << dom.num_slabs() << " slabs";
        add("domain", true, d.str());
    } catch (const std::exception& e) {
        add("domain", false, e.what());
        return rep;
    }

    ExponentField ex;
    try {
        ex = build_exponent(sc, dom);
        std::ostringstream d;
        d << "s in [" << ex.s_lo << ", " << ex.s_hi << "], bound (3d+2)/(d+2) = "
          << s_min_theory(dom.grid.d) << ", log-Holder C = " << ex.log_holder_uniform;
        add("exponent (A1)-(A2)", true, d.str());
    } catch (const std::exception& e) {
        add("exponent (A1)-(A2)", false, e.what());
        return rep;
    }

    try {
        StressModel model = sc.stress_template;
        model.s = &ex;
        StressSampler sampler;
        sampler.count = 2000;
        sampler.seed = sc.seed;
        AssumptionReport ar = verify_assumptions(model, sampler,
                                                 sc.theta_list.empty() ? 0.0
                                                                       : sc.theta_list.front());
        std::ostringstream d;
        d << "T2 min " << ar.t2_min << ", T3 min " << ar.t3_min;
        if (!ar.witness.empty()) d << "; " << ar.witness;
        add("stress (T1)-(T3)", ar.pass, d.str());
    } catch (const std::exception& e) {
        add("stress (T1)-(T3)", false, e.what());
    }

    try {
        Covering cov = build_covering(dom, ex);
        partition_of_unity(cov, dom);
        // arithmetic identities asserted on every covering
        bool chain_ok = true;
        double smin = s_min_theory(dom.grid.d);
        for (std::size_t b = 0; b < cov.num_balls(); ++b)
            for (int sl = 0; sl < dom.num_slabs(); ++sl) {
                if (cov.R[b][sl] - cov.rr[b][sl] < smin / dom.grid.d - 1e-12) chain_ok = false;
                if (cov.R[b][sl] < s0_exponent(dom.grid.d) - 1e-12) chain_ok = false;
            }
        std::ostringstream d;
        d << cov.num_balls() << " balls, r = " << cov.r;
        add("covering", chain_ok, d.str());
    } catch (const std::exception& e) {
        add("covering", false, e.what());
    }
    return rep;
}

namespace {

struct OutputWriter {
    fs::path dir;
    std::vector<std::string> files;

    void write(const std::string& name, const std::string& contents) {
        write_text_file((dir / name).string(), contents);
        files.push_back(name);
    }
};

}  // namespace

int run_scenario(const Scenario& sc) {
    Domain dom = build_domain(sc.domain_spec);
    ExponentField ex = build_exponent(sc, dom);

    OutputWriter out;
    out.dir = sc.output_dir;
    fs::create_directories(out.dir);

    bool all_pass = true;
    std::ostringstream summary;

    Covering cov = build_covering(dom, ex);
    partition_of_unity(cov, dom);
    out.write("covering.csv", covering_csv(cov, dom));
    double smin = s_min_theory(dom.grid.d);
    for (std::size_t b = 0; b < cov.num_balls(); ++b)
        for (int sl = 0; sl < dom.num_slabs(); ++sl)
            if (cov.R[b][sl] - cov.rr[b][sl] < smin / dom.grid.d - 1e-12) {
                all_pass = false;
                summary << "FAIL covering chain R - r >= s_min/d\n";
            }

    StressModel model = sc.stress_template;
    model.s = &ex;
    if (model.c_coercivity <= 0.0) {
        StressSampler cal;
        cal.seed = sc.seed;
        cal.count = 4000;
        model.c_coercivity = calibrate_coercivity(model, cal);
    }
    {
        StressSampler sampler;
        sampler.count = 10000;
        sampler.seed = sc.seed;
        AssumptionReport ar = verify_assumptions(
            model, sampler, sc.theta_list.empty() ? 0.0 : sc.theta_list.front());
        out.write("assumptions.csv", ar.csv());
        if (!ar.pass) {
            all_pass = false;
            summary << "FAIL stress assumptions: " << ar.witness << "\n";
        } else {
            summary << "PASS stress assumptions\n";
        }
    }

    if (sc.korn_samples > 0) {
        KornReport kr = korn_constant_estimate(dom, sc.korn_q, sc.korn_samples, sc.seed);
        std::ostringstream csv;
        csv << "q,constant,samples_used,samples_skipped\n"
            << format_double(sc.korn_q) << "," << format_double(kr.constant) << ","
            << kr.samples_used << "," << kr.samples_skipped << "\n";
        out.write("korn.csv", csv.str());
        summary << "PASS korn estimate " << kr.constant << "\n";
    }

    if (sc.steps > 0) {
        SolverConfig cfg;
        cfg.grid.nx = dom.grid.n[0];
        cfg.grid.ny = dom.grid.n[1];
        cfg.grid.h = dom.grid.h;
        cfg.dt = sc.dt;
        cfg.steps = sc.steps;
        cfg.exponent = &ex;
        cfg.stress = model;
        cfg.forcing = sc.forcing;
        cfg.init = sc.init;
        cfg.covering = &cov;
        cfg.threads = sc.threads;

        RunOptions opts;
        opts.energy = sc.diag_energy;
        opts.pressure = sc.diag_pressure || sc.diag_local_energy;
        opts.local_energy = sc.diag_local_energy;
        if (!sc.psi_expr.empty()) opts.psi = Expr::parse(sc.psi_expr);
        opts.minty_eta_samples = sc.minty_eta_samples;
        opts.store_stress_fields = sc.minty_eta_samples > 0;
        opts.seed = sc.seed;
        opts.keep_trajectory = sc.diag_checkpoints || !sc.ladder_eps.empty();

        auto gate_pressure = [&](const std::vector<PressureRow>& rows) {
            for (const auto& r : rows) {
                if (r.ph_mean_rel > 1e-10) {
                    all_pass = false;
                    summary << "FAIL ph mean-zero at step " << r.step << "\n";
                    return;
                }
                if (r.ph_harmonic_scaled > 1e-6) {
                    all_pass = false;
                    summary << "FAIL ph harmonicity at step " << r.step << "\n";
                    return;
                }
                if (r.p1_vs_unlocalized_rel > 1e-8) {
                    all_pass = false;
                    summary << "FAIL p1 localization identity at step " << r.step << "\n";
                    return;
                }
            }
            summary << "PASS pressure decomposition gates\n";
        };

        if (sc.diag_sweep) {
            cfg.theta = sc.theta_list.front();
            bool keep = sc.minty_eta_samples > 0;
            ThetaSweep sweep = theta_sweep(cfg, sc.theta_list, opts, 3.0, keep);
            out.write("sweep.csv", sweep_csv(sweep));
            if (!sweep.degenerate) {
                if (!sweep.growth_ok) {
                    all_pass = false;
                    summary << "FAIL sweep growth bound\n";
                }
                if (opts.pressure && !sweep.p4_decreasing) {
                    all_pass = false;
                    summary << "FAIL p4 trend\n";
                }
            } else {
                summary << "NOTE " << sweep.notes << "\n";
            }
            if (keep) {
                cfg.theta = sc.theta_list.front();
                MintyReport mr = minty_identification(sweep, cfg);
                out.write("minty.csv", minty_csv(mr));
                if (!mr.monotonicity_ok) {
                    all_pass = false;
                    summary << "FAIL minty monotonicity\n";
                }
                if (!mr.chi_trend_decreasing) {
                    all_pass = false;
                    summary << "FAIL minty identification trend\n";
                }
            }
            if (!sweep.runs.empty()) {
                const RunResult& finest = sweep.runs.back();
                if (sc.diag_energy) out.write("energy.csv", energy_csv(finest.energy));
                if (sc.diag_local_energy)
                    out.write("local_energy.csv", local_energy_csv(finest.local_energy));
                if (opts.pressure) {
                    out.write("pressure_norms.csv", pressure_csv(finest.pressure));
                    gate_pressure(finest.pressure);
                }
            }
        } else {
            cfg.theta = sc.theta_list.front();
            RunResult run = run_solver(cfg, opts);
            if (sc.diag_energy) {
                out.write("energy.csv", energy_csv(run.energy));
                if (sc.energy_residual_max > 0 && !run.energy.empty()) {
                    if (run.energy.back().residual > sc.energy_residual_max) {
                        all_pass = false;
                        summary << "FAIL energy residual gate\n";
                    } else {
                        summary << "PASS energy residual gate\n";
                    }
                }
            }
            if (sc.diag_local_energy)
                out.write("local_energy.csv", local_energy_csv(run.local_energy));
            if (opts.pressure) {
                out.write("pressure_norms.csv", pressure_csv(run.pressure));
                gate_pressure(run.pressure);
            }
            if (sc.diag_interpolation) {
                InterpolationReport ir = interpolation_check(run, cfg);
                std::ostringstream csv;
                csv << "key,value\n"
                    << "r0," << format_double(ir.r0) << "\n"
                    << "norm_r0," << format_double(ir.norm_r0) << "\n"
                    << "norm_linf_l2," << format_double(ir.norm_linf_l2) << "\n"
                    << "norm_l2_grad," << format_double(ir.norm_l2_grad) << "\n"
                    << "constant," << format_double(ir.constant) << "\n";
                out.write("interpolation.csv", csv.str());
            }
            if (sc.diag_checkpoints) {
                std::vector<double> times;
                for (std::size_t n = 0; n < run.trajectory.size(); ++n)
                    times.push_back(double(n) * sc.dt);
                write_checkpoints((out.dir / "checkpoints.bin").string(), cfg.grid, cfg.theta,
                                  run.trajectory, times);
                out.files.push_back("checkpoints.bin");
            }
            if (!sc.ladder_eps.empty() && !run.trajectory.empty()) {
                // mollification ladder on a few trajectory slices
                VectorSpaceTime vu(2);
                int nslices = std::min<std::size_t>(4, run.trajectory.size());
                std::size_t stride = std::max<std::size_t>(1, run.trajectory.size() / nslices);
                for (int c = 0; c < 2; ++c) {
                    for (std::size_t n = 0; n < run.trajectory.size(); n += stride) {
                        const FaceField& w = run.trajectory[n];
                        ScalarField sl(dom.grid);
                        for (int jj = 0; jj < cfg.grid.ny; ++jj)
                            for (int ii = 0; ii < cfg.grid.nx; ++ii)
                                sl.at(ii, jj) = c == 0
                                                    ? 0.5 * (w.U(ii, jj) + w.U(ii + 1, jj))
                                                    : 0.5 * (w.V(ii, jj) + w.V(ii, jj + 1));
                        vu[c].slices.push_back(std::move(sl));
                        vu[c].times.push_back(double(n) * sc.dt);
                        vu[c].weights.push_back(stride * sc.dt);
                    }
                }
                ScalarField psi_cells(dom.grid);
                Expr pe = Expr::parse(sc.psi_expr.empty() ? "1" : sc.psi_expr);
                for (int jj = 0; jj < cfg.grid.ny; ++jj)
                    for (int ii = 0; ii < cfg.grid.nx; ++ii)
                        psi_cells.at(ii, jj) =
                            pe.eval(0, (ii + 0.5) * cfg.grid.h, (jj + 0.5) * cfg.grid.h);
                ConvergenceLadder lad =
                    convergence_ladder(vu, psi_cells, sc.ladder_eps, ex, dom);
                out.write("ladder.csv", ladder_csv(lad, dom.grid.d));
                if (!lad.linf_bound_ok) {
                    all_pass = false;
                    summary << "FAIL ladder sup-norm bound\n";
                }
            }
        }
    }

    // manifest with content hashes of every output
    std::ostringstream man;
    man << "scenario: " << sc.name << "\n";
    man << "seed: " << sc.seed << "\n";
    man << "format_version: 1\n";
    std::sort(out.files.begin(), out.files.end());
    for (const auto& f : out.files)
        man << "file: " << f << " fnv1a64: " << std::hex << fnv1a_file((out.dir / f).string())
            << std::dec << "\n";
    man << summary.str();
    man << (all_pass ? "result: PASS\n" : "result: FAIL\n");
    write_text_file((out.dir / "manifest.txt").string(), man.str());
    return all_pass ? 0 : 1;
}

}  // namespace vexflow
