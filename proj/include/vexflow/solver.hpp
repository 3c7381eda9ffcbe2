#ifndef VEXFLOW_SOLVER_HPP
#define VEXFLOW_SOLVER_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vexflow/domain.hpp"
#include "vexflow/expr.hpp"
#include "vexflow/exponent.hpp"
#include "vexflow/mac.hpp"
#include "vexflow/stress.hpp"

namespace vexflow {

// Body force f in L^1_t L^2_x, given either componentwise or as the discrete
// gradient of a potential (which makes the work of a conservative force on a
// divergence-free field vanish exactly).
struct Forcing {
    enum Kind { Zero, Components, Potential } kind = Zero;
    Expr fx, fy, potential;

    FaceField sample(const MacGrid& g, double t) const;
};

struct InitialVelocity {
    enum Kind { ZeroInit, Stream, Components } kind = ZeroInit;
    Expr stream, ux, uy;

    // Stream samples the potential at nodes and takes the discrete curl, which
    // is divergence-free to rounding; Components are sampled at face centers.
    FaceField sample(const MacGrid& g) const;
};

struct SolverConfig {
    MacGrid grid;
    double dt = 0.0;
    int steps = 0;
    double theta = 0.0;  // must be positive; theta = 0 is reached only through sweeps
    const ExponentField* exponent = nullptr;
    StressModel stress;  // base model; regularization added via theta
    Forcing forcing;
    InitialVelocity init;
    const Covering* covering = nullptr;  // needed when pressure diagnostics run

    int fp_max_iterations = 500;
    double fp_tol = 1e-10;
    double projection_tol = 1e-13;
    int threads = 1;
};

struct EnergyRow {
    int step;
    double t;
    double kinetic;
    double dissipation_cum;
    double work_cum;
    double residual;
};

struct LocalEnergyRow {
    int step;
    double t;
    double kinetic_psi;
    double dissipation_cum;
    double convection_cum;
    double work_cum;
    double pressure_transport_cum;
    double residual;
};

struct PressureRow {
    int step;
    double t;
    double sum_p1_l2;
    double sum_p2_l2;
    double p3_l2;
    double p4_l2;
    double ph_l2;
    double p1_vs_unlocalized_rel;
    double ph_mean_rel;          // |mean ph| / (|Omega| sup|ph|) style scaled residual
    double ph_harmonic_scaled;   // max interior |Lap ph| h^2 / sup|ph|
    double gradient_fit_misfit;
};

struct StepStats {
    int fp_iterations = 0;
    double fp_residual = 0.0;
    double div_after = 0.0;
    double omega = 1.0;
};

struct RunOptions {
    bool energy = true;
    bool pressure = false;
    bool local_energy = false;
    std::optional<Expr> psi;        // cutoff for the local ledger / Minty weight
    bool store_stress_fields = false;  // keep per-step cell stress + |theta beta| stacks
    int minty_eta_samples = 0;
    std::uint64_t seed = 1ull;
    bool keep_trajectory = false;   // keep u snapshots (checkpoints)
};

struct RunResult {
    std::vector<EnergyRow> energy;
    std::vector<LocalEnergyRow> local_energy;
    std::vector<PressureRow> pressure;
    StepStats worst;

    FaceField u_final;
    ScalarField ph_final;

    // per-step stacks (enabled by store_stress_fields)
    std::vector<std::array<ScalarField, 3>> S_cells;      // xx, yy, xy(center-avg)
    std::vector<ScalarField> theta_beta_mag;              // |theta grad m(Du)| at cells
    std::vector<ScalarField> Du_mag;                      // |Du| at cells
    std::vector<double> step_times;

    // eq (6.8) accumulators: one integral per eta sample
    std::vector<double> eta_integrals;

    // monitored quantities (sweep columns)
    std::map<std::string, double> columns;

    std::vector<FaceField> trajectory;  // with keep_trajectory
};

RunResult run_solver(const SolverConfig& cfg, const RunOptions& opts);

// Theta continuation: one full run per theta (decreasing); columns tabulated
// per run, growth flags over the monitored group, p4 trend recorded.
struct ThetaSweep {
    std::vector<double> thetas;
    std::vector<std::map<std::string, double>> columns;
    std::vector<RunResult> runs;  // populated when minty diagnostics need the stacks
    bool growth_ok = true;        // monitored columns vary < growth_factor
    bool p4_decreasing = true;
    bool degenerate = false;      // single-theta sweep, trend checks skipped
    std::string notes;
};

ThetaSweep theta_sweep(SolverConfig cfg, const std::vector<double>& theta_list,
                       const RunOptions& base_opts, double growth_factor = 3.0,
                       bool keep_runs = false);

struct MintyReport {
    std::vector<double> thetas;
    std::vector<double> min_eta_integral;  // per theta: min over eta of (6.8) integral
    std::vector<double> reg_gap;           // ||S^th - S||_{L^{s'}} = ||theta beta||
    std::vector<double> chi_distance;      // ||S(Du^{th_min}) - S(Du^th)||_{L^{s'(t,x)}}
    bool monotonicity_ok = true;
    bool chi_trend_decreasing = true;
};

MintyReport minty_identification(const ThetaSweep& sweep, const SolverConfig& cfg);

// r0 = q (1 + 2/d) and the Ladyzhenskaya-type empirical constant of the run.
double r0_exponent(double q, int d);
struct InterpolationReport {
    double r0 = 0.0;
    double norm_r0 = 0.0;       // ||u||_{L^{r0}(Omega_T)}
    double norm_linf_l2 = 0.0;  // ||u||_{L^inf_t L^2}
    double norm_l2_grad = 0.0;  // ||grad u||_{L^2(Omega_T)}
    double constant = 0.0;      // norm_r0^2 / (norm_linf_l2 * norm_l2_grad), q = 2
};
InterpolationReport interpolation_check(const RunResult& run, const SolverConfig& cfg);

// Checkpoints: versioned little-endian binary blocks, one per step.
void write_checkpoints(const std::string& path, const MacGrid& g, double theta,
                       const std::vector<FaceField>& traj, const std::vector<double>& times);
struct CheckpointData {
    MacGrid grid;
    double theta = 0.0;
    std::vector<FaceField> traj;
    std::vector<double> times;
};
CheckpointData read_checkpoints(const std::string& path);

std::string energy_csv(const std::vector<EnergyRow>& rows);
std::string local_energy_csv(const std::vector<LocalEnergyRow>& rows);
std::string pressure_csv(const std::vector<PressureRow>& rows);
std::string sweep_csv(const ThetaSweep& sweep);
std::string minty_csv(const MintyReport& rep);

}  // namespace vexflow

#endif
