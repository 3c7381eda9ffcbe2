#ifndef VEXFLOW_SCENARIO_HPP
#define VEXFLOW_SCENARIO_HPP

#include <memory>
#include <string>
#include <vector>

#include "vexflow/domain.hpp"
#include "vexflow/exponent.hpp"
#include "vexflow/solver.hpp"
#include "vexflow/stress.hpp"

namespace vexflow {

// One instance of the problem data (stress law, exponent, forcing, initial
// velocity) plus the diagnostic toggles, loaded from a JSON config.
struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    DomainSpec domain_spec;
    std::string exponent_kind;             // "expr", "slab_exprs", "csv"
    std::vector<std::string> exponent_exprs;
    std::string exponent_csv_path;
    double declared_s_max = 0.0;

    StressModel stress_template;           // exponent bound later
    std::vector<double> theta_list;
    double dt = 0.0;
    int steps = 0;
    InitialVelocity init;
    Forcing forcing;

    bool diag_energy = true;
    double energy_residual_max = 0.0;      // 0 = no gate
    bool diag_pressure = false;
    bool diag_local_energy = false;
    std::string psi_expr;
    bool diag_sweep = false;
    int minty_eta_samples = 0;
    bool diag_interpolation = false;
    bool diag_checkpoints = false;
    int korn_samples = 0;
    double korn_q = 2.0;
    std::vector<double> ladder_eps;
    std::string output_dir = "out";
    int threads = 1;
};

Scenario load_scenario(const std::string& config_path);

struct VerifyFinding {
    std::string check;
    bool pass;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyFinding> findings;
    bool pass = true;
    std::string text() const;
};

// Dry-run validation: exponent bounds and log-Holder data, stress sampling,
// covering feasibility. No time stepping.
VerifyReport verify_scenario(const Scenario& sc);

// Full pipeline; writes CSVs, checkpoints and manifest into the output
// directory. Returns 0 when every enabled gate passed.
int run_scenario(const Scenario& sc);

}  // namespace vexflow

#endif
