#ifndef VEXFLOW_MOLLIFIER_HPP
#define VEXFLOW_MOLLIFIER_HPP

#include <vector>

#include "vexflow/domain.hpp"
#include "vexflow/exponent.hpp"
#include "vexflow/grid.hpp"

namespace vexflow {

// Discrete regularizing kernel: the standard bump exp(-1/(1-|x|^2)) sampled on
// grid offsets strictly inside the ball of radius eps and renormalized so the
// discrete mass is exactly 1.
struct Kernel {
    double eps = 0.0;
    double h = 0.0;
    int d = 2;
    int reach = 0;                          // taps per axis: offsets in [-reach, reach]
    std::vector<std::array<int, 3>> taps;
    std::vector<double> w;                  // normalized: sum w * h^d = 1

    double sup_norm() const;                // max tap value
    double grad_l1_norm() const;            // sqrt(sum over axes of ||d_a kernel||_1^2)
};

Kernel make_kernel(int d, double h, double eps);
Kernel make_time_kernel(double dt, double eps);

// Velocity-style vector field over the cylinder: one SpaceTimeField per component.
using VectorSpaceTime = std::vector<SpaceTimeField>;

// Spatial convolution per time slice with zero extension outside the box.
ScalarField spatial_mollify_slice(const ScalarField& u, const Kernel& k);
SpaceTimeField spatial_mollify(const SpaceTimeField& u, double eps);

enum class TimeExtension {
    Zero,        // zero outside (0, T)
    InitialHold  // value of the first slice for t <= 0, zero for t > T
};

SpaceTimeField temporal_mollify(const SpaceTimeField& u, double eps,
                                TimeExtension ext = TimeExtension::Zero);

// (u^eps psi)^eps with psi compactly supported in Omega. eps0 is measured from
// the grid, conservative by one cell; eps >= eps0 is a support-leak error.
double support_margin(const ScalarField& psi, const Domain& dom);
VectorSpaceTime localized_double_smooth(const VectorSpaceTime& u, const ScalarField& psi,
                                        double eps, const Domain& dom);

// Symmetric gradient of a vector slice by centered differences with zero
// extension; returns the d(d+1)/2 independent components, cell-centered.
std::vector<ScalarField> sym_gradient_slice(const std::vector<ScalarField>& comps);
ScalarField frobenius_slice(const std::vector<ScalarField>& sym_comps, int d);

struct LadderRung {
    double eps = 0.0;
    double l1_dist = 0.0;        // |(u^eps psi)^eps - u psi| in L1
    double modular_dist = 0.0;   // modular of D(u^eps psi)^eps - D(u psi)
    double linf_D = 0.0;         // sup |D(u^eps psi)^eps|
    double linf_bound_E = 0.0;   // the eps-independent constant E
};

struct ConvergenceLadder {
    std::vector<LadderRung> rungs;
    double E = 0.0;
    bool l1_monotone = false;
    bool modular_monotone = false;
    bool linf_bound_ok = false;
    bool pass = false;
};

ConvergenceLadder convergence_ladder(const VectorSpaceTime& u, const ScalarField& psi,
                                     const std::vector<double>& eps_list,
                                     const ExponentField& s, const Domain& dom,
                                     double l1_threshold = 1e-3,
                                     double modular_threshold = 1e-3);
std::string ladder_csv(const ConvergenceLadder& lad, int d);

// Minimizer independence: on each ball and slab the argmin of s equals the
// minimizer of |xi|^{s} for every |xi| >= 1.
struct MinimizerCheck {
    bool ok = true;
    double worst_gap = 0.0;
};
MinimizerCheck minimizer_independence_check(const ExponentField& s, const Covering& cov,
                                            const Domain& dom,
                                            const std::vector<double>& xi_values);

// Infimum comparability with M = E^{C/log 2} e^{C(d+1)}.
struct InfimumCheck {
    bool ok = true;
    double M = 0.0;
    double worst_ratio = 0.0;  // max over samples of |xi|^{s(y)} / inf_z |xi|^{s(z)}
};
InfimumCheck infimum_comparability_check(const ExponentField& s, const Domain& dom, double E,
                                         const std::vector<double>& gammas,
                                         std::uint64_t seed = 77001ull);

// Weighted L2 convergence of mollifications and L1 convergence of the double
// average, per-eps values for trend tests.
std::vector<double> weighted_l2_gap(const ScalarField& f, const ScalarField& psi,
                                    const std::vector<double>& eps_list);
std::vector<double> double_average_l1_gap(const SpaceTimeField& v,
                                          const std::vector<double>& eps_list);

}  // namespace vexflow

#endif
