#ifndef VEXFLOW_STRESS_HPP
#define VEXFLOW_STRESS_HPP

#include <array>
#include <string>
#include <vector>

#include "vexflow/exponent.hpp"
#include "vexflow/grid.hpp"

namespace vexflow {

// Symmetric d x d tensor stored by independent components
// (xx, yy, zz, xy, xz, yz); zz/xz/yz are ignored for d = 2.
struct SymTensor {
    int d = 2;
    std::array<double, 6> c = {0, 0, 0, 0, 0, 0};

    static SymTensor from_full(const std::array<std::array<double, 3>, 3>& m, int d,
                               double tol = 1e-12);
    double frobenius() const;
    double dot(const SymTensor& o) const;  // A : B
    SymTensor scaled(double a) const;
    SymTensor minus(const SymTensor& o) const;
};

enum class StressKind { PowerLaw, CustomRadial };

// Constitutive model S(t,x,xi). The power law is
// (nu0 + nu1 |xi|^{s(t,x)-2}) xi; custom tables are radial, S = phi(|xi|) xi
// with phi linearly interpolated, which keeps symmetry automatic and leaves
// monotonicity to the verifier.
struct StressModel {
    StressKind kind = StressKind::PowerLaw;
    double nu0 = 1.0;
    double nu1 = 1.0;
    const ExponentField* s = nullptr;
    double h_coercivity = 1.0;  // the nonnegative integrable offset, constant by default
    double c_coercivity = 0.0;  // 0 = not yet calibrated

    // custom radial table
    std::vector<double> xi_knots;
    std::vector<double> phi_values;

    double viscosity_weight(double s_value, double mag) const;  // S = w(|xi|) xi
    SymTensor evaluate(double s_value, const SymTensor& xi) const;
    SymTensor evaluate(double t, int i, int j, int k, const SymTensor& xi) const;
};

struct RegularizedStress {
    StressModel base;
    double theta = 0.0;
    double s_max = 2.0;

    double conj_s_max() const { return s_max / (s_max - 1.0); }
    double C_star() const;  // 1 / (s'_max s_max^{s'_max - 1})
    double weight(double s_value, double mag) const;
    SymTensor evaluate(double s_value, const SymTensor& xi) const;
    SymTensor grad_m(const SymTensor& xi) const;  // s_max |xi|^{s_max-2} xi
};

double young_identity_residual(const RegularizedStress& reg, const SymTensor& xi);

// Grid/range sampler for assumption verification.
struct StressSampler {
    int count = 1000;
    double xi_min = 1e-3;
    double xi_max = 10.0;
    std::uint64_t seed = 31415926ull;
};

struct AssumptionReport {
    bool t1_ok = true;
    double t2_min = 0.0;       // min of c S:xi - |xi|^s - |S|^{s'} + h
    double t3_min = 0.0;       // min of (S(a)-S(b)):(a-b)
    double r4_min = 0.0;       // min of monotonicity gap / |a-b|^2 (theta > 0)
    double r3_min = 0.0;       // min of c^th S^th:xi - |xi|^smax - |S^th|^{s'max} + h^th
    double r2_min = 0.0;       // min of c S^th:xi - |xi|^s - |S|^{s'} - th grad_m:xi + h
    double c_theta = 0.0;
    int violations = 0;
    bool pass = true;
    std::string witness;

    std::string csv() const;
};

double calibrate_coercivity(const StressModel& model, const StressSampler& sampler);
AssumptionReport verify_assumptions(const StressModel& model, const StressSampler& sampler,
                                    double theta = 0.0);

}  // namespace vexflow

#endif
