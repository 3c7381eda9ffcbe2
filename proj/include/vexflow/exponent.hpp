#ifndef VEXFLOW_EXPONENT_HPP
#define VEXFLOW_EXPONENT_HPP

#include <string>
#include <vector>

#include "vexflow/domain.hpp"
#include "vexflow/grid.hpp"

namespace vexflow {

// Admissibility threshold (3d+2)/(d+2) and the derived exponent 3 + 2/d.
double s_min_theory(int d);
double s0_exponent(int d);

// The rheology descriptor s(t,x): piecewise constant across time slabs,
// log-Holder continuous in space within each slab. Discontinuity in time is
// the point of the construction and is allowed without any constraint.
struct ExponentField {
    GridLayout grid;
    std::vector<std::uint8_t> mask;
    std::vector<double> slab_bounds;
    std::vector<ScalarField> slabs;

    int d = 2;
    double s_lo = 0.0;         // actual min over the field
    double s_hi = 0.0;         // actual max over the field
    double s_max = 0.0;        // declared growth bound (>= s_hi)
    bool conjugated = false;   // conjugate fields skip the (A2) lower bound
    std::vector<double> log_holder;  // per-slab estimated constant
    double log_holder_uniform = 0.0;

    int num_slabs() const { return int(slabs.size()); }
    int slab_of(double t) const;
    double value(int slab, int i, int j, int k = 0) const { return slabs[slab].at(i, j, k); }
    double conjugate_max() const { return s_max / (s_max - 1.0); }
};

ExponentField make_exponent_field(const Domain& dom, std::vector<ScalarField> slab_values,
                                  double declared_s_max = 0.0);
ExponentField conjugate_field(const ExponentField& s);

std::string exponent_csv(const ExponentField& s);
ExponentField exponent_from_csv(const Domain& dom, const std::string& text,
                                double declared_s_max = 0.0);

// Modular rho(g) = int int |g|^{s(t,x)} over the masked cylinder, midpoint rule.
double modular(const SpaceTimeField& g, const ExponentField& s);

struct ModularReport {
    double modular_value = 0.0;
    double luxemburg_norm = 0.0;
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    int iterations = 0;
    double log_holder_uniform = 0.0;
};

// Luxemburg norm inf{lambda > 0 : rho(g/lambda) <= 1} by bracketed bisection.
ModularReport luxemburg_norm(const SpaceTimeField& g, const ExponentField& s,
                             double tol = 1e-10);

struct PairingReport {
    double value = 0.0;      // int int phi psi
    double norm_phi = 0.0;   // ||phi||_{L^{s}}
    double norm_psi = 0.0;   // ||psi||_{L^{s'}}
    double bound = 0.0;      // 2 * norm_phi * norm_psi
};

PairingReport holder_pairing(const SpaceTimeField& phi, const SpaceTimeField& psi,
                             const ExponentField& s);

}  // namespace vexflow

#endif
