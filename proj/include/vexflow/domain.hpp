#ifndef VEXFLOW_DOMAIN_HPP
#define VEXFLOW_DOMAIN_HPP

#include <array>
#include <string>
#include <vector>

#include "vexflow/grid.hpp"

namespace vexflow {

struct ExponentField;

// Discretized space-time cylinder: a box (optionally masked to a subregion
// Omega) on a uniform grid, no-slip boundary, and the time-slab partition
// the exponent field lives on.
struct Domain {
    GridLayout grid;
    std::vector<std::uint8_t> mask;      // 1 = cell belongs to Omega
    std::vector<double> boundary_dist;   // distance from cell center to nearest boundary
    double T = 0.0;
    std::vector<double> slab_bounds;     // slab_bounds[0] = 0, back() = T

    std::size_t interior_cells = 0;

    bool inside(int i, int j, int k = 0) const { return mask[grid.idx(i, j, k)] != 0; }
    int num_slabs() const { return int(slab_bounds.size()) - 1; }
    int slab_of(double t) const;
    double slab_mid(int s) const { return 0.5 * (slab_bounds[s] + slab_bounds[s + 1]); }
};

struct DomainSpec {
    int d = 2;
    std::array<double, 3> extents = {1.0, 1.0, 1.0};
    int resolution = 64;
    std::string mask_rule = "all";  // "all" or an expression over (x,y,z); cell is in Omega iff > 0
    double T = 1.0;
    std::vector<double> slab_bounds;  // optional; default one slab [0,T]
};

Domain build_domain(const DomainSpec& spec);

// Finite covering of Omega by balls of one radius r on a lattice of spacing r,
// with per-ball per-slab exponent envelopes and the subordinate partition of
// unity. zeta is sampled both at cell centers and at grid nodes so symmetric
// tensors stored at either location can be localized consistently.
struct Covering {
    double r = 0.0;
    int d = 2;
    std::vector<std::array<double, 3>> centers;
    // per ball, per slab
    std::vector<std::vector<double>> q;   // inf of s over B_{2r} cap Omega
    std::vector<std::vector<double>> rr;  // sup of s over B_{2r} cap Omega
    std::vector<std::vector<double>> R;   // q * (1 + 2/d)
    std::vector<ScalarField> zeta;        // at cell centers, normalized on Omega
    std::vector<std::vector<double>> zeta_node;  // at nodes (d=2: (n0+1)*(n1+1)), normalized

    std::size_t num_balls() const { return centers.size(); }
};

Covering build_covering(const Domain& dom, const ExponentField& s);
void partition_of_unity(Covering& cov, const Domain& dom);
std::string covering_csv(const Covering& cov, const Domain& dom);

// Empirical lower bound for the constant in the generalized Korn inequality
// ||grad u||_q <= C (||Du||_q + ||u||_2), sampled over random smooth fields
// with zero trace. Derivatives are evaluated analytically, norms by midpoint
// quadrature.
struct KornReport {
    double constant = 0.0;  // max sampled ratio
    int samples_used = 0;
    int samples_skipped = 0;
};

KornReport korn_constant_estimate(const Domain& dom, double q, int n_samples,
                                  std::uint64_t seed = 20240901ull,
                                  bool divergence_free_only = false);

}  // namespace vexflow

#endif
