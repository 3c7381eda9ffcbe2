#ifndef VEXFLOW_MAC_HPP
#define VEXFLOW_MAC_HPP

#include <vector>

#include "vexflow/grid.hpp"

namespace vexflow {

// 2D staggered (MAC) grid over a full box: u on x-faces, v on y-faces,
// scalars at cell centers, off-diagonal tensor components at nodes. Boundary
// faces carry the no-slip normal velocity (always zero here); tangential
// no-slip enters through zero extension in the node interpolations.
struct MacGrid {
    int nx = 0, ny = 0;
    double h = 0.0;

    GridLayout cell_layout() const {
        GridLayout g;
        g.d = 2;
        g.n[0] = nx;
        g.n[1] = ny;
        g.n[2] = 1;
        g.h = h;
        g.ext[0] = nx * h;
        g.ext[1] = ny * h;
        return g;
    }
    std::size_t ucount() const { return std::size_t(nx + 1) * ny; }
    std::size_t vcount() const { return std::size_t(nx) * (ny + 1); }
    std::size_t ncount() const { return std::size_t(nx + 1) * (ny + 1); }
    std::size_t uidx(int i, int j) const { return std::size_t(j) * (nx + 1) + i; }
    std::size_t vidx(int i, int j) const { return std::size_t(j) * nx + i; }
    std::size_t nidx(int i, int j) const { return std::size_t(j) * (nx + 1) + i; }
};

struct FaceField {
    MacGrid g;
    std::vector<double> u, v;

    FaceField() = default;
    explicit FaceField(const MacGrid& grid)
        : g(grid), u(grid.ucount(), 0.0), v(grid.vcount(), 0.0) {}
    double& U(int i, int j) { return u[g.uidx(i, j)]; }
    double U(int i, int j) const { return u[g.uidx(i, j)]; }
    double& V(int i, int j) { return v[g.vidx(i, j)]; }
    double V(int i, int j) const { return v[g.vidx(i, j)]; }

    void zero_boundary_normal();
    void axpy(double a, const FaceField& o);
    void scale(double a);
};

// Symmetric 2x2 tensor on the MAC arrangement: xx, yy at cell centers,
// xy at nodes.
struct MacTensor {
    MacGrid g;
    ScalarField xx, yy;
    std::vector<double> xy;

    MacTensor() = default;
    explicit MacTensor(const MacGrid& grid)
        : g(grid), xx(grid.cell_layout()), yy(grid.cell_layout()), xy(grid.ncount(), 0.0) {}
};

double face_dot(const FaceField& a, const FaceField& b);          // sum a.b h^2
double tensor_dot(const MacTensor& a, const MacTensor& b);        // sum A:B h^2 (xy weighted 2)
double face_sup(const FaceField& a);

ScalarField div_cells(const FaceField& w);
FaceField grad_to_faces(const ScalarField& p);  // interior faces, boundary zero
MacTensor sym_grad(const FaceField& w);
FaceField div_tensor(const MacTensor& T);       // interior faces, boundary zero
MacTensor convection_tensor(const FaceField& w);  // u (x) u with centered averages
ScalarField divdiv_cells(const MacTensor& T);   // div_cells(div_tensor(T))

// |T| Frobenius at centers and nodes, for Caratheodory stress weights.
ScalarField tensor_mag_cells(const MacTensor& T);
std::vector<double> tensor_mag_nodes(const MacTensor& T);

// zeta-localization of a tensor: xx,yy scaled by cell samples, xy by node samples.
MacTensor localize(const MacTensor& T, const ScalarField& zc, const std::vector<double>& zn);

// Interpolations
ScalarField speed_cells(const FaceField& w);              // |u| at centers
std::vector<double> cell_to_node(const ScalarField& f);   // 4-point average, zero outside

// Conjugate-gradient Poisson solve Lap p = rhs with homogeneous Neumann walls;
// rhs is mean-corrected, the solution returned with zero mean.
struct PoissonSolveReport {
    int iterations = 0;
    double residual = 0.0;
};
ScalarField neumann_poisson(const ScalarField& rhs, double rel_tol,
                            PoissonSolveReport* rep = nullptr);

// Helmholtz projection onto discretely divergence-free fields with no-slip
// walls. Returns the projected field; phi is the solved potential so the
// caller can recover the pressure as phi / dt.
struct ProjectionResult {
    FaceField w;
    ScalarField phi;
    double div_before = 0.0;
    double div_after = 0.0;
    int cg_iterations = 0;
};
ProjectionResult project(const FaceField& w, double rel_tol = 1e-13);

// Least-squares recovery of p from a face field R ~ grad p: solves
// Lap p = div R, returns zero-mean p and the relative misfit |grad p - R|/|R|.
struct GradientFit {
    ScalarField p;
    double misfit = 0.0;
};
GradientFit fit_gradient(const FaceField& R, double rel_tol = 1e-13);

}  // namespace vexflow

#endif
