#ifndef VEXFLOW_POISSON_HPP
#define VEXFLOW_POISSON_HPP

#include <array>
#include <vector>

#include "vexflow/grid.hpp"

namespace vexflow {

// Free-space Poisson solves by direct convolution with the fundamental
// solution. For d = 2 the kernel is the discrete fundamental solution of the
// five-point Laplacian (exact discrete identities; matches the Newtonian
// potential -(1/2pi)log|x| up to a constant in the far field). For d = 3 the
// continuum Newtonian kernel 1/(4pi|x|) is sampled, with the singular cell
// replaced by its exact cell average.
double lattice_green2d(int m, int n);
void lattice_green2d_ensure(int max_radius);  // build the table before threaded use

struct CellSource {
    int i, j, k;
    double v;
};

struct FreeSpaceOp {
    int d = 2;
    double h = 0.0;
    int threads = 1;
    std::vector<CellSource> sources;

    // u at lattice point (i,j,k), coordinates of the source-layout indexing
    double eval_at(int i, int j, int k) const;
    // u on a box whose cell (i,j,k) sits at source coordinates (i+oi, j+oj, k+ok)
    ScalarField eval_box(const GridLayout& box, int oi, int oj, int ok) const;
};

// Sources for -Lap u = div div g, g a cell-centered symmetric tensor given by
// components (xx, yy, [zz], xy, [xz, yz]); centered stencils, zero extension.
// The source support exceeds the input grid by one ring, hence the coordinates
// in CellSource may leave [0, n).
std::vector<CellSource> divdiv_sources(const std::vector<ScalarField>& g_sym);
// Sources for -Lap u = div f, f a cell-centered vector field.
std::vector<CellSource> div_sources(const std::vector<ScalarField>& f);

struct FreeSpaceResult {
    ScalarField u;          // on the padded layout
    GridLayout padded;
    int pad = 0;            // cell (i,j,k) of u corresponds to input cell (i-pad, ...)
    bool truncation_flag = false;  // far-field magnitude on the outer ring too large
    double farfield_ratio = 0.0;
};

FreeSpaceResult freespace_poisson_divdiv(const std::vector<ScalarField>& g_sym, int pad,
                                         int threads = 1);
FreeSpaceResult freespace_poisson_div(const std::vector<ScalarField>& f, int pad,
                                      int threads = 1);

// Least-squares slope of log|values| against log(radii); radii and values
// must be positive.
double loglog_slope(const std::vector<double>& radii, const std::vector<double>& values);

}  // namespace vexflow

#endif
