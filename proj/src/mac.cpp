#include "vexflow/mac.hpp"

#include <algorithm>
#include <cmath>

namespace vexflow {

void FaceField::zero_boundary_normal() {
    for (int j = 0; j < g.ny; ++j) {
        u[g.uidx(0, j)] = 0.0;
        u[g.uidx(g.nx, j)] = 0.0;
    }
    for (int i = 0; i < g.nx; ++i) {
        v[g.vidx(i, 0)] = 0.0;
        v[g.vidx(i, g.ny)] = 0.0;
    }
}

void FaceField::axpy(double a, const FaceField& o) {
    for (std::size_t c = 0; c < u.size(); ++c) u[c] += a * o.u[c];
    for (std::size_t c = 0; c < v.size(); ++c) v[c] += a * o.v[c];
}

void FaceField::scale(double a) {
    for (double& x : u) x *= a;
    for (double& x : v) x *= a;
}

double face_dot(const FaceField& a, const FaceField& b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.u.size(); ++c) acc += a.u[c] * b.u[c];
    for (std::size_t c = 0; c < a.v.size(); ++c) acc += a.v[c] * b.v[c];
    return acc * a.g.h * a.g.h;
}

double tensor_dot(const MacTensor& a, const MacTensor& b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.xx.size(); ++c)
        acc += a.xx.v[c] * b.xx.v[c] + a.yy.v[c] * b.yy.v[c];
    for (std::size_t c = 0; c < a.xy.size(); ++c) acc += 2.0 * a.xy[c] * b.xy[c];
    return acc * a.g.h * a.g.h;
}

double face_sup(const FaceField& a) {
    double m = 0.0;
    for (double x : a.u) m = std::max(m, std::fabs(x));
    for (double x : a.v) m = std::max(m, std::fabs(x));
    return m;
}

ScalarField div_cells(const FaceField& w) {
    const MacGrid& g = w.g;
    ScalarField out(g.cell_layout());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.at(i, j) =
                (w.U(i + 1, j) - w.U(i, j) + w.V(i, j + 1) - w.V(i, j)) / g.h;
    return out;
}

FaceField grad_to_faces(const ScalarField& p) {
    MacGrid g;
    g.nx = p.g.n[0];
    g.ny = p.g.n[1];
    g.h = p.g.h;
    FaceField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) out.U(i, j) = (p.at(i, j) - p.at(i - 1, j)) / g.h;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out.V(i, j) = (p.at(i, j) - p.at(i, j - 1)) / g.h;
    return out;
}

MacTensor sym_grad(const FaceField& w) {
    const MacGrid& g = w.g;
    MacTensor T(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            T.xx.at(i, j) = (w.U(i + 1, j) - w.U(i, j)) / g.h;
            T.yy.at(i, j) = (w.V(i, j + 1) - w.V(i, j)) / g.h;
        }
    // nodes: tangential values outside the box are the no-slip zero extension
    auto uat = [&](int i, int j) { return (j >= 0 && j < g.ny) ? w.U(i, j) : 0.0; };
    auto vat = [&](int i, int j) { return (i >= 0 && i < g.nx) ? w.V(i, j) : 0.0; };
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double dudy = (uat(i, j) - uat(i, j - 1)) / g.h;
            double dvdx = (vat(i, j) - vat(i - 1, j)) / g.h;
            T.xy[g.nidx(i, j)] = 0.5 * (dudy + dvdx);
        }
    return T;
}

FaceField div_tensor(const MacTensor& T) {
    const MacGrid& g = T.g;
    FaceField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            out.U(i, j) = (T.xx.at(i, j) - T.xx.at(i - 1, j)) / g.h +
                          (T.xy[g.nidx(i, j + 1)] - T.xy[g.nidx(i, j)]) / g.h;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.V(i, j) = (T.yy.at(i, j) - T.yy.at(i, j - 1)) / g.h +
                          (T.xy[g.nidx(i + 1, j)] - T.xy[g.nidx(i, j)]) / g.h;
    return out;
}

MacTensor convection_tensor(const FaceField& w) {
    const MacGrid& g = w.g;
    MacTensor T(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double uc = 0.5 * (w.U(i, j) + w.U(i + 1, j));
            double vc = 0.5 * (w.V(i, j) + w.V(i, j + 1));
            T.xx.at(i, j) = uc * uc;
            T.yy.at(i, j) = vc * vc;
        }
    auto uat = [&](int i, int j) { return (j >= 0 && j < g.ny) ? w.U(i, j) : 0.0; };
    auto vat = [&](int i, int j) { return (i >= 0 && i < g.nx) ? w.V(i, j) : 0.0; };
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double un = 0.5 * (uat(i, j) + uat(i, j - 1));
            double vn = 0.5 * (vat(i, j) + vat(i - 1, j));
            T.xy[g.nidx(i, j)] = un * vn;
        }
    return T;
}

ScalarField divdiv_cells(const MacTensor& T) { return div_cells(div_tensor(T)); }

ScalarField tensor_mag_cells(const MacTensor& T) {
    const MacGrid& g = T.g;
    ScalarField out(g.cell_layout());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double xy = 0.25 * (T.xy[g.nidx(i, j)] + T.xy[g.nidx(i + 1, j)] +
                                T.xy[g.nidx(i, j + 1)] + T.xy[g.nidx(i + 1, j + 1)]);
            double a = T.xx.at(i, j), b = T.yy.at(i, j);
            out.at(i, j) = std::sqrt(a * a + b * b + 2.0 * xy * xy);
        }
    return out;
}

std::vector<double> tensor_mag_nodes(const MacTensor& T) {
    const MacGrid& g = T.g;
    std::vector<double> out(g.ncount(), 0.0);
    auto cat = [&](const ScalarField& f, int i, int j) {
        if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) return 0.0;
        return f.at(i, j);
    };
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double a = 0.25 * (cat(T.xx, i, j) + cat(T.xx, i - 1, j) + cat(T.xx, i, j - 1) +
                               cat(T.xx, i - 1, j - 1));
            double b = 0.25 * (cat(T.yy, i, j) + cat(T.yy, i - 1, j) + cat(T.yy, i, j - 1) +
                               cat(T.yy, i - 1, j - 1));
            double xy = T.xy[g.nidx(i, j)];
            out[g.nidx(i, j)] = std::sqrt(a * a + b * b + 2.0 * xy * xy);
        }
    return out;
}

MacTensor localize(const MacTensor& T, const ScalarField& zc, const std::vector<double>& zn) {
    MacTensor out = T;
    for (std::size_t c = 0; c < out.xx.size(); ++c) {
        out.xx.v[c] *= zc.v[c];
        out.yy.v[c] *= zc.v[c];
    }
    for (std::size_t c = 0; c < out.xy.size(); ++c) out.xy[c] *= zn[c];
    return out;
}

ScalarField speed_cells(const FaceField& w) {
    const MacGrid& g = w.g;
    ScalarField out(g.cell_layout());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double uc = 0.5 * (w.U(i, j) + w.U(i + 1, j));
            double vc = 0.5 * (w.V(i, j) + w.V(i, j + 1));
            out.at(i, j) = std::sqrt(uc * uc + vc * vc);
        }
    return out;
}

std::vector<double> cell_to_node(const ScalarField& f) {
    int nx = f.g.n[0], ny = f.g.n[1];
    std::vector<double> out(std::size_t(nx + 1) * (ny + 1), 0.0);
    auto cat = [&](int i, int j) {
        if (i < 0 || j < 0 || i >= nx || j >= ny) return 0.0;
        return f.at(i, j);
    };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            out[std::size_t(j) * (nx + 1) + i] =
                0.25 * (cat(i, j) + cat(i - 1, j) + cat(i, j - 1) + cat(i - 1, j - 1));
    return out;
}

namespace {

// 5-point Laplacian with homogeneous Neumann walls (mirror ghosts).
void apply_neumann_lap(const ScalarField& p, ScalarField& out) {
    const GridLayout& g = p.g;
    double ih2 = 1.0 / (g.h * g.h);
    int nx = g.n[0], ny = g.n[1];
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double c = p.at(i, j);
            double e = i + 1 < nx ? p.at(i + 1, j) : c;
            double w = i > 0 ? p.at(i - 1, j) : c;
            double n = j + 1 < ny ? p.at(i, j + 1) : c;
            double s = j > 0 ? p.at(i, j - 1) : c;
            out.at(i, j) = (e + w + n + s - 4.0 * c) * ih2;
        }
}

void remove_mean(ScalarField& f) {
    double m = 0.0;
    for (double v : f.v) m += v;
    m /= double(f.size());
    for (double& v : f.v) v -= m;
}

}  // namespace

ScalarField neumann_poisson(const ScalarField& rhs, double rel_tol, PoissonSolveReport* rep) {
    ScalarField b = rhs;
    remove_mean(b);  // compatibility for the pure Neumann problem
    ScalarField x(b.g), r = b, p = r, Ap(b.g);
    double rs = 0.0, bnorm = 0.0;
    for (std::size_t c = 0; c < b.size(); ++c) {
        rs += r.v[c] * r.v[c];
        bnorm += b.v[c] * b.v[c];
    }
    bnorm = std::sqrt(bnorm);
    int it = 0;
    if (bnorm > 0.0) {
        int cap = int(b.size()) * 4;
        for (; it < cap; ++it) {
            apply_neumann_lap(p, Ap);
            double pAp = 0.0;
            for (std::size_t c = 0; c < b.size(); ++c) pAp += p.v[c] * Ap.v[c];
            if (pAp == 0.0) break;
            double alpha = rs / pAp;
            double rs2 = 0.0;
            for (std::size_t c = 0; c < b.size(); ++c) {
                x.v[c] += alpha * p.v[c];
                r.v[c] -= alpha * Ap.v[c];
                rs2 += r.v[c] * r.v[c];
            }
            if (std::sqrt(rs2) <= rel_tol * bnorm) {
                rs = rs2;
                ++it;
                break;
            }
            double beta = rs2 / rs;
            for (std::size_t c = 0; c < b.size(); ++c) p.v[c] = r.v[c] + beta * p.v[c];
            rs = rs2;
        }
    }
    remove_mean(x);
    if (rep) {
        rep->iterations = it;
        rep->residual = std::sqrt(rs);
    }
    return x;
}

ProjectionResult project(const FaceField& w, double rel_tol) {
    ProjectionResult res;
    ScalarField div = div_cells(w);
    double mx = 0.0;
    for (double v : div.v) mx = std::max(mx, std::fabs(v));
    res.div_before = mx;
    res.phi = neumann_poisson(div, rel_tol, nullptr);
    res.w = w;
    FaceField gp = grad_to_faces(res.phi);
    res.w.axpy(-1.0, gp);
    ScalarField div2 = div_cells(res.w);
    mx = 0.0;
    for (double v : div2.v) mx = std::max(mx, std::fabs(v));
    res.div_after = mx;
    return res;
}

GradientFit fit_gradient(const FaceField& R, double rel_tol) {
    GradientFit fit;
    ScalarField div = div_cells(R);
    fit.p = neumann_poisson(div, rel_tol, nullptr);
    FaceField gp = grad_to_faces(fit.p);
    double num = 0.0, den = 0.0;
    // only interior faces participate: grad_to_faces vanishes on walls and the
    // wall components of R are not representable by an interior gradient
    const MacGrid& g = R.g;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            double d = gp.U(i, j) - R.U(i, j);
            num += d * d;
            den += R.U(i, j) * R.U(i, j);
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double d = gp.V(i, j) - R.V(i, j);
            num += d * d;
            den += R.V(i, j) * R.V(i, j);
        }
    fit.misfit = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    return fit;
}

}  // namespace vexflow
