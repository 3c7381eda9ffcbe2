#include "vexflow/exponent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vexflow {

double s_min_theory(int d) { return (3.0 * d + 2.0) / (d + 2.0); }
double s0_exponent(int d) { return 3.0 + 2.0 / d; }

int ExponentField::slab_of(double t) const {
    int ns = num_slabs();
    for (int s = 0; s < ns; ++s)
        if (t < slab_bounds[s + 1]) return s;
    return ns - 1;
}

namespace {

// Log-Holder constant from a deterministic subsample of grid cells:
// max over pairs with |x-y| in [2h, 1/2] of -|s(x)-s(y)| log|x-y|.
// Pairs closer than 2h are discretization noise and excluded.
double estimate_log_holder(const ScalarField& f, const std::vector<std::uint8_t>& mask) {
    const GridLayout& g = f.g;
    std::vector<std::array<double, 4>> pts;  // x,y,z,value
    std::size_t total = 0;
    for (std::size_t c = 0; c < g.cells(); ++c)
        if (mask[c]) ++total;
    int stride = 1;
    while (total / std::size_t(stride * stride * (g.d == 3 ? stride : 1)) > 2048) ++stride;
    for (int k = 0; k < g.n[2]; k += (g.d == 3 ? stride : 1))
        for (int j = 0; j < g.n[1]; j += stride)
            for (int i = 0; i < g.n[0]; i += stride) {
                if (!mask[g.idx(i, j, k)]) continue;
                pts.push_back({g.center(0, i), g.center(1, j),
                               g.d == 3 ? g.center(2, k) : 0.0, f.at(i, j, k)});
            }
    double lo = 2.0 * g.h, hi = 0.5, best = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            double dx = pts[a][0] - pts[b][0];
            double dy = pts[a][1] - pts[b][1];
            double dz = pts[a][2] - pts[b][2];
            double r = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (r < lo || r > hi) continue;
            double c = -std::fabs(pts[a][3] - pts[b][3]) * std::log(r);
            best = std::max(best, c);
        }
    return best;
}

}  // namespace

ExponentField make_exponent_field(const Domain& dom, std::vector<ScalarField> slab_values,
                                  double declared_s_max) {
    if (int(slab_values.size()) != dom.num_slabs())
        throw ConfigError("exponent field needs one grid per time slab");
    for (const auto& sf : slab_values)
        if (!sf.g.same_shape(dom.grid))
            throw ConfigError("exponent grid does not match the domain resolution");

    ExponentField out;
    out.grid = dom.grid;
    out.mask = dom.mask;
    out.slab_bounds = dom.slab_bounds;
    out.slabs = std::move(slab_values);
    out.d = dom.grid.d;

    double lo = 1e300, hi = -1e300;
    for (const auto& sf : out.slabs)
        for (std::size_t c = 0; c < sf.size(); ++c) {
            if (!out.mask[c]) continue;
            double v = sf.v[c];
            if (!std::isfinite(v)) throw NumericError("exponent field has a non-finite value");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    double smin = s_min_theory(out.d);
    if (lo < smin - 1e-12) {
        std::ostringstream msg;
        msg << "exponent bound violated: min s = " << lo << " < (3d+2)/(d+2) = " << smin
            << " for d = " << out.d;
        throw ConfigError(msg.str());
    }
    out.s_lo = lo;
    out.s_hi = hi;
    out.s_max = declared_s_max > 0.0 ? declared_s_max : hi;
    if (out.s_max < hi - 1e-12)
        throw ConfigError("declared s_max is below the actual field maximum");

    for (const auto& sf : out.slabs) out.log_holder.push_back(estimate_log_holder(sf, out.mask));
    out.log_holder_uniform = 0.0;
    for (double c : out.log_holder) out.log_holder_uniform = std::max(out.log_holder_uniform, c);
    return out;
}

ExponentField conjugate_field(const ExponentField& s) {
    ExponentField out = s;
    out.conjugated = true;
    double lo = 1e300, hi = -1e300;
    for (auto& sf : out.slabs)
        for (std::size_t c = 0; c < sf.size(); ++c) {
            double v = s.slabs[&sf - &out.slabs[0]].v[c];
            double conj = v / (v - 1.0);
            sf.v[c] = conj;
            if (out.mask[c]) {
                lo = std::min(lo, conj);
                hi = std::max(hi, conj);
            }
        }
    out.s_lo = lo;
    out.s_hi = hi;
    out.s_max = s.s_max / (s.s_max - 1.0);
    return out;
}

std::string exponent_csv(const ExponentField& s) {
    std::ostringstream out;
    for (int sl = 0; sl < s.num_slabs(); ++sl) {
        out << "# slab " << sl << " t " << format_double(s.slab_bounds[sl]) << " "
            << format_double(s.slab_bounds[sl + 1]) << "\n";
        const ScalarField& f = s.slabs[sl];
        for (int k = 0; k < f.g.n[2]; ++k)
            for (int j = 0; j < f.g.n[1]; ++j) {
                for (int i = 0; i < f.g.n[0]; ++i) {
                    if (i) out << ",";
                    out << format_double(f.at(i, j, k));
                }
                out << "\n";
            }
    }
    return out.str();
}

ExponentField exponent_from_csv(const Domain& dom, const std::string& text,
                                double declared_s_max) {
    std::vector<ScalarField> slabs;
    std::istringstream in(text);
    std::string line;
    ScalarField cur;
    int row = 0;
    auto flush = [&]() {
        if (cur.size()) slabs.push_back(cur);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            flush();
            cur = ScalarField(dom.grid);
            row = 0;
            continue;
        }
        if (!cur.size()) throw ConfigError("exponent CSV: data before slab header");
        std::istringstream ls(line);
        std::string tok;
        int i = 0;
        int k = row / dom.grid.n[1];
        int j = row % dom.grid.n[1];
        while (std::getline(ls, tok, ',')) {
            if (i >= dom.grid.n[0]) throw ConfigError("exponent CSV: row too long");
            cur.at(i, j, k) = std::stod(tok);
            ++i;
        }
        if (i != dom.grid.n[0]) throw ConfigError("exponent CSV: row too short");
        ++row;
    }
    flush();
    return make_exponent_field(dom, std::move(slabs), declared_s_max);
}

double modular(const SpaceTimeField& g, const ExponentField& s) {
    if (g.num_slices() == 0) return 0.0;
    if (!g.slices[0].g.same_shape(s.grid))
        throw NumericError("modular: field and exponent grids differ");
    const GridLayout& gl = s.grid;
    double celldv = std::pow(gl.h, gl.d);
    double total = 0.0;
    for (std::size_t m = 0; m < g.num_slices(); ++m) {
        int sl = s.slab_of(g.times[m]);
        const ScalarField& f = g.slices[m];
        const ScalarField& ex = s.slabs[sl];
        double acc = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c) {
            if (!s.mask[c]) continue;
            double a = std::fabs(f.v[c]);
            if (a > 0.0) acc += std::pow(a, ex.v[c]);
        }
        total += acc * celldv * g.weights[m];
    }
    return total;
}

namespace {

double modular_scaled(const SpaceTimeField& g, const ExponentField& s, double lambda) {
    const GridLayout& gl = s.grid;
    double celldv = std::pow(gl.h, gl.d);
    double total = 0.0;
    for (std::size_t m = 0; m < g.num_slices(); ++m) {
        int sl = s.slab_of(g.times[m]);
        const ScalarField& f = g.slices[m];
        const ScalarField& ex = s.slabs[sl];
        double acc = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c) {
            if (!s.mask[c]) continue;
            double a = std::fabs(f.v[c]) / lambda;
            if (a > 0.0) acc += std::pow(a, ex.v[c]);
        }
        total += acc * celldv * g.weights[m];
    }
    return total;
}

}  // namespace

ModularReport luxemburg_norm(const SpaceTimeField& g, const ExponentField& s, double tol) {
    if (!(tol > 0)) throw ConfigError("luxemburg_norm: tol must be positive");
    ModularReport rep;
    rep.log_holder_uniform = s.log_holder_uniform;
    rep.modular_value = modular(g, s);
    if (rep.modular_value == 0.0) return rep;  // g = 0 a.e.

    double sup = 0.0;
    for (const auto& sl : g.slices)
        for (std::size_t c = 0; c < sl.size(); ++c)
            if (s.mask[c]) sup = std::max(sup, std::fabs(sl.v[c]));
    double measure = g.total_time() * std::pow(s.grid.h, s.grid.d) * double([&] {
        std::size_t m = 0;
        for (auto b : s.mask) m += b;
        return m;
    }());
    double hi = sup * std::max(1.0, std::pow(measure, 1.0 / s.s_lo));
    if (modular_scaled(g, s, hi) > 1.0) {
        // numerical slack; expand geometrically
        int guard = 0;
        while (modular_scaled(g, s, hi) > 1.0 && guard++ < 80) hi *= 2.0;
    }
    double lo = hi;
    int guard = 0;
    while (modular_scaled(g, s, lo) <= 1.0 && guard++ < 200) lo *= 0.5;
    if (guard >= 200) {
        // modular stays below 1 for arbitrarily small lambda: effectively zero field
        rep.luxemburg_norm = 0.0;
        return rep;
    }
    int it = 0;
    for (; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (modular_scaled(g, s, mid) <= 1.0)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= tol * hi) break;
    }
    rep.lambda_lo = lo;
    rep.lambda_hi = hi;
    rep.iterations = it + 1;
    if (it >= 200) throw NumericError("luxemburg_norm: bisection did not converge; bracket [" +
                                      format_double(lo) + ", " + format_double(hi) + "]");
    rep.luxemburg_norm = hi;  // modular(g/hi) <= 1, so hi is an admissible lambda
    return rep;
}

PairingReport holder_pairing(const SpaceTimeField& phi, const SpaceTimeField& psi,
                             const ExponentField& s) {
    if (phi.num_slices() != psi.num_slices())
        throw NumericError("holder_pairing: slice counts differ");
    PairingReport rep;
    const GridLayout& gl = s.grid;
    double celldv = std::pow(gl.h, gl.d);
    for (std::size_t m = 0; m < phi.num_slices(); ++m) {
        const ScalarField& a = phi.slices[m];
        const ScalarField& b = psi.slices[m];
        if (!a.g.same_shape(b.g)) throw NumericError("holder_pairing: grids differ");
        double acc = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c)
            if (s.mask[c]) acc += a.v[c] * b.v[c];
        rep.value += acc * celldv * phi.weights[m];
    }
    rep.norm_phi = luxemburg_norm(phi, s).luxemburg_norm;
    rep.norm_psi = luxemburg_norm(psi, conjugate_field(s)).luxemburg_norm;
    rep.bound = 2.0 * rep.norm_phi * rep.norm_psi;
    return rep;
}

}  // namespace vexflow
