#include "vexflow/stress.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vexflow {

SymTensor SymTensor::from_full(const std::array<std::array<double, 3>, 3>& m, int d,
                               double tol) {
    double scale = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) scale = std::max(scale, std::fabs(m[a][b]));
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            if (std::fabs(m[a][b] - m[b][a]) > tol * std::max(1.0, scale))
                throw NumericError("tensor is not symmetric within tolerance");
    SymTensor out;
    out.d = d;
    out.c[0] = m[0][0];
    out.c[1] = m[1][1];
    out.c[2] = d == 3 ? m[2][2] : 0.0;
    out.c[3] = 0.5 * (m[0][1] + m[1][0]);
    out.c[4] = d == 3 ? 0.5 * (m[0][2] + m[2][0]) : 0.0;
    out.c[5] = d == 3 ? 0.5 * (m[1][2] + m[2][1]) : 0.0;
    return out;
}

double SymTensor::frobenius() const { return std::sqrt(dot(*this)); }

double SymTensor::dot(const SymTensor& o) const {
    double acc = c[0] * o.c[0] + c[1] * o.c[1] + c[2] * o.c[2];
    acc += 2.0 * (c[3] * o.c[3] + c[4] * o.c[4] + c[5] * o.c[5]);
    return acc;
}

SymTensor SymTensor::scaled(double a) const {
    SymTensor out = *this;
    for (double& v : out.c) v *= a;
    return out;
}

SymTensor SymTensor::minus(const SymTensor& o) const {
    SymTensor out = *this;
    for (int i = 0; i < 6; ++i) out.c[i] -= o.c[i];
    return out;
}

double StressModel::viscosity_weight(double s_value, double mag) const {
    if (kind == StressKind::PowerLaw) {
        // |xi|^{s-2} xi extended by 0 at xi = 0 (matters only for s < 2)
        double p = mag > 0.0 ? std::pow(mag, s_value - 2.0) : 0.0;
        return nu0 + nu1 * p;
    }
    // radial table: phi interpolated linearly in |xi|, clamped at the ends
    if (xi_knots.empty()) throw ConfigError("custom stress table is empty");
    if (mag <= xi_knots.front()) return phi_values.front();
    if (mag >= xi_knots.back()) return phi_values.back();
    auto it = std::upper_bound(xi_knots.begin(), xi_knots.end(), mag);
    std::size_t hi = it - xi_knots.begin();
    double t = (mag - xi_knots[hi - 1]) / (xi_knots[hi] - xi_knots[hi - 1]);
    return phi_values[hi - 1] * (1 - t) + phi_values[hi] * t;
}

SymTensor StressModel::evaluate(double s_value, const SymTensor& xi) const {
    return xi.scaled(viscosity_weight(s_value, xi.frobenius()));
}

SymTensor StressModel::evaluate(double t, int i, int j, int k, const SymTensor& xi) const {
    if (!s) throw ConfigError("stress model has no exponent field bound");
    return evaluate(s->value(s->slab_of(t), i, j, k), xi);
}

double RegularizedStress::C_star() const {
    double sp = conj_s_max();
    return 1.0 / (sp * std::pow(s_max, sp - 1.0));
}

double RegularizedStress::weight(double s_value, double mag) const {
    double w = base.viscosity_weight(s_value, mag);
    if (theta > 0.0) w += theta * s_max * (mag > 0.0 ? std::pow(mag, s_max - 2.0) : 0.0);
    return w;
}

SymTensor RegularizedStress::evaluate(double s_value, const SymTensor& xi) const {
    return xi.scaled(weight(s_value, xi.frobenius()));
}

SymTensor RegularizedStress::grad_m(const SymTensor& xi) const {
    double mag = xi.frobenius();
    return xi.scaled(s_max * (mag > 0.0 ? std::pow(mag, s_max - 2.0) : 0.0));
}

double young_identity_residual(const RegularizedStress& reg, const SymTensor& xi) {
    SymTensor gm = reg.grad_m(xi);
    double mag = xi.frobenius();
    double lhs = gm.dot(xi);
    double rhs = std::pow(mag, reg.s_max) + reg.C_star() * std::pow(gm.frobenius(), reg.conj_s_max());
    return std::fabs(lhs - rhs);
}

namespace {

SymTensor random_sym(Rng& rng, int d, double xi_min, double xi_max) {
    SymTensor xi;
    xi.d = d;
    xi.c[0] = rng.normal();
    xi.c[1] = rng.normal();
    xi.c[3] = rng.normal();
    if (d == 3) {
        xi.c[2] = rng.normal();
        xi.c[4] = rng.normal();
        xi.c[5] = rng.normal();
    }
    double mag = xi.frobenius();
    if (mag == 0.0) {
        xi.c[0] = 1.0;
        mag = 1.0;
    }
    // log-uniform magnitude over the sampled range
    double target = xi_min * std::pow(xi_max / xi_min, rng.uniform());
    return xi.scaled(target / mag);
}

struct SamplePoint {
    double s_value;
    int i, j, k;
    double t;
};

std::vector<SamplePoint> sample_points(const ExponentField* s, Rng& rng, int count) {
    std::vector<SamplePoint> pts;
    if (!s) {
        pts.push_back({2.0, 0, 0, 0, 0.0});
        return pts;
    }
    for (int n = 0; n < count; ++n) {
        int sl = int(rng.uniform() * s->num_slabs());
        sl = std::min(sl, s->num_slabs() - 1);
        int i = int(rng.uniform() * s->grid.n[0]);
        int j = int(rng.uniform() * s->grid.n[1]);
        int k = s->grid.d == 3 ? int(rng.uniform() * s->grid.n[2]) : 0;
        if (!s->mask[s->grid.idx(i, j, k)]) continue;
        pts.push_back({s->value(sl, i, j, k), i, j, k, 0.5 * (s->slab_bounds[sl] +
                                                             s->slab_bounds[sl + 1])});
    }
    if (pts.empty()) pts.push_back({2.0, 0, 0, 0, 0.0});
    return pts;
}

}  // namespace

double calibrate_coercivity(const StressModel& model, const StressSampler& sampler) {
    Rng rng(sampler.seed);
    int d = model.s ? model.s->grid.d : 2;
    std::vector<SamplePoint> pts = sample_points(model.s, rng, std::max(8, sampler.count / 8));
    double cmax = 1.0;
    for (int n = 0; n < sampler.count; ++n) {
        SymTensor xi = random_sym(rng, d, sampler.xi_min, sampler.xi_max);
        const SamplePoint& p = pts[n % pts.size()];
        SymTensor S = model.evaluate(p.s_value, xi);
        double sxi = S.dot(xi);
        if (sxi <= 0.0) continue;
        double sp = p.s_value / (p.s_value - 1.0);
        double need = std::pow(xi.frobenius(), p.s_value) + std::pow(S.frobenius(), sp) -
                      model.h_coercivity;
        if (need > 0.0) cmax = std::max(cmax, need / sxi);
    }
    return 1.5 * cmax;  // safety factor
}

AssumptionReport verify_assumptions(const StressModel& model, const StressSampler& sampler,
                                    double theta) {
    if (sampler.count < 1) throw ConfigError("assumption sampler needs count >= 1");
    AssumptionReport rep;
    Rng rng(sampler.seed);
    int d = model.s ? model.s->grid.d : 2;
    std::vector<SamplePoint> pts = sample_points(model.s, rng, std::max(8, sampler.count / 8));

    StressModel work = model;
    if (work.c_coercivity <= 0.0) work.c_coercivity = calibrate_coercivity(model, sampler);
    double c = work.c_coercivity;
    double h = work.h_coercivity;

    RegularizedStress reg;
    reg.base = work;
    reg.theta = theta;
    reg.s_max = work.s ? work.s->s_max : 2.0;
    double spmax = reg.conj_s_max();
    double K = std::min(std::min(1.0, c * reg.C_star()) * std::pow(2.0, 1.0 - spmax),
                        c * std::max(theta, 1e-300));
    rep.c_theta = theta > 0.0 ? c / K : 0.0;
    double h_theta = theta > 0.0 ? (h + 1.0) / K : 0.0;

    rep.t2_min = 1e300;
    rep.t3_min = 1e300;
    rep.r4_min = 1e300;
    rep.r3_min = 1e300;
    rep.r2_min = 1e300;

    // (T1): exact zeros at xi = 0
    for (const auto& p : pts) {
        SymTensor zero;
        zero.d = d;
        if (work.evaluate(p.s_value, zero).frobenius() != 0.0) rep.t1_ok = false;
        if (theta > 0.0 && reg.evaluate(p.s_value, zero).frobenius() != 0.0) rep.t1_ok = false;
    }
    if (!rep.t1_ok) ++rep.violations;

    double scale = 0.0;
    for (int n = 0; n < sampler.count; ++n) {
        const SamplePoint& p = pts[n % pts.size()];
        SymTensor a = random_sym(rng, d, sampler.xi_min, sampler.xi_max);
        SymTensor b = random_sym(rng, d, sampler.xi_min, sampler.xi_max);
        double sp = p.s_value / (p.s_value - 1.0);

        SymTensor Sa = work.evaluate(p.s_value, a);
        double t2 = c * Sa.dot(a) - std::pow(a.frobenius(), p.s_value) -
                    std::pow(Sa.frobenius(), sp) + h;
        scale = std::max(scale, std::fabs(c * Sa.dot(a)) + std::pow(a.frobenius(), p.s_value));
        if (t2 < rep.t2_min) {
            rep.t2_min = t2;
            if (t2 < -1e-9 * std::max(1.0, scale)) {
                std::ostringstream w;
                w << "(T2) violated at |xi| = " << a.frobenius() << ", s = " << p.s_value;
                rep.witness = w.str();
            }
        }

        SymTensor Sb = work.evaluate(p.s_value, b);
        double mono = Sa.minus(Sb).dot(a.minus(b));
        if (mono < rep.t3_min) {
            rep.t3_min = mono;
            if (mono < -1e-12 * std::max(1.0, scale)) {
                std::ostringstream w;
                w << "(T3) violated for pair |a| = " << a.frobenius() << ", |b| = "
                  << b.frobenius() << ", s = " << p.s_value;
                rep.witness = w.str();
            }
        }

        if (theta > 0.0) {
            SymTensor Ra = reg.evaluate(p.s_value, a);
            SymTensor Rb = reg.evaluate(p.s_value, b);
            double gap = Ra.minus(Rb).dot(a.minus(b));
            double sep = a.minus(b).dot(a.minus(b));
            if (sep > 0.0) rep.r4_min = std::min(rep.r4_min, gap / sep);

            double r3 = rep.c_theta * Ra.dot(a) - std::pow(a.frobenius(), reg.s_max) -
                        std::pow(Ra.frobenius(), spmax) + h_theta;
            rep.r3_min = std::min(rep.r3_min, r3);

            double r2 = c * Ra.dot(a) - std::pow(a.frobenius(), p.s_value) -
                        std::pow(Sa.frobenius(), sp) - c * theta * reg.grad_m(a).dot(a) + h;
            rep.r2_min = std::min(rep.r2_min, r2);
        }
    }

    double tol = 1e-9 * std::max(1.0, scale);
    if (rep.t2_min < -tol) ++rep.violations;
    if (rep.t3_min < -1e-12 * std::max(1.0, scale)) ++rep.violations;
    if (theta > 0.0) {
        if (rep.r4_min <= 0.0) ++rep.violations;
        if (rep.r3_min < -tol) ++rep.violations;
        if (rep.r2_min < -tol) ++rep.violations;
    }
    rep.pass = rep.t1_ok && rep.violations == 0;
    return rep;
}

std::string AssumptionReport::csv() const {
    std::ostringstream out;
    out << "check,min_residual,status\n";
    out << "T1," << (t1_ok ? "0" : "1") << "," << (t1_ok ? "PASS" : "FAIL") << "\n";
    out << "T2," << format_double(t2_min) << "," << (t2_min > -1e-6 ? "PASS" : "FAIL") << "\n";
    out << "T3," << format_double(t3_min) << "," << (t3_min >= 0 ? "PASS" : "FAIL") << "\n";
    if (r4_min < 1e300) {
        out << "R4," << format_double(r4_min) << "," << (r4_min > 0 ? "PASS" : "FAIL") << "\n";
        out << "R3," << format_double(r3_min) << "," << (r3_min > -1e-6 ? "PASS" : "FAIL")
            << "\n";
        out << "R2," << format_double(r2_min) << "," << (r2_min > -1e-6 ? "PASS" : "FAIL")
            << "\n";
    }
    if (!witness.empty()) out << "witness,0," << witness << "\n";
    return out.str();
}

}  // namespace vexflow
