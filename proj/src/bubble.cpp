#include "soblab/bubble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace soblab {

BubbleProfile::BubbleProfile(const Params& pr, const Bubble& b)
    : n_(pr.n), p_(pr.p), q_(pr.q), pstar_(pr.pstar),
      eta_((pr.n - pr.p) / pr.p), beta_((pr.n - pr.p) / (pr.p - 1.0)),
      A_(b.amplitude), lam_(b.scale) {
    if (!(A_ > 0.0) || !(lam_ > 0.0))
        throw std::invalid_argument("BubbleProfile: amplitude and scale must be positive");
}

double BubbleProfile::value(double r) const {
    double rho = lam_ * r;
    double Q = 1.0 + std::pow(rho, q_);
    return A_ * std::pow(lam_, eta_) * std::pow(Q, -eta_);
}

double BubbleProfile::deriv(double r) const {
    double rho = lam_ * r;
    if (rho == 0.0) return 0.0;
    double Q = 1.0 + std::pow(rho, q_);
    return -A_ * std::pow(lam_, eta_ + 1.0) * beta_ * std::pow(rho, q_ - 1.0) *
           std::pow(Q, -eta_ - 1.0);
}

double BubbleProfile::second(double r) const {
    double rho = lam_ * r;
    double Q = 1.0 + std::pow(rho, q_);
    double bracket = (q_ - 1.0) * Q - (eta_ + 1.0) * q_ * std::pow(rho, q_);
    return -A_ * std::pow(lam_, eta_ + 2.0) * beta_ * std::pow(rho, q_ - 2.0) *
           std::pow(Q, -eta_ - 2.0) * bracket;
}

double BubbleProfile::dlam(double r) const {
    double rho = lam_ * r;
    double Q = 1.0 + std::pow(rho, q_);
    // eta U + rho U' = eta Q^{-eta-1} (1 + (1-q) rho^q)
    return A_ * std::pow(lam_, eta_ - 1.0) * eta_ * std::pow(Q, -eta_ - 1.0) *
           (1.0 + (1.0 - q_) * std::pow(rho, q_));
}

double BubbleProfile::dlam_deriv(double r) const {
    double rho = lam_ * r;
    if (rho == 0.0) return 0.0;
    double Q = 1.0 + std::pow(rho, q_);
    double rq = std::pow(rho, q_);
    // d/drho of [eta U + rho U'] = (eta + 1) U' + rho U''
    double U1p = -beta_ * std::pow(rho, q_ - 1.0) * std::pow(Q, -eta_ - 1.0);
    double U1pp = -beta_ * std::pow(rho, q_ - 2.0) * std::pow(Q, -eta_ - 2.0) *
                  ((q_ - 1.0) * Q - (eta_ + 1.0) * q_ * rq);
    return A_ * std::pow(lam_, eta_) * ((eta_ + 1.0) * U1p + rho * U1pp);
}

double BubbleProfile::d2lam(double r) const {
    double rho = lam_ * r;
    double Q = 1.0 + std::pow(rho, q_);
    double rq = std::pow(rho, q_);
    double U1 = std::pow(Q, -eta_);
    double U1p = (rho == 0.0) ? 0.0
                              : -beta_ * std::pow(rho, q_ - 1.0) * std::pow(Q, -eta_ - 1.0);
    double U1pp = -beta_ * std::pow(rho, q_ - 2.0) * std::pow(Q, -eta_ - 2.0) *
                  ((q_ - 1.0) * Q - (eta_ + 1.0) * q_ * rq);
    double W = eta_ * U1 + rho * U1p;
    double Wp = (eta_ + 1.0) * U1p + rho * U1pp;
    if (rho == 0.0) { W = eta_; Wp = 0.0; }
    return A_ * std::pow(lam_, eta_ - 2.0) * ((eta_ - 1.0) * W + rho * Wp);
}

double BubbleProfile::p_flux(double r) const {
    double d = deriv(r);
    if (d == 0.0) return 0.0;
    return -std::pow(-d, p_ - 1.0); // v' < 0 for r > 0
}

double BubbleProfile::p_lap(double r) const {
    double d = deriv(r);
    if (d == 0.0) return 0.0; // limit at the origin is finite but never sampled
    double w = std::pow(-d, p_ - 2.0);
    return -((p_ - 1.0) * w * second(r) + (n_ - 1.0) / r * w * d);
}

double BubbleProfile::map_ratio(double r) const {
    double rho = lam_ * r;
    return 1.0 + std::pow(rho, q_);
}

double bubble_eval(const Params& pr, const Bubble& b, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != pr.n)
        throw std::invalid_argument("bubble_eval: point dimension mismatch");
    double rr = 0.0;
    for (int i = 0; i < pr.n; ++i) {
        double d = x[i] - (b.center.empty() ? 0.0 : b.center[i]);
        rr += d * d;
    }
    BubbleProfile prof(pr, b);
    return prof.value(std::sqrt(rr));
}

namespace {

const RadialGrid& reference_grid(const Params& pr, const RadialGrid* grid,
                                 RadialGrid& storage) {
    if (grid) return *grid;
    storage = make_grid(pr.n, 512, 1.0);
    return storage;
}

} // namespace

double normalization_constant(const Params& pr, const RadialGrid* grid) {
    RadialGrid storage;
    const RadialGrid& g = reference_grid(pr, grid, storage);
    Bubble unit;
    BubbleProfile U(pr, unit);

    std::vector<double> ratios;
    ratios.reserve(g.N);
    for (int i = 0; i < g.N; ++i) {
        if (U.map_ratio(g.r[i]) > 1e6) continue;
        double denom = std::pow(U.value(g.r[i]), pr.pstar - 1.0);
        if (!std::isfinite(denom) || denom <= 0.0) continue;
        ratios.push_back(U.p_lap(g.r[i]) / denom);
    }
    if (ratios.size() < 8)
        throw std::runtime_error("normalization_constant: too few well-conditioned nodes");
    std::sort(ratios.begin(), ratios.end());
    double c = ratios[ratios.size() / 2];
    double spread = (ratios.back() - ratios.front()) / std::abs(c);
    if (!(c > 0.0) || spread > 1e-8)
        throw std::runtime_error("normalization_constant: EL ratio not constant on the grid "
                                 "(spread " + std::to_string(spread) + ")");
    // a^{p*-p} = c with p*-p = p^2/(n-p)
    return std::pow(c, (pr.n - pr.p) / (pr.p * pr.p));
}

double sobolev_constant(Params& pr, const RadialGrid* grid) {
    RadialGrid storage;
    const RadialGrid& g = reference_grid(pr, grid, storage);
    double a = normalization_constant(pr, &g);
    Bubble b;
    b.amplitude = a;
    BubbleProfile v(pr, b);

    std::vector<double> gradp(g.N), vpow(g.N);
    for (int i = 0; i < g.N; ++i) {
        gradp[i] = std::pow(-v.deriv(g.r[i]), pr.p);
        vpow[i] = std::pow(v.value(g.r[i]), pr.pstar);
    }
    double Ig = integrate(g, gradp);
    double Is = integrate(g, vpow);
    double S = std::pow(Ig, 1.0 / pr.n);
    if (std::abs(Ig - Is) / Ig > 1e-6)
        throw std::runtime_error("sobolev_constant: quadrature inconsistency between "
                                 "grad and mass norms");
    pr.S = S;
    return S;
}

Calibration calibrate(int n, double p, const RadialGrid* grid) {
    Calibration cal;
    cal.params = make_params(n, p);
    RadialGrid storage;
    const RadialGrid& g = reference_grid(cal.params, grid, storage);
    cal.amplitude = normalization_constant(cal.params, &g);
    cal.ratio_constant = std::pow(cal.amplitude, cal.params.pstar - cal.params.p);
    sobolev_constant(cal.params, &g);
    return cal;
}

TangentBasis tangent_basis(const Params& pr, const Bubble& b, const RadialGrid& g) {
    BubbleProfile v(pr, b);
    TangentBasis tb;
    TangentBasis::Entry ev{"v", 0, std::vector<double>(g.N)};
    TangentBasis::Entry el{"dlam", 0, std::vector<double>(g.N)};
    std::vector<double> dz(g.N);
    for (int i = 0; i < g.N; ++i) {
        ev.profile[i] = v.value(g.r[i]);
        el.profile[i] = v.dlam(g.r[i]);
        dz[i] = -v.deriv(g.r[i]);
    }
    tb.entries.push_back(std::move(ev));
    tb.entries.push_back(std::move(el));
    for (int i = 0; i < pr.n; ++i)
        tb.entries.push_back({"dz" + std::to_string(i + 1), 1, dz});
    return tb;
}

ElResidual el_residual(const Params& pr, const Bubble& b, const RadialGrid& g, double qmax) {
    BubbleProfile v(pr, b);
    ElResidual out;
    out.qmax = qmax;
    out.rel.resize(g.N);
    out.interior.assign(g.N, 0);
    double sup = 0.0;
    for (int i = 0; i < g.N; ++i) {
        double lap = v.p_lap(g.r[i]);
        if (!std::isfinite(lap))
            throw std::runtime_error("el_residual: non-finite p-Laplacian value");
        double vp = std::pow(v.value(g.r[i]), pr.pstar - 1.0);
        out.rel[i] = lap / vp - 1.0;
        if (v.map_ratio(g.r[i]) <= qmax) {
            out.interior[i] = 1;
            sup = std::max(sup, std::abs(out.rel[i]));
        }
    }
    out.interior_sup = sup;
    return out;
}

} // namespace soblab
