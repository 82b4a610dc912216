#include "soblab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "soblab/fem.hpp"
#include "soblab/projection.hpp"

namespace soblab {

DirectionSpec DirectionSpec::parse(const std::string& text) {
    DirectionSpec spec;
    auto fail = [&]() {
        throw std::invalid_argument("direction spec must be eig:<k> or bump:<r0>:<sigma>, got '" +
                                    text + "'");
    };
    auto c1 = text.find(':');
    if (c1 == std::string::npos) fail();
    std::string head = text.substr(0, c1);
    if (head == "eig") {
        spec.kind = Kind::Eigenvector;
        spec.index = std::stoi(text.substr(c1 + 1));
        if (spec.index < 2)
            throw std::invalid_argument("direction eig:<k> needs k >= 2 (beyond the tangent space)");
    } else if (head == "bump") {
        spec.kind = Kind::Bump;
        auto c2 = text.find(':', c1 + 1);
        if (c2 == std::string::npos) fail();
        spec.r0 = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        spec.sigma = std::stod(text.substr(c2 + 1));
        if (!(spec.sigma > 0.0)) fail();
    } else {
        fail();
    }
    return spec;
}

std::string DirectionSpec::str() const {
    if (kind == Kind::Eigenvector) return "eig:" + std::to_string(index);
    return "bump:" + std::to_string(r0) + ":" + std::to_string(sigma);
}

namespace {

double window_radius(const Params& pr, const Bubble& b, const RadialGrid& g) {
    ModeOperator op = assemble_mode_operator(pr, b, g, 0);
    return g.r[op.dirichlet_begin - 1];
}

} // namespace

std::vector<double> make_direction(const Params& pr, const Bubble& b, const RadialGrid& g,
                                   const DirectionSpec& spec) {
    std::vector<double> phi(g.N, 0.0);
    ModeOperator op = assemble_mode_operator(pr, b, g, 0);
    if (spec.kind == DirectionSpec::Kind::Eigenvector) {
        auto res = solve_eigs(op, spec.index + 1);
        phi = res.eigenvectors[spec.index];
    } else {
        for (int i = 0; i < g.N; ++i) {
            double z = (g.r[i] - spec.r0) / spec.sigma;
            phi[i] = std::exp(-0.5 * z * z);
        }
        for (int i = op.dirichlet_begin; i < g.N; ++i) phi[i] = 0.0;
    }
    // project off {v, d_lambda v} in L^2(v^{p*-2}), using the analytic tangents
    BubbleProfile prof(pr, b);
    std::vector<double> weight(g.gx.size());
    for (size_t i = 0; i < weight.size(); ++i)
        weight[i] = std::pow(prof.value(g.gx[i]), pr.pstar - 2.0);
    auto vg = fem::bubble_values(g, prof);
    std::vector<double> dl(g.gx.size());
    for (size_t i = 0; i < dl.size(); ++i) dl[i] = prof.dlam(g.gx[i]);
    // one Gram-Schmidt pass against each tangent, then repeat once
    for (int pass = 0; pass < 2; ++pass) {
        auto fg = fem::interp(g, phi);
        for (const auto* xi : {&vg, &dl}) {
            double num = fem::weighted_ip(g, weight, *xi, fg);
            double den = fem::weighted_ip(g, weight, *xi, *xi);
            double coef = num / den;
            // subtract coef * xi sampled at the nodes
            for (int i = 0; i < g.N; ++i) {
                double xival = (xi == &vg) ? prof.value(g.r[i]) : prof.dlam(g.r[i]);
                phi[i] -= coef * xival;
            }
            fg = fem::interp(g, phi);
        }
    }
    for (int i = op.dirichlet_begin; i < g.N; ++i) phi[i] = 0.0;
    auto d = fem::deriv(g, phi);
    double gn = fem::grad_norm(g, d, pr.p);
    if (!(gn > 0.0)) throw std::runtime_error("make_direction: degenerate direction");
    for (auto& x : phi) x /= gn;
    return phi;
}

ChainConstants make_chain_constants(const Params& pr, const Bubble& b, const RadialGrid& g) {
    if (!pr.has_sobolev_constant())
        throw std::invalid_argument("make_chain_constants: params.S not set");
    ChainConstants cc;
    GapInfo gap = spectral_gap(pr, b, g);
    cc.lambda_hat = gap.lambda_hat;
    cc.mu_gap = gap.mu_gap;
    double lamS = gap.lambda_hat * std::pow(pr.S, -pr.p);
    cc.kappa = 0.5 * lamS / (pr.pstar + lamS);
    cc.vec = estimate_vec_constants(pr.p, cc.kappa);
    cc.scalar = estimate_scalar_constants(pr.pstar, cc.kappa);
    double boundary = 2.0 * pr.n / (pr.n + 2.0);
    cc.branch = (pr.p <= boundary) ? 1 : (pr.p < 2.0 ? 2 : 3);
    if (cc.branch < 3) {
        cc.gamma0 = cc.vec.c1 * ((pr.pstar - 1.0) + lamS) / (2.0 * (pr.pstar - 1.0 + cc.kappa));
    }
    cc.window_radius = window_radius(pr, b, g);
    return cc;
}

TermTable term_breakdown(const Params& pr, const RadialField& u, const Bubble& v,
                         double epsilon, const RadialGrid& g, const ChainConstants& cc,
                         double dual_norm_value) {
    TermTable t;
    const double p = pr.p, ps = pr.pstar;
    BubbleProfile vp(pr, v);

    auto ug = u.values_at_gauss(pr, g);
    auto dug = u.derivs_at_gauss(pr, g);
    RadialField diff = u;
    diff.add_bubble(v, -1.0);
    auto eg = diff.values_at_gauss(pr, g);   // u - v
    auto deg = diff.derivs_at_gauss(pr, g);  // D(u - v) = eps D phi

    double idsc_g = 0.0, idsc_m = 0.0;
    for (size_t i = 0; i < ug.size(); ++i) {
        double w = g.gw[i];
        double vv = vp.value(g.gx[i]);
        double dv = vp.deriv(g.gx[i]);
        double du = dug[i], uu = ug[i];
        double de = deg[i], ee = eg[i];
        double adv = -dv; // |Dv|
        double adu = std::abs(du);

        double flux_u = (du == 0.0) ? 0.0 : std::pow(adu, p - 2.0) * du;
        double flux_v = (dv == 0.0) ? 0.0 : std::pow(adv, p - 2.0) * dv;
        t.pairing_grad += w * flux_u * de;
        t.identity_grad += w * flux_v * de;
        idsc_g += w * std::abs(flux_v) * std::abs(de);

        double zer_u = (uu == 0.0) ? 0.0 : std::pow(std::abs(uu), ps - 2.0) * uu;
        t.pairing_mass += w * zer_u * ee;
        t.identity_mass += w * std::pow(vv, ps - 1.0) * ee;
        idsc_m += w * std::pow(vv, ps - 1.0) * std::abs(ee);

        double diff2 = (adv - adu) * (adv - adu);
        if (cc.branch == 3) {
            t.grad_term += w * omega_scalar(3, p, adv, adu, cc.vec.c3) * de * de;
            t.sq_term += w * (p - 2.0) * omega_scalar(4, p, adv, adu, cc.vec.c3) * diff2;
        } else {
            t.grad_term += w * omega_scalar(1, p, adv, adu) * de * de;
            t.sq_term += w * (p - 2.0) * omega_scalar(2, p, adv, adu) * diff2;
        }
        double wgt = (adv == 0.0) ? std::numeric_limits<double>::infinity()
                                  : std::pow(adv, p - 2.0);
        t.min_integral += w * std::min(std::pow(std::abs(de), p), wgt * de * de);
        t.eps_p_term += w * std::pow(std::abs(de), p);

        if (cc.branch == 1) {
            double den = vv * vv + ee * ee;
            if (den > 0.0)
                t.mass_term += w * std::pow(vv + cc.scalar.C1 * std::abs(ee), ps) / den * ee * ee;
        } else {
            t.mass_term += w * std::pow(vv, ps - 2.0) * ee * ee;
        }
        t.pstar_term += w * std::pow(std::abs(ee), ps);
    }
    t.pairing = t.pairing_grad - t.pairing_mass;
    t.identity_scale = std::max(idsc_g, idsc_m);

    double lamS = cc.lambda_hat * std::pow(pr.S, -p);
    double cgrad = (cc.branch == 3) ? cc.vec.c2 : cc.vec.c1;
    double ctail = (cc.branch == 3) ? t.eps_p_term : t.min_integral;
    t.link_grad_ineq = t.pairing_grad - t.identity_grad -
                       (1.0 - cc.kappa) * (t.grad_term + t.sq_term) - cgrad * ctail;
    double masspart = (ps - 1.0 + cc.kappa) * t.mass_term;
    if (cc.branch >= 2) masspart += cc.scalar.C2 * t.pstar_term;
    t.link_mass_ineq = t.identity_mass + masspart - t.pairing_mass;
    double gaplhs = t.grad_term + t.sq_term + (cc.branch < 3 ? cc.gamma0 * t.min_integral : 0.0);
    t.link_gap = gaplhs - (ps - 1.0 + lamS) * t.mass_term;
    if (epsilon > 0.0) t.c_emp = t.min_integral / (epsilon * epsilon);
    t.link_duality = epsilon * dual_norm_value - t.pairing;
    return t;
}

std::vector<StabilityReport> stability_sweep(const Params& pr, const Bubble& b,
                                             const RadialGrid& g,
                                             const std::vector<double>& direction,
                                             const std::vector<double>& epsilons,
                                             const ChainConstants* cc_in) {
    ChainConstants local;
    if (!cc_in) {
        local = make_chain_constants(pr, b, g);
        cc_in = &local;
    }
    const ChainConstants& cc = *cc_in;

    std::vector<StabilityReport> rows(epsilons.size());
    for (size_t k = 0; k < epsilons.size(); ++k) {
        StabilityReport& row = rows[k];
        row.n = pr.n;
        row.p = pr.p;
        row.epsilon = epsilons[k];
        try {
            RadialField u;
            u.add_bubble(b, 1.0);
            u.add_nodal(direction, epsilons[k]);
            ProjectionResult pres = project(pr, u, b, g);
            row.eps_out = pres.epsilon;
            row.amplitude_drift = pres.amplitude_drift;
            row.ortho_max = 0.0;
            for (double r : pres.ortho_residuals) row.ortho_max = std::max(row.ortho_max, std::abs(r));
            row.flagged_exact = pres.epsilon < 1e-8;

            Residual f = residual(pr, u, g);
            DualOpts opts;
            opts.rmax = cc.window_radius;
            DualSolveResult ds = dual_solve(pr, f, g, opts);
            row.rhs = ds.dual_norm;
            row.lhs = std::pow(pres.epsilon, std::max(1.0, pr.p - 1.0));
            row.ratio = (row.rhs > 0.0) ? row.lhs / row.rhs : std::numeric_limits<double>::infinity();
            row.terms = term_breakdown(pr, u, pres.v, pres.epsilon, g, cc, ds.dual_norm);
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
    }
    // least-squares slope of log rhs vs log eps over clean rows
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : rows) {
        if (!row.error.empty() || row.flagged_exact || !(row.rhs > 0.0)) continue;
        double x = std::log(row.epsilon), y = std::log(row.rhs);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    double slope = 0.0;
    if (m >= 2) slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    for (auto& row : rows) row.slope = slope;
    return rows;
}

} // namespace soblab
