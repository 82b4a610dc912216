#include "soblab/dualnorm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "soblab/fem.hpp"

namespace soblab {

Residual residual(const Params& pr, const RadialField& u, const RadialGrid& g) {
    Residual f;
    auto uv = u.values_at_gauss(pr, g);
    auto up = u.derivs_at_gauss(pr, g);
    f.lin_grad.resize(uv.size());
    f.lin_val.resize(uv.size());
    const double p = pr.p, ps = pr.pstar;
    for (size_t i = 0; i < uv.size(); ++i) {
        double d = up[i];
        f.lin_grad[i] = (d == 0.0) ? 0.0 : std::pow(std::abs(d), p - 2.0) * d;
        double v = uv[i];
        f.lin_val[i] = (v == 0.0) ? 0.0 : -std::pow(std::abs(v), ps - 2.0) * v;
    }
    // pointwise form at the nodes: -(g' + (n-1)/r g) - |u|^{p*-2}u,
    // g = |u'|^{p-2}u', u' from analytic parts plus FD of nodal parts
    auto un = u.values_at_nodes(pr, g);
    auto dun = u.derivs_at_nodes(pr, g);
    std::vector<double> flux(g.N);
    for (int i = 0; i < g.N; ++i) {
        double d = dun[i];
        flux[i] = (d == 0.0) ? 0.0 : std::pow(std::abs(d), p - 2.0) * d;
    }
    auto dflux = differentiate(g, flux);
    f.pointwise.resize(g.N);
    for (int i = 0; i < g.N; ++i) {
        double zer = (un[i] == 0.0) ? 0.0 : std::pow(std::abs(un[i]), ps - 2.0) * un[i];
        f.pointwise[i] = -(dflux[i] + (pr.n - 1.0) / g.r[i] * flux[i]) - zer;
    }
    return f;
}

Residual residual(const Params& pr, const ModeFn& u, const RadialGrid& g) {
    for (const auto& m : u.modes)
        if (m.ell != 0)
            throw std::invalid_argument("residual: non-radial input rejected (ell > 0)");
    const std::vector<double>* prof = u.mode(0);
    if (!prof) throw std::invalid_argument("residual: missing radial mode");
    RadialField uf;
    uf.add_nodal(*prof, 1.0);
    return residual(pr, uf, g);
}

double residual_pairing(const RadialGrid& g, const Residual& f,
                        const std::vector<double>& w_nodal) {
    auto wv = fem::interp(g, w_nodal);
    auto wd = fem::deriv(g, w_nodal);
    double acc = 0.0;
    for (size_t i = 0; i < wv.size(); ++i)
        acc += g.gw[i] * (f.lin_grad[i] * wd[i] + f.lin_val[i] * wv[i]);
    return acc;
}

namespace {

struct TriSolver {
    std::vector<double> d, l;
    bool factor(std::vector<double> diag, const std::vector<double>& off) {
        const int n = static_cast<int>(diag.size());
        d.assign(n, 0.0);
        l.assign(n > 0 ? n - 1 : 0, 0.0);
        d[0] = diag[0];
        if (d[0] <= 0.0) return false;
        for (int i = 1; i < n; ++i) {
            l[i - 1] = off[i - 1] / d[i - 1];
            d[i] = diag[i] - l[i - 1] * l[i - 1] * d[i - 1];
            if (d[i] <= 0.0) return false;
        }
        return true;
    }
    void solve(std::vector<double>& x) const {
        const int n = static_cast<int>(d.size());
        for (int i = 1; i < n; ++i) x[i] -= l[i - 1] * x[i - 1];
        for (int i = 0; i < n; ++i) x[i] /= d[i];
        for (int i = n - 2; i >= 0; --i) x[i] -= l[i] * x[i + 1];
    }
};

} // namespace

DualSolveResult dual_solve(const Params& pr, const Residual& f, const RadialGrid& g,
                           const DualOpts& opts) {
    const double p = pr.p;
    const int N = g.N;
    int nd = N - 1; // Dirichlet at the far node always
    while (nd > 8 && g.r[nd - 1] > opts.rmax) --nd;

    // assemble the load vector l_i = <f, hat_i>
    std::vector<double> ell(N, 0.0);
    for (int e = 0; e < N - 1; ++e) {
        for (int k = 0; k < g.gk; ++k) {
            size_t idx = static_cast<size_t>(e) * g.gk + k;
            double w = g.gw[idx];
            double gradpart = f.lin_grad[idx] * w / g.h[e];
            ell[e] += -gradpart + f.lin_val[idx] * w * g.shl[idx];
            ell[e + 1] += gradpart + f.lin_val[idx] * w * g.shr[idx];
        }
    }
    double ell_norm = 0.0;
    for (int i = 0; i < nd; ++i) ell_norm = std::max(ell_norm, std::abs(ell[i]));

    DualSolveResult res;
    res.w.assign(N, 0.0);
    if (ell_norm == 0.0) return res;

    const std::vector<double>& We = g.elem_meas;

    auto energy = [&](const std::vector<double>& w, double mu, std::vector<double>* grad,
                      std::vector<double>* hess_e) {
        double J = 0.0;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        for (int e = 0; e < N - 1; ++e) {
            double dw = (w[e + 1] - w[e]) / g.h[e];
            double m2 = dw * dw + mu * mu;
            J += We[e] * std::pow(m2, 0.5 * p) / p;
            if (grad) {
                double sig = std::pow(m2, 0.5 * (p - 2.0)) * dw;
                double gv = We[e] * sig / g.h[e];
                (*grad)[e] -= gv;
                (*grad)[e + 1] += gv;
            }
            if (hess_e) {
                double dsig = std::pow(m2, 0.5 * (p - 4.0)) * ((p - 1.0) * dw * dw + mu * mu);
                (*hess_e)[e] = We[e] * dsig / (g.h[e] * g.h[e]);
            }
        }
        for (int i = 0; i < N; ++i) J -= ell[i] * w[i];
        if (grad)
            for (int i = 0; i < N; ++i) (*grad)[i] -= ell[i];
        return J;
    };

    // |Dw| scale from the linear-problem probe: solve the unit-weight
    // Laplacian, use it as a test direction for a lower bound on ||f||_*
    double scale = 0.0;
    {
        std::vector<double> hd(nd, 0.0), ho(nd - 1, 0.0);
        for (int e = 0; e < N - 1; ++e) {
            double he = We[e] / (g.h[e] * g.h[e]);
            if (e < nd) hd[e] += he;
            if (e + 1 < nd) {
                hd[e + 1] += he;
                ho[e] -= he;
            }
        }
        TriSolver ts;
        if (!ts.factor(hd, ho))
            throw std::runtime_error("dual_solve: linear probe factorization failed");
        std::vector<double> wl(ell.begin(), ell.begin() + nd);
        ts.solve(wl);
        std::vector<double> wfull(N, 0.0);
        std::copy(wl.begin(), wl.end(), wfull.begin());
        auto dws = fem::deriv(g, wfull);
        double gn = fem::grad_norm(g, dws, p);
        double pairing = 0.0;
        for (int i = 0; i < nd; ++i) pairing += ell[i] * wfull[i];
        if (gn > 0.0 && pairing > 0.0)
            scale = std::pow(pairing / gn, 1.0 / (p - 1.0));
    }
    if (scale == 0.0) scale = 1.0;

    std::vector<double> grad(N), hess_e(N - 1), wtrial(N);
    std::vector<double> Jhist;
    const double mu_rels[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    double gn_prev = 0.0;
    for (double mu_rel : mu_rels) {
        double mu = mu_rel * scale;
        res.mu_schedule.push_back(mu);
        for (int it = 0; it < opts.max_iters; ++it) {
            double J = energy(res.w, mu, &grad, &hess_e);
            Jhist.push_back(J);
            std::vector<double> hd(nd, 0.0), ho(nd - 1, 0.0);
            for (int e = 0; e < N - 1; ++e) {
                if (e < nd) hd[e] += hess_e[e];
                if (e + 1 < nd) {
                    hd[e + 1] += hess_e[e];
                    ho[e] -= hess_e[e];
                }
            }
            TriSolver ts;
            if (!ts.factor(hd, ho))
                throw std::runtime_error("dual_solve: Hessian factorization failed at mu=" +
                                         std::to_string(mu));
            std::vector<double> step(grad.begin(), grad.begin() + nd);
            ts.solve(step);
            double dec = 0.0;
            for (int i = 0; i < nd; ++i) dec += grad[i] * step[i]; // = g^T H^{-1} g
            ++res.newton_iters;
            if (dec <= opts.tol * std::max(std::abs(J), 1e-300)) break;
            double t = 1.0;
            bool ok = false;
            for (int ls = 0; ls < 60; ++ls) {
                wtrial = res.w;
                for (int i = 0; i < nd; ++i) wtrial[i] -= t * step[i];
                double J2 = energy(wtrial, mu, nullptr, nullptr);
                if (J2 <= J - 0.25 * t * dec) {
                    res.w = wtrial;
                    ok = true;
                    break;
                }
                t *= 0.5;
            }
            if (!ok) {
                std::ostringstream os;
                os << "dual_solve: line search failed at mu=" << mu << "; J history:";
                for (size_t i = Jhist.size() > 8 ? Jhist.size() - 8 : 0; i < Jhist.size(); ++i)
                    os << " " << Jhist[i];
                throw std::runtime_error(os.str());
            }
        }
        auto dws = fem::deriv(g, res.w);
        double gn = fem::grad_norm(g, dws, p);
        res.mu_extrapolation_err = (gn > 0.0) ? std::abs(gn - gn_prev) / gn : 0.0;
        gn_prev = gn;
    }

    auto dws = fem::deriv(g, res.w);
    res.grad_norm_p = fem::grad_norm(g, dws, p);
    res.pairing = 0.0;
    for (int i = 0; i < N; ++i) res.pairing += ell[i] * res.w[i];
    res.dual_norm = std::pow(res.grad_norm_p, p - 1.0);
    return res;
}

double dual_norm(const Params& pr, const Residual& f, const RadialGrid& g,
                 const DualOpts& opts) {
    return dual_solve(pr, f, g, opts).dual_norm;
}

double dictionary_lower_bound(const Params& pr, const Residual& f, const RadialGrid& g,
                              const std::vector<std::vector<double>>& dictionary) {
    double best = 0.0;
    for (const auto& phi : dictionary) {
        auto d = fem::deriv(g, phi);
        double gn = fem::grad_norm(g, d, pr.p);
        if (gn == 0.0) continue;
        best = std::max(best, std::abs(residual_pairing(g, f, phi)) / gn);
    }
    return best;
}

} // namespace soblab
