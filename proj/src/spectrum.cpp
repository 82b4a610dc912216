#include "soblab/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "soblab/fem.hpp"
#include "soblab/rng.hpp"
#include "soblab/vectorial.hpp"

namespace soblab {

namespace {

// LDL^T of a symmetric tridiagonal matrix (diag d, off o).
struct TriLDL {
    std::vector<double> d, l;
    void factor(const std::vector<double>& diag, const std::vector<double>& off) {
        const int n = static_cast<int>(diag.size());
        d.assign(n, 0.0);
        l.assign(n > 0 ? n - 1 : 0, 0.0);
        d[0] = diag[0];
        if (d[0] <= 0.0) throw std::runtime_error("TriLDL: matrix not positive definite");
        for (int i = 1; i < n; ++i) {
            l[i - 1] = off[i - 1] / d[i - 1];
            d[i] = diag[i] - l[i - 1] * l[i - 1] * d[i - 1];
            if (d[i] <= 0.0) throw std::runtime_error("TriLDL: matrix not positive definite");
        }
    }
    void solve(std::vector<double>& x) const {
        const int n = static_cast<int>(d.size());
        for (int i = 1; i < n; ++i) x[i] -= l[i - 1] * x[i - 1];
        for (int i = 0; i < n; ++i) x[i] /= d[i];
        for (int i = n - 2; i >= 0; --i) x[i] -= l[i] * x[i + 1];
    }
};

void tri_mul(const std::vector<double>& d, const std::vector<double>& o,
             const std::vector<double>& x, std::vector<double>& y) {
    const int n = static_cast<int>(d.size());
    for (int i = 0; i < n; ++i) {
        double acc = d[i] * x[i];
        if (i > 0) acc += o[i - 1] * x[i - 1];
        if (i + 1 < n) acc += o[i] * x[i + 1];
        y[i] = acc;
    }
}

double tri_quad(const std::vector<double>& d, const std::vector<double>& o,
                const std::vector<double>& x) {
    const int n = static_cast<int>(d.size());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += d[i] * x[i] * x[i];
        if (i + 1 < n) acc += 2.0 * o[i] * x[i] * x[i + 1];
    }
    return acc;
}

} // namespace

std::vector<double> ModeOperator::scatter(const std::vector<double>& x) const {
    std::vector<double> f(N, 0.0);
    for (int i = 0; i <= flat_end; ++i) f[i] = x[0];
    for (int i = flat_end + 1; i < dirichlet_begin; ++i) f[i] = x[i - flat_end];
    return f;
}

std::vector<double> ModeOperator::gather(const std::vector<double>& f) const {
    std::vector<double> x(dofs(), 0.0);
    x[0] = f[flat_end];
    for (int i = flat_end + 1; i < dirichlet_begin; ++i) x[i - flat_end] = f[i];
    return x;
}

double ModeOperator::quad_form_A(const std::vector<double>& x) const {
    return tri_quad(A_diag, A_off, x);
}
double ModeOperator::quad_form_B(const std::vector<double>& x) const {
    return tri_quad(B_diag, B_off, x);
}

ModeOperator assemble_mode_operator(const Params& pr, const Bubble& b,
                                    const RadialGrid& g, int ell,
                                    double window_threshold) {
    if (ell < 0) throw std::invalid_argument("assemble_mode_operator: ell >= 0");
    BubbleProfile v(pr, b);
    const int N = g.N;
    const double p = pr.p;
    const double lam_ang = static_cast<double>(ell) * (ell + pr.n - 2);

    // local stiffness/mass quotient scale at the nodes
    auto node_quotient = [&](int i) {
        double r = g.r[i];
        double w = std::pow(-v.deriv(r), p - 2.0);
        double m = std::pow(v.value(r), pr.pstar - 2.0);
        return w / (r * r * m) / (pr.pstar - 1.0);
    };
    int flat_end = 0;
    if (p < 2.0) {
        while (flat_end < N - 16 && node_quotient(flat_end) > window_threshold) ++flat_end;
    }
    int dirichlet_begin = N - 1;
    for (int i = 0; i < N; ++i) {
        if (g.r[i] > 1.0 / b.scale && node_quotient(i) > window_threshold) {
            dirichlet_begin = i;
            break;
        }
    }
    dirichlet_begin = std::min(dirichlet_begin, N - 1);
    int na = dirichlet_begin - flat_end;
    if (na < 24)
        throw std::runtime_error("assemble_mode_operator: active window too small");

    ModeOperator op;
    op.ell = ell;
    op.N = N;
    op.flat_end = flat_end;
    op.dirichlet_begin = dirichlet_begin;
    op.A_diag.assign(na, 0.0);
    op.A_off.assign(na - 1, 0.0);
    op.B_diag.assign(na, 0.0);
    op.B_off.assign(na - 1, 0.0);

    auto dof_of = [&](int i) {
        if (i <= flat_end) return 0;
        if (i < dirichlet_begin) return i - flat_end;
        return -1;
    };

    for (int e = 0; e < N - 1; ++e) {
        int dl = dof_of(e), dr = dof_of(e + 1);
        if (dl < 0 && dr < 0) continue;
        double se = 0.0;                      // stiffness integral / h^2
        double al = 0.0, ar = 0.0, ax = 0.0;  // angular
        double ml = 0.0, mr = 0.0, mx = 0.0;  // mass
        for (int k = 0; k < g.gk; ++k) {
            size_t idx = static_cast<size_t>(e) * g.gk + k;
            double rr = g.gx[idx], ww = g.gw[idx];
            double wst = (p - 1.0) * std::pow(-v.deriv(rr), p - 2.0) * ww;
            double wms = std::pow(v.value(rr), pr.pstar - 2.0) * ww;
            se += wst;
            ml += wms * g.shl[idx] * g.shl[idx];
            mr += wms * g.shr[idx] * g.shr[idx];
            mx += wms * g.shl[idx] * g.shr[idx];
            if (ell > 0) {
                double wan = lam_ang * std::pow(-v.deriv(rr), p - 2.0) / (rr * rr) * ww;
                al += wan * g.shl[idx] * g.shl[idx];
                ar += wan * g.shr[idx] * g.shr[idx];
                ax += wan * g.shl[idx] * g.shr[idx];
            }
        }
        if (!std::isfinite(se) || !std::isfinite(ml + mr + mx) || !std::isfinite(al + ar + ax))
            throw std::runtime_error("assemble_mode_operator: non-finite element weight");
        se /= g.h[e] * g.h[e];
        if (dl == dr) {
            // element interior to the tied block: the slope vanishes there, so
            // only the zero-order terms contribute
            op.B_diag[dl] += ml + 2.0 * mx + mr;
            if (ell > 0) op.A_diag[dl] += al + 2.0 * ax + ar;
            continue;
        }
        if (dl >= 0) {
            op.A_diag[dl] += se + al;
            op.B_diag[dl] += ml;
        }
        if (dr >= 0) {
            op.A_diag[dr] += se + ar;
            op.B_diag[dr] += mr;
        }
        if (dl >= 0 && dr >= 0) {
            op.A_off[std::min(dl, dr)] += -se + ax;
            op.B_off[std::min(dl, dr)] += mx;
        }
    }
    return op;
}

double linearized_form(const Params& pr, const Bubble& b, const RadialGrid& g, int ell,
                       const std::vector<double>& f_gauss,
                       const std::vector<double>& df_gauss) {
    BubbleProfile v(pr, b);
    const double lam_ang = static_cast<double>(ell) * (ell + pr.n - 2);
    double acc = 0.0;
    for (size_t i = 0; i < g.gx.size(); ++i) {
        double wgt = std::pow(-v.deriv(g.gx[i]), pr.p - 2.0);
        double term = (pr.p - 1.0) * wgt * df_gauss[i] * df_gauss[i];
        if (ell > 0) term += lam_ang * wgt * f_gauss[i] * f_gauss[i] / (g.gx[i] * g.gx[i]);
        acc += g.gw[i] * term;
    }
    return acc;
}

SpectrumResult solve_eigs(const ModeOperator& op, int k) {
    const int na = op.dofs();
    if (k < 1 || k > na - 8)
        throw std::invalid_argument("solve_eigs: k out of range for the active window");

    const double sigma = 1e-9;
    // Jacobi scaling
    std::vector<double> d(na);
    for (int i = 0; i < na; ++i) d[i] = std::sqrt(op.A_diag[i] + sigma * op.B_diag[i]);
    std::vector<double> Ad(na), Ao(na - 1), Bd(na), Bo(na - 1);
    for (int i = 0; i < na; ++i) {
        Ad[i] = op.A_diag[i] / (d[i] * d[i]);
        Bd[i] = op.B_diag[i] / (d[i] * d[i]);
    }
    for (int i = 0; i + 1 < na; ++i) {
        Ao[i] = op.A_off[i] / (d[i] * d[i + 1]);
        Bo[i] = op.B_off[i] / (d[i] * d[i + 1]);
    }
    std::vector<double> Md(na), Mo(na - 1);
    for (int i = 0; i < na; ++i) Md[i] = Ad[i] + sigma * Bd[i];
    for (int i = 0; i + 1 < na; ++i) Mo[i] = Ao[i] + sigma * Bo[i];
    TriLDL chol;
    chol.factor(Md, Mo);

    auto b_ip = [&](const std::vector<double>& x, const std::vector<double>& y) {
        double acc = 0.0;
        for (int i = 0; i < na; ++i) {
            double byi = Bd[i] * y[i];
            if (i > 0) byi += Bo[i - 1] * y[i - 1];
            if (i + 1 < na) byi += Bo[i] * y[i + 1];
            acc += x[i] * byi;
        }
        return acc;
    };

    int m = std::min(na, std::max(80, 10 * k + 40));
    SpectrumResult res;
    res.ell = op.ell;

    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<std::vector<double>> V;
        V.reserve(m);
        std::vector<double> alpha_v, beta_v;
        Rng rng(20240517ULL + static_cast<uint64_t>(op.ell));
        std::vector<double> x(na);
        for (int i = 0; i < na; ++i) x[i] = rng.normal();
        double nb0 = std::sqrt(b_ip(x, x));
        for (auto& xi : x) xi /= nb0;
        V.push_back(x);

        std::vector<double> y(na), By(na);
        int mm = m;
        for (int j = 0; j < m; ++j) {
            tri_mul(Bd, Bo, V[j], y);
            chol.solve(y);
            if (j > 0)
                for (int i = 0; i < na; ++i) y[i] -= beta_v[j - 1] * V[j - 1][i];
            double a = b_ip(y, V[j]);
            alpha_v.push_back(a);
            for (int i = 0; i < na; ++i) y[i] -= a * V[j][i];
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& vq : V) {
                    double c = b_ip(y, vq);
                    for (int i = 0; i < na; ++i) y[i] -= c * vq[i];
                }
            }
            double nb = std::sqrt(std::max(b_ip(y, y), 0.0));
            if (j + 1 < m) {
                if (nb < 1e-13) { mm = j + 1; break; }
                beta_v.push_back(nb);
                for (auto& yi : y) yi /= nb;
                V.push_back(y);
            }
        }

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mm, mm);
        for (int i = 0; i < mm; ++i) {
            T(i, i) = alpha_v[i];
            if (i + 1 < mm) T(i, i + 1) = T(i + 1, i) = beta_v[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("solve_eigs: Ritz eigensolve failed");

        res.eigenvalues.clear();
        res.eigenvectors.clear();
        res.rayleigh.clear();
        res.iterations = mm;
        // largest theta correspond to smallest mu
        int got = std::min(k, mm);
        bool ok = true;
        for (int idx = 0; idx < got; ++idx) {
            int col = mm - 1 - idx;
            double theta = es.eigenvalues()(col);
            if (!(theta > 0.0)) { ok = false; break; }
            double mu = 1.0 / theta - sigma;
            std::vector<double> xr(na, 0.0);
            for (int j = 0; j < mm; ++j) {
                double zj = es.eigenvectors()(j, col);
                for (int i = 0; i < na; ++i) xr[i] += zj * V[j][i];
            }
            double nb = std::sqrt(b_ip(xr, xr));
            for (auto& xi : xr) xi /= nb;
            // Rayleigh quotient on the reduced pencil (unscale by d)
            std::vector<double> xo(na);
            for (int i = 0; i < na; ++i) xo[i] = xr[i] / d[i];
            double ray = tri_quad(op.A_diag, op.A_off, xo) / tri_quad(op.B_diag, op.B_off, xo);
            if (std::abs(ray - mu) > 1e-8 * std::max(1.0, std::abs(mu))) ok = false;
            // deterministic sign: largest-magnitude dof positive
            int imax = 0;
            for (int i = 0; i < na; ++i)
                if (std::abs(xo[i]) > std::abs(xo[imax])) imax = i;
            if (xo[imax] < 0.0)
                for (auto& xi : xo) xi = -xi;
            res.eigenvalues.push_back(mu);
            res.rayleigh.push_back(ray);
            res.eigenvectors.push_back(op.scatter(xo));
        }
        if (ok && got == k) {
            for (int i = 1; i < k; ++i)
                if (res.eigenvalues[i] < res.eigenvalues[i - 1] - 1e-12)
                    throw std::runtime_error("solve_eigs: eigenvalues not ascending");
            return res;
        }
        m = std::min(na, 2 * m); // one retry with a longer Krylov run
    }
    throw std::runtime_error("solve_eigs: Lanczos failed to converge after retry "
                             "(ell=" + std::to_string(op.ell) + ", iters=" +
                             std::to_string(res.iterations) + ")");
}

GapInfo spectral_gap(const Params& pr, const Bubble& b, const RadialGrid& g, int ell_max) {
    if (!pr.has_sobolev_constant())
        throw std::invalid_argument("spectral_gap: params.S not set; run sobolev_constant");
    if (ell_max < 2) throw std::invalid_argument("spectral_gap: need ell_max >= 2");
    GapInfo info;
    auto op0 = assemble_mode_operator(pr, b, g, 0);
    auto r0 = solve_eigs(op0, 3);
    info.mu0 = r0.eigenvalues;
    auto op1 = assemble_mode_operator(pr, b, g, 1);
    auto r1 = solve_eigs(op1, 2);
    info.mu1 = r1.eigenvalues;
    double mu_gap = std::min(r0.eigenvalues[2], r1.eigenvalues[1]);
    for (int ell = 2; ell <= ell_max; ++ell) {
        auto opl = assemble_mode_operator(pr, b, g, ell);
        auto rl = solve_eigs(opl, 1);
        info.mu_higher.push_back(rl.eigenvalues[0]);
        mu_gap = std::min(mu_gap, rl.eigenvalues[0]);
    }
    info.mu_gap = mu_gap;
    info.lambda_hat = 0.5 * std::pow(pr.S, pr.p) * (mu_gap - (pr.pstar - 1.0));
    if (!(info.lambda_hat > 0.0))
        throw std::runtime_error("spectral_gap: nonpositive gap (lambda_hat = " +
                                 std::to_string(info.lambda_hat) + "); implementation bug");
    return info;
}

GapCheckReport perturbed_gap_check(const Params& pr, const Bubble& b, const RadialGrid& g,
                                   const ModeFn& phi, double gamma0, double C1, int branch,
                                   const GapInfo* gap, double delta_bar) {
    const double p = pr.p;
    const double boundary = 2.0 * pr.n / (pr.n + 2.0);
    int expected = (p <= boundary) ? 1 : (p < 2.0 ? 2 : 3);
    if (branch != expected)
        throw std::invalid_argument("perturbed_gap_check: branch does not match the p-regime");
    const std::vector<double>* prof = phi.mode(0);
    if (!prof || phi.modes.size() != 1)
        throw std::invalid_argument("perturbed_gap_check: phi must be a radial ModeFn");

    BubbleProfile v(pr, b);
    auto vg = fem::bubble_values(g, v);
    auto vpg = fem::bubble_derivs(g, v);
    auto fg = fem::interp(g, *prof);
    auto dfg = fem::deriv(g, *prof);

    GapCheckReport rep;
    rep.branch = branch;
    rep.grad_norm_p = fem::grad_norm(g, dfg, p);
    if (rep.grad_norm_p > delta_bar * (1.0 + 1e-12))
        throw std::invalid_argument("perturbed_gap_check: ||D phi||_p exceeds delta_bar");

    // orthogonality residual against {v, d_lambda v}, relative to natural scales
    {
        std::vector<double> w(vg.size()), dl(vg.size());
        for (size_t i = 0; i < vg.size(); ++i) {
            w[i] = std::pow(vg[i], pr.pstar - 2.0);
            dl[i] = v.dlam(g.gx[i]);
        }
        double r1 = fem::weighted_ip(g, w, vg, fg);
        double r2 = fem::weighted_ip(g, w, dl, fg);
        double fmass = fem::weighted_ip(g, w, fg, fg);
        if (fmass == 0.0) {
            rep.ortho_residual = 0.0;
        } else {
            double s1 = std::sqrt(fem::weighted_ip(g, w, vg, vg) * fmass);
            double s2 = std::sqrt(fem::weighted_ip(g, w, dl, dl) * fmass);
            rep.ortho_residual = std::max(std::abs(r1) / s1, std::abs(r2) / s2);
        }
        if (rep.ortho_residual > 1e-8)
            throw std::invalid_argument("perturbed_gap_check: phi not orthogonal to T_vM "
                                        "(residual " + std::to_string(rep.ortho_residual) + ")");
    }

    GapInfo local;
    if (!gap) {
        local = spectral_gap(pr, b, g);
        gap = &local;
    }
    double factor = (pr.pstar - 1.0) + gap->lambda_hat * std::pow(pr.S, -p);

    double lhs = 0.0, rhs = 0.0;
    const double c3 = (p >= 2.0) ? find_c3(p) : 0.0;
    for (size_t i = 0; i < vg.size(); ++i) {
        double ax = -vpg[i];                 // |Dv|
        double axy = std::abs(vpg[i] + dfg[i]); // |Dv + Dphi|
        double dphi2 = dfg[i] * dfg[i];
        double diff2 = (ax - axy) * (ax - axy);
        double w = g.gw[i];
        if (branch == 3) {
            double w3 = omega_scalar(3, p, ax, axy, c3);
            double w4 = omega_scalar(4, p, ax, axy, c3);
            lhs += w * (w3 * dphi2 + (p - 2.0) * w4 * diff2);
        } else {
            double w1 = omega_scalar(1, p, ax, axy);
            double w2 = omega_scalar(2, p, ax, axy);
            double wgt = (ax == 0.0) ? std::numeric_limits<double>::infinity()
                                     : std::pow(ax, p - 2.0);
            double minterm = std::min(std::pow(std::abs(dfg[i]), p), wgt * dphi2);
            lhs += w * (w1 * dphi2 + (p - 2.0) * w2 * diff2 + gamma0 * minterm);
        }
        if (branch == 1) {
            double den = vg[i] * vg[i] + fg[i] * fg[i];
            double mass = (den == 0.0)
                ? 0.0
                : std::pow(vg[i] + C1 * std::abs(fg[i]), pr.pstar) / den * fg[i] * fg[i];
            rhs += w * factor * mass;
        } else {
            rhs += w * factor * std::pow(vg[i], pr.pstar - 2.0) * fg[i] * fg[i];
        }
    }
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.margin = lhs - rhs;
    return rep;
}

} // namespace soblab
