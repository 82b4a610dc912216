#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "soblab/dualnorm.hpp"
#include "soblab/fem.hpp"
#include "soblab/spectrum.hpp"
#include "soblab/stability.hpp"

using namespace soblab;

namespace {

struct Setup {
    Calibration cal;
    RadialGrid grid;
    Bubble bubble;
};

Setup make_setup(int n, double p, int N = 512) {
    Setup s;
    s.grid = make_grid(n, N, 1.0);
    s.cal = calibrate(n, p, &s.grid);
    s.bubble.amplitude = s.cal.amplitude;
    return s;
}

// dual solve restricted to w = g(r) Z_1(theta): test-only reference for the
// zonal case, minimized by Barzilai-Borwein descent on the nodal profile
double zonal_dual_grad_pow(const Setup& s, const std::vector<double>& mass_profile,
                           double p) {
    const auto& g = s.grid;
    auto zr = zonal_rule(g.n, 1, 48);
    const double area = sphere_area(g.n);
    const int N = g.N;
    // pairing <f, w> = int v-free mass_profile(r) Z_1 * w : reduces to
    // int mass_profile g r^{n-1} dr * |S^{n-1}| by Z-normalization
    auto pair_with = [&](const std::vector<double>& gv) {
        auto fg = fem::interp(g, gv);
        auto mg = fem::interp(g, mass_profile);
        double acc = 0.0;
        for (size_t i = 0; i < fg.size(); ++i) acc += g.gw[i] * mg[i] * fg[i];
        return acc;
    };
    auto energy_grad = [&](const std::vector<double>& gv, double mu,
                           std::vector<double>* grad) {
        double J = 0.0;
        if (grad) grad->assign(N, 0.0);
        for (int e = 0; e < N - 1; ++e) {
            double slope = (gv[e + 1] - gv[e]) / g.h[e];
            for (int k = 0; k < g.gk; ++k) {
                size_t idx = static_cast<size_t>(e) * g.gk + k;
                double rr = g.gx[idx];
                double wr = g.gw[idx] / area;
                double fv = gv[e] * g.shl[idx] + gv[e + 1] * g.shr[idx];
                for (size_t t = 0; t < zr.w.size(); ++t) {
                    double gr = slope * zr.z[t];
                    double gt = fv * zr.dz[t] / rr;
                    double m2 = gr * gr + gt * gt + mu * mu;
                    J += wr * zr.w[t] * std::pow(m2, 0.5 * p) / p;
                    if (grad) {
                        double sg = std::pow(m2, 0.5 * (p - 2.0));
                        double d_slope = sg * gr * zr.z[t];
                        double d_fv = sg * gt * zr.dz[t] / rr;
                        (*grad)[e] += wr * zr.w[t] * (-d_slope / g.h[e] + d_fv * g.shl[idx]);
                        (*grad)[e + 1] += wr * zr.w[t] * (d_slope / g.h[e] + d_fv * g.shr[idx]);
                    }
                }
            }
        }
        J -= pair_with(gv);
        if (grad) {
            auto mg = fem::interp(g, mass_profile);
            for (int e = 0; e < N - 1; ++e)
                for (int k = 0; k < g.gk; ++k) {
                    size_t idx = static_cast<size_t>(e) * g.gk + k;
                    (*grad)[e] -= g.gw[idx] * mg[idx] * g.shl[idx];
                    (*grad)[e + 1] -= g.gw[idx] * mg[idx] * g.shr[idx];
                }
            (*grad)[N - 1] = 0.0;
        }
        return J;
    };
    std::vector<double> gv(N, 0.0), grad(N), gprev(N), wprev(N);
    for (double mu : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        energy_grad(gv, mu, &grad);
        double step = 1e-3;
        for (int it = 0; it < 3000; ++it) {
            wprev = gv;
            gprev = grad;
            for (int i = 0; i < N - 1; ++i) gv[i] -= step * grad[i];
            energy_grad(gv, mu, &grad);
            double num = 0.0, den = 0.0, gn = 0.0;
            for (int i = 0; i < N; ++i) {
                double dw = gv[i] - wprev[i], dg = grad[i] - gprev[i];
                num += dw * dw;
                den += dw * dg;
                gn += grad[i] * grad[i];
            }
            if (den > 0.0) step = num / den;
            else step *= 2.0;
            if (std::sqrt(gn) < 1e-13) break;
        }
    }
    // int |Dw|^p at mu = 0
    double acc = 0.0;
    for (int e = 0; e < N - 1; ++e) {
        double slope = (gv[e + 1] - gv[e]) / g.h[e];
        for (int k = 0; k < g.gk; ++k) {
            size_t idx = static_cast<size_t>(e) * g.gk + k;
            double rr = g.gx[idx];
            double wr = g.gw[idx] / area;
            double fv = gv[e] * g.shl[idx] + gv[e + 1] * g.shr[idx];
            for (size_t t = 0; t < zr.w.size(); ++t) {
                double gr = slope * zr.z[t];
                double gt = fv * zr.dz[t] / rr;
                acc += wr * zr.w[t] * std::pow(gr * gr + gt * gt, 0.5 * p);
            }
        }
    }
    return acc;
}

} // namespace

TEST_SUITE_BEGIN("dualnorm");

TEST_CASE("pointwise residual: calibrated and miscalibrated bubbles") {
    auto s = make_setup(3, 2.0);
    const Params& pr = s.cal.params;
    RadialField u;
    u.add_bubble(s.bubble, 1.0);
    Residual f = residual(pr, u, s.grid);
    BubbleProfile prof(pr, s.bubble);
    double sup = 0.0;
    for (int i = 0; i < s.grid.N; ++i) {
        if (prof.map_ratio(s.grid.r[i]) > 1e6) continue;
        sup = std::max(sup, std::abs(f.pointwise[i]) /
                                std::pow(prof.value(s.grid.r[i]), pr.pstar - 1.0));
    }
    CHECK(sup <= 1e-8);

    RadialField u2;
    u2.add_bubble(s.bubble, 2.0);
    Residual f2 = residual(pr, u2, s.grid);
    double factor = std::pow(2.0, pr.p - 1.0) - std::pow(2.0, pr.pstar - 1.0);
    for (int i = 0; i < s.grid.N; i += 37) {
        if (prof.map_ratio(s.grid.r[i]) > 1e6) continue;
        double expect = factor * std::pow(prof.value(s.grid.r[i]), pr.pstar - 1.0);
        CHECK(f2.pointwise[i] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("non-radial residual input is rejected") {
    auto s = make_setup(3, 2.0);
    ModeFn bad;
    bad.modes.push_back({1, std::vector<double>(s.grid.N, 0.1)});
    CHECK_THROWS(residual(s.cal.params, bad, s.grid));
}

TEST_CASE("functional and pointwise forms agree on smooth test profiles") {
    auto s = make_setup(4, 1.5);
    const Params& pr = s.cal.params;
    RadialField u;
    u.add_bubble(s.bubble, 1.0);
    u.add_nodal([&] {
        std::vector<double> bump(s.grid.N);
        for (int i = 0; i < s.grid.N; ++i)
            bump[i] = std::exp(-4.0 * (s.grid.r[i] - 1.5) * (s.grid.r[i] - 1.5));
        return bump;
    }(), 0.05);
    Residual f = residual(pr, u, s.grid);
    for (int t = 0; t < 10; ++t) {
        double r0 = 0.6 + 0.25 * t, sg = 0.25;
        std::vector<double> phi(s.grid.N), integ(s.grid.N);
        for (int i = 0; i < s.grid.N; ++i) {
            double z = (s.grid.r[i] - r0) / sg;
            phi[i] = std::exp(-0.5 * z * z);
            integ[i] = f.pointwise[i] * phi[i];
        }
        double functional = residual_pairing(s.grid, f, phi);
        double pointwise = integrate(s.grid, integ);
        double scale = std::abs(functional) + std::abs(pointwise) + 1e-12;
        CHECK(std::abs(functional - pointwise) / scale < 1e-8);
    }
}

TEST_CASE("dual solve: zero data, p = 2 linear oracle, duality identity") {
    auto s = make_setup(3, 2.0);
    const Params& pr = s.cal.params;
    Residual zero;
    zero.lin_grad.assign(s.grid.gx.size(), 0.0);
    zero.lin_val.assign(s.grid.gx.size(), 0.0);
    zero.pointwise.assign(s.grid.N, 0.0);
    auto dz = dual_solve(pr, zero, s.grid);
    for (double wi : dz.w) CHECK(wi == 0.0);
    CHECK(dz.dual_norm == 0.0);

    // data: mass-type functional from a bump profile
    Residual f = zero;
    for (size_t i = 0; i < s.grid.gx.size(); ++i) {
        double z = (s.grid.gx[i] - 1.0) / 0.4;
        f.lin_val[i] = std::exp(-0.5 * z * z);
    }
    auto ds = dual_solve(pr, f, s.grid);
    CHECK(std::abs(ds.pairing - std::pow(ds.grad_norm_p, 2.0)) <=
          1e-8 * std::pow(ds.grad_norm_p, 2.0));

    // direct linear solve of the same discrete system
    {
        const auto& g = s.grid;
        int nd = g.N - 1;
        std::vector<double> ell(g.N, 0.0);
        for (int e = 0; e < g.N - 1; ++e)
            for (int k = 0; k < g.gk; ++k) {
                size_t idx = static_cast<size_t>(e) * g.gk + k;
                ell[e] += f.lin_val[idx] * g.gw[idx] * g.shl[idx];
                ell[e + 1] += f.lin_val[idx] * g.gw[idx] * g.shr[idx];
            }
        std::vector<double> hd(nd, 0.0), ho(nd - 1, 0.0);
        for (int e = 0; e < g.N - 1; ++e) {
            double he = g.elem_meas[e] / (g.h[e] * g.h[e]);
            if (e < nd) hd[e] += he;
            if (e + 1 < nd) {
                hd[e + 1] += he;
                ho[e] -= he;
            }
        }
        // tridiagonal solve (Thomas)
        std::vector<double> c(ho.begin(), ho.end()), d(hd.begin(), hd.end()),
            x(ell.begin(), ell.begin() + nd);
        for (int i = 1; i < nd; ++i) {
            double m = c[i - 1] / d[i - 1];
            d[i] -= m * c[i - 1];
            x[i] -= m * x[i - 1];
        }
        std::vector<double> w(nd);
        w[nd - 1] = x[nd - 1] / d[nd - 1];
        for (int i = nd - 2; i >= 0; --i) w[i] = (x[i] - ho[i] * w[i + 1]) / d[i];
        double sup = 0.0, scale = 0.0;
        for (int i = 0; i < nd; ++i) {
            sup = std::max(sup, std::abs(w[i] - ds.w[i]));
            scale = std::max(scale, std::abs(w[i]));
        }
        CHECK(sup / scale < 1e-10);
    }
}

TEST_CASE("dual norm: bubble residual is tiny; dictionary stays below") {
    for (auto [n, p] : std::vector<std::pair<int, double>>{{3, 2.0}, {4, 1.5}, {5, 3.0}}) {
        auto s = make_setup(n, p);
        const Params& pr = s.cal.params;
        RadialField u;
        u.add_bubble(s.bubble, 1.0);
        Residual f = residual(pr, u, s.grid);
        auto op = assemble_mode_operator(pr, s.bubble, s.grid, 0);
        DualOpts opts;
        opts.rmax = s.grid.r[op.dirichlet_begin - 1];
        auto ds = dual_solve(pr, f, s.grid, opts);
        double scale = std::pow(pr.S, pr.n * (p - 1.0) / p);
        CHECK(ds.dual_norm <= 1e-6 * scale);
    }

    auto s = make_setup(3, 2.0);
    const Params& pr = s.cal.params;
    auto dir = make_direction(pr, s.bubble, s.grid, DirectionSpec::parse("eig:2"));
    RadialField u;
    u.add_bubble(s.bubble, 1.0);
    u.add_nodal(dir, 1e-2);
    Residual f = residual(pr, u, s.grid);
    auto op = assemble_mode_operator(pr, s.bubble, s.grid, 0);
    DualOpts opts;
    opts.rmax = s.grid.r[op.dirichlet_begin - 1];
    auto ds = dual_solve(pr, f, s.grid, opts);
    BubbleProfile prof(pr, s.bubble);
    std::vector<std::vector<double>> dict;
    std::vector<double> vn(s.grid.N), dn(s.grid.N);
    for (int i = 0; i < s.grid.N; ++i) {
        vn[i] = prof.value(s.grid.r[i]);
        dn[i] = prof.dlam(s.grid.r[i]);
    }
    dict.push_back(vn);
    dict.push_back(dn);
    auto eres = solve_eigs(op, 6);
    for (int k = 2; k < 6; ++k) dict.push_back(eres.eigenvectors[k]);
    double lb = dictionary_lower_bound(pr, f, s.grid, dict);
    CHECK(lb <= ds.dual_norm * (1.0 + 1e-10));
    CHECK(lb > 0.0);
}

TEST_CASE("p = 2 spectral oracle for a mass-type functional") {
    auto s = make_setup(3, 2.0);
    const Params& pr = s.cal.params;
    auto op = assemble_mode_operator(pr, s.bubble, s.grid, 0);
    auto eres = solve_eigs(op, 3);
    const auto& xi = eres.eigenvectors[2];
    double mu3 = eres.eigenvalues[2];

    BubbleProfile prof(pr, s.bubble);
    Residual f;
    f.lin_grad.assign(s.grid.gx.size(), 0.0);
    f.lin_val.resize(s.grid.gx.size());
    auto xig = fem::interp(s.grid, xi);
    for (size_t i = 0; i < s.grid.gx.size(); ++i)
        f.lin_val[i] = std::pow(prof.value(s.grid.gx[i]), pr.pstar - 2.0) * xig[i];
    DualOpts opts;
    opts.rmax = s.grid.r[op.dirichlet_begin - 1];
    auto ds = dual_solve(pr, f, s.grid, opts);
    double expect = 1.0 / std::sqrt(mu3); // ||Dw||_2 with w = xi/mu3, B-normalized xi
    CHECK(std::abs(ds.dual_norm - expect) / expect < 1e-6);
}

TEST_CASE("dual norm homogeneity in the data") {
    auto s = make_setup(4, 1.5);
    const Params& pr = s.cal.params;
    Residual f;
    f.lin_grad.assign(s.grid.gx.size(), 0.0);
    f.lin_val.resize(s.grid.gx.size());
    for (size_t i = 0; i < s.grid.gx.size(); ++i) {
        double z = (s.grid.gx[i] - 1.2) / 0.5;
        f.lin_val[i] = std::exp(-0.5 * z * z);
    }
    auto d1 = dual_solve(pr, f, s.grid);
    Residual f8 = f;
    for (auto& x : f8.lin_val) x *= 8.0;
    auto d8 = dual_solve(pr, f8, s.grid);
    CHECK(std::abs(d8.dual_norm - 8.0 * d1.dual_norm) / (8.0 * d1.dual_norm) < 1e-8);
    double wscale = std::pow(8.0, 1.0 / (pr.p - 1.0));
    CHECK(std::abs(d8.grad_norm_p - wscale * d1.grad_norm_p) / (wscale * d1.grad_norm_p) < 1e-8);
}

TEST_CASE("zonal mode-1 dual solve against the 2d Cartesian oracle at p = 1.5") {
    auto s = make_setup(2, 1.5, 384);
    std::vector<double> massp(s.grid.N);
    for (int i = 0; i < s.grid.N; ++i) {
        double r = s.grid.r[i];
        massp[i] = r * std::exp(-r * r);
    }
    double zonal = zonal_dual_grad_pow(s, massp, 1.5);
    double cart = oracles::cartesian2d_dual_grad_pow(
        [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
        [](double X, double Y) {
            double r = std::hypot(X, Y);
            if (r < 1e-12) return 0.0;
            return r * std::exp(-r * r) * std::sqrt(2.0) * X / r;
        },
        6.0, 181, 1.5);
    CHECK(std::abs(zonal - cart) / cart < 0.05);
}

TEST_SUITE_END();
