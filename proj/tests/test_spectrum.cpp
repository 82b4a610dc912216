#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "soblab/bubble.hpp"
#include "soblab/fem.hpp"
#include "soblab/rng.hpp"
#include "soblab/spectrum.hpp"
#include "soblab/stability.hpp"
#include "soblab/vectorial.hpp"

using namespace soblab;

namespace {

struct Setup {
    Calibration cal;
    RadialGrid grid;
    Bubble bubble;
};

Setup make_setup(int n, double p, int N = 512, double lam = 1.0) {
    Setup s;
    s.grid = make_grid(n, N, 1.0 / lam);
    s.cal = calibrate(n, p, &s.grid);
    s.bubble.amplitude = s.cal.amplitude;
    s.bubble.scale = lam;
    return s;
}

double b_angle(const ModeOperator& op, const std::vector<double>& f,
               const std::vector<double>& h) {
    auto xf = op.gather(f), xh = op.gather(h);
    double ff = op.quad_form_B(xf), hh = op.quad_form_B(xh);
    std::vector<double> sum(xf.size());
    for (size_t i = 0; i < xf.size(); ++i) sum[i] = xf[i] + xh[i];
    double cross = 0.5 * (op.quad_form_B(sum) - ff - hh);
    double c = std::abs(cross) / std::sqrt(ff * hh);
    return std::sqrt(std::max(0.0, 1.0 - std::min(1.0, c) * std::min(1.0, c)));
}

} // namespace

TEST_SUITE_BEGIN("spectrum");

TEST_CASE("mode operator: symmetry bookkeeping and the v-form identity") {
    auto s = make_setup(3, 2.0);
    auto op = assemble_mode_operator(s.cal.params, s.bubble, s.grid, 0);
    // form value on v equals (p-1) S^n; exact at the function level
    BubbleProfile prof(s.cal.params, s.bubble);
    auto vg = fem::bubble_values(s.grid, prof);
    auto dvg = fem::bubble_derivs(s.grid, prof);
    double expect = (s.cal.params.p - 1.0) * std::pow(s.cal.params.S, s.cal.params.n);
    double exact_form = linearized_form(s.cal.params, s.bubble, s.grid, 0, vg, dvg);
    // same integrand through the |Dv|^p route: exact identity per measure
    std::vector<double> integ(dvg.size());
    for (size_t i = 0; i < dvg.size(); ++i)
        integ[i] = (s.cal.params.p - 1.0) * std::pow(-dvg[i], s.cal.params.p);
    CHECK(std::abs(exact_form - fem::integrate(s.grid, integ)) / expect < 1e-12);
    // against (p-1) S^n the element view misses only the far tail of |Dv|^p
    CHECK(std::abs(exact_form - expect) / expect < 1e-4);
    // the P1 matrix hits the same value at its own O(h^2) rate
    std::vector<double> v(s.grid.N);
    for (int i = 0; i < s.grid.N; ++i) v[i] = prof.value(s.grid.r[i]);
    double form = op.quad_form_A(op.gather(v));
    CHECK(std::abs(form - expect) / expect < 1e-3);
    auto s2 = make_setup(3, 2.0, 256);
    auto opc = assemble_mode_operator(s2.cal.params, s2.bubble, s2.grid, 0);
    std::vector<double> vc(s2.grid.N);
    BubbleProfile profc(s2.cal.params, s2.bubble);
    for (int i = 0; i < s2.grid.N; ++i) vc[i] = profc.value(s2.grid.r[i]);
    double formc = opc.quad_form_A(opc.gather(vc));
    CHECK(std::abs(formc - expect) > 3.0 * std::abs(form - expect)); // ~h^2 decay
    // mass matrix is positive definite on random dof vectors
    Rng rng(5);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> x(op.dofs());
        for (auto& xi : x) xi = rng.normal();
        CHECK(op.quad_form_B(x) > 0.0);
    }
}

TEST_CASE("p = 2 stiffness equals the P1 gradient energy") {
    auto s = make_setup(3, 2.0);
    auto op = assemble_mode_operator(s.cal.params, s.bubble, s.grid, 0);
    Rng rng(17);
    std::vector<double> x(op.dofs());
    for (auto& xi : x) xi = rng.normal();
    auto f = op.scatter(x);
    auto df = fem::deriv(s.grid, f);
    double p1 = 0.0;
    for (size_t i = 0; i < df.size(); ++i) p1 += s.grid.gw[i] * df[i] * df[i];
    CHECK(op.quad_form_A(x) == doctest::Approx(p1).epsilon(1e-12));
    // cross-check against the spectral-path norm on a smooth profile
    BubbleProfile prof(s.cal.params, s.bubble);
    std::vector<double> v(s.grid.N);
    for (int i = 0; i < s.grid.N; ++i) v[i] = prof.value(s.grid.r[i]);
    double a = op.quad_form_A(op.gather(v));
    double b = std::pow(grad_norm_lp(s.grid, ModeFn::radial(v), 2.0), 2.0);
    CHECK(std::abs(a - b) / b < 1e-3);
}

TEST_CASE("quadratic form against direct zonal quadrature on random profiles") {
    for (auto [n, p, ell] :
         std::vector<std::tuple<int, double, int>>{std::make_tuple(3, 2.0, 1), std::make_tuple(4, 1.5, 2), std::make_tuple(5, 3.0, 1)}) {
        auto s = make_setup(n, p);
        auto op = assemble_mode_operator(s.cal.params, s.bubble, s.grid, ell);
        Rng rng(101 + ell);
        std::vector<double> x(op.dofs());
        for (auto& xi : x) xi = rng.normal();
        auto f = op.scatter(x);
        double form = op.quad_form_A(x);

        // direct quadrature of int |Dv|^{p-2}|Dphi|^2 + (p-2)|Dv|^{p-4}(Dv.Dphi)^2
        // for phi = f(r) Z_ell(theta), using the polar-angle rule
        BubbleProfile prof(s.cal.params, s.bubble);
        auto zr = zonal_rule(n, ell);
        double direct = 0.0;
        const double area = sphere_area(n);
        for (int e = 0; e < s.grid.N - 1; ++e) {
            double slope = (f[e + 1] - f[e]) / s.grid.h[e];
            for (int k = 0; k < s.grid.gk; ++k) {
                size_t idx = static_cast<size_t>(e) * s.grid.gk + k;
                double rr = s.grid.gx[idx];
                double fv = f[e] * s.grid.shl[idx] + f[e + 1] * s.grid.shr[idx];
                double wr = s.grid.gw[idx] / area; // r^{n-1} dr
                double wgt = std::pow(-prof.deriv(rr), p - 2.0);
                double th_sum = 0.0;
                for (size_t t = 0; t < zr.w.size(); ++t) {
                    double grad_r = slope * zr.z[t];
                    double grad_t = fv * zr.dz[t] / rr;
                    double g2 = grad_r * grad_r + grad_t * grad_t;
                    th_sum += zr.w[t] * (wgt * g2 + (p - 2.0) * wgt * grad_r * grad_r);
                }
                direct += wr * th_sum;
            }
        }
        CHECK(std::abs(form - direct) / std::abs(direct) < 1e-8);
    }
}

TEST_CASE("eigenvalue identities and eigenvector directions") {
    for (auto [n, p] : std::vector<std::pair<int, double>>{{3, 2.0}, {4, 1.5}, {5, 3.0}}) {
        auto s = make_setup(n, p);
        const Params& pr = s.cal.params;
        auto op0 = assemble_mode_operator(pr, s.bubble, s.grid, 0);
        auto r0 = solve_eigs(op0, 3);
        CHECK(std::abs(r0.eigenvalues[0] - (p - 1.0)) / (p - 1.0) < 1e-3);
        CHECK(std::abs(r0.eigenvalues[1] - (pr.pstar - 1.0)) / (pr.pstar - 1.0) < 1e-3);

        BubbleProfile prof(pr, s.bubble);
        std::vector<double> v(s.grid.N), dl(s.grid.N), mdv(s.grid.N);
        for (int i = 0; i < s.grid.N; ++i) {
            v[i] = prof.value(s.grid.r[i]);
            dl[i] = prof.dlam(s.grid.r[i]);
            mdv[i] = -prof.deriv(s.grid.r[i]);
        }
        CHECK(b_angle(op0, r0.eigenvectors[0], v) < 1e-3);
        CHECK(b_angle(op0, r0.eigenvectors[1], dl) < 1e-3);

        auto op1 = assemble_mode_operator(pr, s.bubble, s.grid, 1);
        auto r1 = solve_eigs(op1, 2);
        CHECK(std::abs(r1.eigenvalues[0] - (pr.pstar - 1.0)) / (pr.pstar - 1.0) < 1e-3);
        CHECK(b_angle(op1, r1.eigenvectors[0], mdv) < 1e-3);

        // Rayleigh quotients reproduce the eigenvalues
        for (size_t k = 0; k < r0.eigenvalues.size(); ++k)
            CHECK(std::abs(r0.rayleigh[k] - r0.eigenvalues[k]) <=
                  1e-8 * std::abs(r0.eigenvalues[k]));

        // ascending within each mode, nondecreasing across modes at fixed index
        auto op2 = assemble_mode_operator(pr, s.bubble, s.grid, 2);
        auto r2 = solve_eigs(op2, 2);
        CHECK(r0.eigenvalues[0] <= r0.eigenvalues[1]);
        CHECK(r0.eigenvalues[1] <= r0.eigenvalues[2]);
        CHECK(r1.eigenvalues[0] >= r0.eigenvalues[0] - 1e-9);
        CHECK(r2.eigenvalues[0] >= r1.eigenvalues[0] - 1e-9);
        CHECK(r2.eigenvalues[0] > pr.pstar - 1.0);
    }
}

TEST_CASE("eigenvectors come back B-orthonormal") {
    auto s = make_setup(4, 1.5);
    auto op = assemble_mode_operator(s.cal.params, s.bubble, s.grid, 0);
    auto r = solve_eigs(op, 4);
    for (int i = 0; i < 4; ++i) {
        auto xi = op.gather(r.eigenvectors[i]);
        CHECK(op.quad_form_B(xi) == doctest::Approx(1.0).epsilon(1e-10));
        for (int j = i + 1; j < 4; ++j) {
            auto xj = op.gather(r.eigenvectors[j]);
            std::vector<double> sum(xi.size());
            for (size_t t = 0; t < xi.size(); ++t) sum[t] = xi[t] + xj[t];
            double cross = 0.5 * (op.quad_form_B(sum) - 2.0);
            CHECK(std::abs(cross) < 1e-9);
        }
    }
}

TEST_CASE("spectral gap: positivity and scale invariance") {
    auto s = make_setup(3, 2.0);
    GapInfo gap = spectral_gap(s.cal.params, s.bubble, s.grid);
    CHECK(gap.lambda_hat > 0.0);

    for (double lam : {0.5, 2.0}) {
        auto sl = make_setup(3, 2.0, 512, lam);
        GapInfo gl = spectral_gap(sl.cal.params, sl.bubble, sl.grid);
        CHECK(std::abs(gl.lambda_hat - gap.lambda_hat) / gap.lambda_hat < 1e-6);
    }
}

TEST_CASE("spectral gap stable under refinement at (3, 1.2)") {
    auto c = make_setup(3, 1.2, 512);
    auto f = make_setup(3, 1.2, 1024);
    GapInfo gc = spectral_gap(c.cal.params, c.bubble, c.grid);
    GapInfo gf = spectral_gap(f.cal.params, f.bubble, f.grid);
    CHECK(std::abs(gc.lambda_hat - gf.lambda_hat) / gf.lambda_hat < 0.05);
}

TEST_CASE("perturbed gap check: zero phi, small eigen-directions, preconditions") {
    auto s = make_setup(3, 2.0);
    const Params& pr = s.cal.params;
    GapInfo gap = spectral_gap(pr, s.bubble, s.grid);

    auto zero = ModeFn::radial(std::vector<double>(s.grid.N, 0.0));
    auto rep0 = perturbed_gap_check(pr, s.bubble, s.grid, zero, 0.0, 1.0, 3, &gap);
    CHECK(rep0.margin == 0.0);

    auto dir = make_direction(pr, s.bubble, s.grid, DirectionSpec::parse("eig:2"));
    for (double target : {1e-4, 1e-3, 1e-2}) {
        auto phi = dir;
        for (auto& x : phi) x *= target;
        auto rep = perturbed_gap_check(pr, s.bubble, s.grid, ModeFn::radial(phi), 0.0, 1.0, 3, &gap);
        CHECK(rep.margin >= 0.0);
        // at p = 2 the check is the gap inequality with lambda-hat slack
        double lamS = gap.lambda_hat * std::pow(pr.S, -pr.p);
        CHECK(rep.lhs - rep.rhs >= 0.25 * lamS * rep.rhs / (pr.pstar - 1.0 + lamS));
    }

    CHECK_THROWS(perturbed_gap_check(pr, s.bubble, s.grid, zero, 0.0, 1.0, 1, &gap));
    // non-orthogonal phi rejected
    BubbleProfile prof(pr, s.bubble);
    std::vector<double> vv(s.grid.N);
    for (int i = 0; i < s.grid.N; ++i) vv[i] = prof.value(s.grid.r[i]) * 1e-4;
    CHECK_THROWS(perturbed_gap_check(pr, s.bubble, s.grid, ModeFn::radial(vv), 0.0, 1.0, 3, &gap));
    // norm cap enforced
    auto big = dir;
    for (auto& x : big) x *= 0.5;
    CHECK_THROWS(perturbed_gap_check(pr, s.bubble, s.grid, ModeFn::radial(big), 0.0, 1.0, 3, &gap));
}

TEST_CASE("perturbed gap check on the p < 2 branches") {
    for (auto [n, p, branch] :
         std::vector<std::tuple<int, double, int>>{std::make_tuple(3, 1.2, 1), std::make_tuple(4, 1.5, 2)}) {
        auto s = make_setup(n, p);
        const Params& pr = s.cal.params;
        GapInfo gap = spectral_gap(pr, s.bubble, s.grid);
        auto cscal = estimate_scalar_constants(pr.pstar, 0.1);
        auto cvec = estimate_vec_constants(p, 0.1);
        double lamS = gap.lambda_hat * std::pow(pr.S, -p);
        double gamma0 = cvec.c1 * ((pr.pstar - 1.0) + lamS) / (2.0 * (pr.pstar - 1.0 + 0.1));

        auto dir = make_direction(pr, s.bubble, s.grid, DirectionSpec::parse("eig:2"));
        auto phi = dir;
        for (auto& x : phi) x *= 1e-3;
        auto rep = perturbed_gap_check(pr, s.bubble, s.grid, ModeFn::radial(phi), gamma0,
                                       cscal.C1, branch, &gap);
        CHECK(rep.margin >= 0.0);
        CHECK(rep.branch == branch);
    }
}

TEST_SUITE_END();
