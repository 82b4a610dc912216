#include "soblab/projection.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "soblab/fem.hpp"

namespace soblab {

namespace {

struct UnitBubbleIntegrals {
    double J = 0.0;  // int U_lam^{p*-1} u
    double K = 0.0;  // int U_lam^{p*-2} (d_lam U_lam) u
    double Kp = 0.0; // dK/dlam
};

UnitBubbleIntegrals unit_integrals(const Params& pr, const RadialGrid& g,
                                   const std::vector<double>& ug, double lam) {
    Bubble unit;
    unit.scale = lam;
    BubbleProfile U(pr, unit);
    UnitBubbleIntegrals out;
    const double ps = pr.pstar;
    for (size_t i = 0; i < g.gx.size(); ++i) {
        double r = g.gx[i], w = g.gw[i];
        double Uv = U.value(r);
        double dU = U.dlam(r);
        double d2U = U.d2lam(r);
        double Upm2 = std::pow(Uv, ps - 2.0);
        out.J += w * Upm2 * Uv * ug[i];
        out.K += w * Upm2 * dU * ug[i];
        out.Kp += w * ((ps - 2.0) * Upm2 / Uv * dU * dU + Upm2 * d2U) * ug[i];
    }
    return out;
}

} // namespace

ProjectionResult project(const Params& pr, const RadialField& u, const Bubble& init,
                         const RadialGrid& g) {
    if (!init.centered())
        throw std::invalid_argument("project: radial pipeline requires a centered init bubble");
    const double ps = pr.pstar;
    auto ug = u.values_at_gauss(pr, g);

    // Lambda0 = int U^{p*} dx, lambda-invariant by scaling
    double Lambda0 = 0.0;
    {
        Bubble unit;
        unit.scale = init.scale;
        BubbleProfile U(pr, unit);
        for (size_t i = 0; i < g.gx.size(); ++i)
            Lambda0 += g.gw[i] * std::pow(U.value(g.gx[i]), ps);
    }

    // The raw conditions are c^{p*-1} (J(lam) - c Lambda0) and c^{p*-1} K(lam);
    // dividing by c^{p*-1} removes the spurious attractor at c = 0 and leaves
    // a triangular system: K pins lambda, the first equation then pins c.
    double c = init.amplitude, lam = init.scale;
    double scale_ref = 0.0;
    int iters = 0;
    const int max_iters = 80;
    double h1 = 0.0, h2 = 0.0;
    for (; iters < max_iters; ++iters) {
        auto I = unit_integrals(pr, g, ug, lam);
        h1 = I.J - c * Lambda0;
        h2 = I.K;
        scale_ref = std::abs(I.J) + c * Lambda0;
        double res = std::hypot(h1, h2);
        if (res <= 1e-14 * scale_ref) break;

        // Jacobian: d h1/dc = -Lambda0, d h1/dlam = (p*-1) K, d h2/dlam = K'
        if (I.Kp == 0.0 || !std::isfinite(I.Kp))
            throw std::runtime_error("project: singular Newton system at c=" +
                                     std::to_string(c) + " lambda=" + std::to_string(lam));
        double dl = -h2 / I.Kp;
        double dc = (h1 + (ps - 1.0) * I.K * dl) / Lambda0;
        if (std::abs(dc) <= 1e-15 * c && std::abs(dl) <= 1e-15 * lam) break; // rounding floor
        double t = 1.0;
        if (std::abs(dl) > 0.5 * lam) t = 0.5 * lam / std::abs(dl);
        if (std::abs(dc) > 0.9 * c) t = std::min(t, 0.9 * c / std::abs(dc));
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            double c2 = c + t * dc, l2 = lam + t * dl;
            if (c2 > 0.0 && l2 > 0.0) {
                auto I2 = unit_integrals(pr, g, ug, l2);
                double r1 = I2.J - c2 * Lambda0;
                double r2 = I2.K;
                if (std::hypot(r1, r2) <= (1.0 - 0.25 * t) * res ||
                    std::hypot(r1, r2) < 1e-14 * scale_ref) {
                    c = c2;
                    lam = l2;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted)
            throw std::runtime_error(
                "project: Newton diverged (outside basin); last iterate c=" +
                std::to_string(c) + " lambda=" + std::to_string(lam) +
                " residuals=(" + std::to_string(h1) + "," + std::to_string(h2) + ")");
    }
    if (iters == max_iters && std::hypot(h1, h2) > 1e-12 * scale_ref)
        throw std::runtime_error("project: Newton did not converge in " +
                                 std::to_string(max_iters) + " iterations; residuals=(" +
                                 std::to_string(h1) + "," + std::to_string(h2) + ")");

    ProjectionResult out;
    out.newton_iters = iters;
    out.v.amplitude = c;
    out.v.scale = lam;

    RadialField diff = u;
    diff.add_bubble(out.v, -1.0);
    out.epsilon = diff.grad_norm(pr, g, pr.p);

    out.phi_field = diff;
    if (out.epsilon > 0.0) out.phi_field.scale(1.0 / out.epsilon);
    auto phi_nodal = out.phi_field.values_at_nodes(pr, g);
    out.phi = ModeFn::radial(std::move(phi_nodal));

    // orthogonality residuals, relative to int v^{p*-1} u
    {
        auto I = unit_integrals(pr, g, ug, lam);
        double cp1 = std::pow(c, ps - 1.0);
        double ref = std::abs(cp1 * I.J);
        if (ref == 0.0) ref = 1.0;
        out.ortho_residuals.assign(pr.n + 2, 0.0);
        out.ortho_residuals[0] = (cp1 * I.J - std::pow(c, ps) * Lambda0) / ref;
        out.ortho_residuals[1] = cp1 * I.K / ref;
        // translation residuals vanish identically for the radial pipeline
    }
    double a = normalization_constant(pr, &g);
    out.amplitude_drift = std::abs(c - a) / a;
    return out;
}

} // namespace soblab
