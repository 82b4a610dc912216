#include "soblab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace soblab {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_N.
void gauss_legendre(int N, std::vector<double>& x, std::vector<double>& w) {
    x.assign(N, 0.0);
    w.assign(N, 0.0);
    const int m = (N + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (N + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < N; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = N * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[N - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[N - 1 - i] = w[i];
    }
}

// Fornberg weights for the first derivative at z over nodes xs.
std::vector<double> fd_weights(double z, const std::vector<double>& xs) {
    const int n = static_cast<int>(xs.size());
    std::vector<double> c0(n, 0.0), c1v(n, 0.0);
    c0[0] = 1.0;
    double c1 = 1.0, c4 = xs[0] - z;
    for (int i = 1; i < n; ++i) {
        double c2 = 1.0, c5 = c4;
        c4 = xs[i] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                c1v[i] = c1 * (c0[i - 1] - c5 * c1v[i - 1]) / c2;
                c0[i] = -c1 * c5 * c0[i - 1] / c2;
            }
            c1v[j] = (c4 * c1v[j] - c0[j]) / c3;
            c0[j] = c4 * c0[j] / c3;
        }
        c1 = c2;
    }
    return c1v;
}

} // namespace

RadialGrid make_grid(int n, int N, double L) {
    if (N < 16) throw std::invalid_argument("make_grid: need N >= 16");
    if (!(L > 0.0)) throw std::invalid_argument("make_grid: need L > 0");
    if (n < 2) throw std::invalid_argument("make_grid: need n >= 2");

    RadialGrid g;
    g.n = n;
    g.N = N;
    g.L = L;

    std::vector<double> x, w;
    gauss_legendre(N, x, w);
    g.s.resize(N);
    g.r.resize(N);
    g.quad_w.resize(N);
    g.quad_wr.resize(N);
    const double area = sphere_area(n);
    for (int i = 0; i < N; ++i) {
        double s = 0.5 * (x[i] + 1.0);
        double wg = 0.5 * w[i];
        double r = L * s / (1.0 - s);
        double drds = L / ((1.0 - s) * (1.0 - s));
        g.s[i] = s;
        g.r[i] = r;
        g.quad_wr[i] = wg * drds;
        g.quad_w[i] = wg * drds * area * std::pow(r, n - 1);
    }

    // FD stencils in s, chain-ruled to d/dr.
    const int hw = g.stencil_hw;
    const int sw = 2 * hw + 1;
    g.stencil_lo.resize(N);
    g.stencil_w.assign(static_cast<size_t>(N) * sw, 0.0);
    for (int i = 0; i < N; ++i) {
        int lo = std::clamp(i - hw, 0, N - sw);
        g.stencil_lo[i] = lo;
        std::vector<double> xs(g.s.begin() + lo, g.s.begin() + lo + sw);
        auto wts = fd_weights(g.s[i], xs);
        // pin the consistency condition: weights of a derivative stencil sum
        // to zero, so constants are annihilated exactly
        double wsum = 0.0;
        for (double wk : wts) wsum += wk;
        wts[i - lo] -= wsum;
        double dsdr = (1.0 - g.s[i]) * (1.0 - g.s[i]) / L;
        for (int k = 0; k < sw; ++k) g.stencil_w[static_cast<size_t>(i) * sw + k] = wts[k] * dsdr;
    }

    // element view: 8-point Gauss per element
    std::vector<double> qx, qw;
    gauss_legendre(g.gk, qx, qw);
    const int ne = N - 1;
    g.h.resize(ne);
    g.gx.resize(static_cast<size_t>(ne) * g.gk);
    g.gw.resize(static_cast<size_t>(ne) * g.gk);
    g.shl.resize(static_cast<size_t>(ne) * g.gk);
    g.shr.resize(static_cast<size_t>(ne) * g.gk);
    g.elem_meas.assign(ne, 0.0);
    for (int e = 0; e < ne; ++e) {
        double r0 = g.r[e], r1 = g.r[e + 1];
        double h = r1 - r0;
        g.h[e] = h;
        for (int k = 0; k < g.gk; ++k) {
            double rr = 0.5 * (r0 + r1) + 0.5 * h * qx[k];
            double ww = 0.5 * h * qw[k] * area * std::pow(rr, n - 1);
            size_t idx = static_cast<size_t>(e) * g.gk + k;
            g.gx[idx] = rr;
            g.gw[idx] = ww;
            g.shl[idx] = (r1 - rr) / h;
            g.shr[idx] = (rr - r0) / h;
            g.elem_meas[e] += ww;
        }
    }
    return g;
}

double integrate(const RadialGrid& g, const std::vector<double>& f, TailReport* tail) {
    if (static_cast<int>(f.size()) != g.N)
        throw std::invalid_argument("integrate: profile size mismatch");
    double total = 0.0;
    for (int i = 0; i < g.N; ++i) total += g.quad_w[i] * f[i];
    if (tail) {
        int start = g.N - std::max(1, g.N / 20);
        double t = 0.0;
        for (int i = start; i < g.N; ++i) t += g.quad_w[i] * f[i];
        tail->tail_fraction = (total != 0.0) ? std::abs(t / total) : 0.0;
        tail->tail_dominated = tail->tail_fraction > 1e-6;
    }
    return total;
}

std::vector<double> differentiate(const RadialGrid& g, const std::vector<double>& f) {
    if (static_cast<int>(f.size()) != g.N)
        throw std::invalid_argument("differentiate: profile size mismatch");
    const int sw = 2 * g.stencil_hw + 1;
    std::vector<double> out(g.N, 0.0);
    for (int i = 0; i < g.N; ++i) {
        int lo = g.stencil_lo[i];
        double acc = 0.0;
        for (int k = 0; k < sw; ++k) acc += g.stencil_w[static_cast<size_t>(i) * sw + k] * f[lo + k];
        out[i] = acc;
    }
    return out;
}

ZonalRule zonal_rule(int n, int ell, int npts) {
    ZonalRule rule;
    std::vector<double> x, w;
    gauss_legendre(npts, x, w);
    rule.w.resize(npts);
    rule.z.resize(npts);
    rule.dz.resize(npts);

    const double area = sphere_area(n);
    if (n == 2) {
        // zonal harmonics on the circle: cos(ell theta); integrate theta in
        // [0, pi] and double (the integrands used here are even in theta).
        for (int k = 0; k < npts; ++k) {
            double th = 0.5 * M_PI * (x[k] + 1.0);
            rule.w[k] = 0.5 * M_PI * w[k] * 2.0;
            rule.z[k] = std::cos(ell * th);
            rule.dz[k] = -ell * std::sin(ell * th);
        }
    } else {
        const double am = sphere_area(n - 1); // |S^{n-2}|
        const double alpha = 0.5 * (n - 2);
        for (int k = 0; k < npts; ++k) {
            double th = 0.5 * M_PI * (x[k] + 1.0);
            double t = std::cos(th);
            rule.w[k] = 0.5 * M_PI * w[k] * am * std::pow(std::sin(th), n - 2);
            // Gegenbauer C_ell^alpha(t) and d/dt = 2 alpha C_{ell-1}^{alpha+1}
            auto gegen = [](int m, double a, double tt) {
                if (m == 0) return 1.0;
                double c0 = 1.0, c1 = 2.0 * a * tt;
                for (int j = 2; j <= m; ++j) {
                    double c2 = (2.0 * tt * (j + a - 1.0) * c1 - (j + 2.0 * a - 2.0) * c0) / j;
                    c0 = c1;
                    c1 = c2;
                }
                return c1;
            };
            rule.z[k] = gegen(ell, alpha, t);
            rule.dz[k] = (ell > 0) ? -std::sin(th) * 2.0 * alpha * gegen(ell - 1, alpha + 1.0, t) : 0.0;
        }
    }
    // normalize Z to unit mean square over the sphere
    double ms = 0.0;
    for (int k = 0; k < npts; ++k) ms += rule.w[k] * rule.z[k] * rule.z[k];
    ms /= area;
    double scale = 1.0 / std::sqrt(ms);
    for (int k = 0; k < npts; ++k) {
        rule.z[k] *= scale;
        rule.dz[k] *= scale;
    }
    return rule;
}

double grad_norm_lp(const RadialGrid& g, const ModeFn& phi, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("grad_norm_lp: need p > 1");
    // count nonzero modes
    std::vector<const ModeFn::Mode*> active;
    for (const auto& m : phi.modes) {
        bool nonzero = false;
        for (double v : m.profile)
            if (v != 0.0) { nonzero = true; break; }
        if (nonzero) active.push_back(&m);
    }
    if (active.empty()) return 0.0;

    if (p == 2.0) {
        double acc = 0.0;
        for (const auto* m : active) {
            auto df = differentiate(g, m->profile);
            double lam = static_cast<double>(m->ell) * (m->ell + g.n - 2);
            for (int i = 0; i < g.N; ++i) {
                double fr = m->profile[i] / g.r[i];
                acc += g.quad_w[i] * (df[i] * df[i] + lam * fr * fr);
            }
        }
        return std::sqrt(acc);
    }
    if (active.size() > 1)
        throw std::invalid_argument("grad_norm_lp: multi-mode with p != 2 is unsupported beyond the zonal case");
    const auto& m = *active[0];
    auto df = differentiate(g, m.profile);
    if (m.ell == 0) {
        double acc = 0.0;
        for (int i = 0; i < g.N; ++i) acc += g.quad_w[i] * std::pow(std::abs(df[i]), p);
        return std::pow(acc, 1.0 / p);
    }
    // single zonal mode, p != 2: polar-angle quadrature of |D phi|^p
    ZonalRule zr = zonal_rule(g.n, m.ell);
    const double area = sphere_area(g.n);
    double acc = 0.0;
    for (int i = 0; i < g.N; ++i) {
        double radial_w = g.quad_w[i] / area; // r^{n-1} dr weight
        double fi = m.profile[i], di = df[i];
        double sum_th = 0.0;
        for (size_t k = 0; k < zr.w.size(); ++k) {
            double gr = di * zr.z[k];
            double gt = fi * zr.dz[k] / g.r[i];
            sum_th += zr.w[k] * std::pow(gr * gr + gt * gt, 0.5 * p);
        }
        acc += radial_w * sum_th;
    }
    return std::pow(acc, 1.0 / p);
}

} // namespace soblab
