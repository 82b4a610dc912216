#pragma once

#include <optional>
#include <vector>

#include "soblab/params.hpp"

namespace soblab {

// Radial discretization of R^n. Nodes come from Gauss-Legendre points s_i in
// (0,1) pushed through the algebraic map r = L s/(1-s), so r_1 > 0 strictly
// and the far field is reached polynomially (bubbles decay polynomially).
//
// Two quadrature views coexist:
//   * spectral: node values + Gauss-Legendre weights (quad_w), used for
//     integrals of smooth radial integrands sampled at the nodes;
//   * element: the nodes as a P1 mesh with an 8-point Gauss rule per element,
//     used by the variational machinery (eigenproblems, dual solves) where
//     profiles are genuinely piecewise linear.
struct RadialGrid {
    int n = 0;
    int N = 0;
    double L = 1.0;

    std::vector<double> s;       // GL nodes in (0,1), increasing
    std::vector<double> r;       // mapped radii
    std::vector<double> quad_w;  // spectral weights incl |S^{n-1}| r^{n-1}
    std::vector<double> quad_wr; // spectral weights for plain dr integrals

    // FD differentiation in the mapped coordinate; one-sided at the ends.
    int stencil_hw = 4;
    std::vector<int> stencil_lo;    // N entries
    std::vector<double> stencil_w;  // N * (2 hw + 1), already d/dr

    // element view
    int gk = 8;                   // Gauss points per element
    std::vector<double> h;        // N-1 element widths
    std::vector<double> gx;       // (N-1)*gk Gauss radii
    std::vector<double> gw;       // Gauss weights incl |S^{n-1}| r^{n-1}
    std::vector<double> shl, shr; // P1 hat values at Gauss points
    std::vector<double> elem_meas; // per-element sum of gw

    double gauss_x(int e, int k) const { return gx[e * gk + k]; }
    double gauss_w(int e, int k) const { return gw[e * gk + k]; }
};

struct TailReport {
    bool tail_dominated = false; // last 5% of nodes contribute > 1e-6 of total
    double tail_fraction = 0.0;
};

RadialGrid make_grid(int n, int N, double L = 1.0);

// Spectral quadrature of nodal values: sum quad_w[i] * f[i].
double integrate(const RadialGrid& g, const std::vector<double>& f,
                 TailReport* tail = nullptr);

// High-order FD derivative of a nodal profile, returned at the nodes.
std::vector<double> differentiate(const RadialGrid& g, const std::vector<double>& f);

// A function on R^n as a sum of fixed-degree spherical-harmonic modes,
// phi(x) = sum_ell f_ell(r) Z_ell(theta), with Z_ell normalized to unit mean
// square over the sphere (Z_0 == 1, so a pure mode-0 ModeFn is the radial
// profile itself).
struct ModeFn {
    struct Mode {
        int ell = 0;
        std::vector<double> profile;
    };
    std::vector<Mode> modes;

    static ModeFn radial(std::vector<double> profile) {
        ModeFn f;
        f.modes.push_back({0, std::move(profile)});
        return f;
    }
    const std::vector<double>* mode(int ell) const {
        for (const auto& m : modes)
            if (m.ell == ell) return &m.profile;
        return nullptr;
    }
};

// Polar-angle quadrature bundle for zonal integrands: values of the
// normalized zonal harmonic and its theta-derivative at the angular nodes,
// with weights summing to |S^{n-1}|.
struct ZonalRule {
    std::vector<double> w;      // angular weights, sum = |S^{n-1}|
    std::vector<double> z;      // Z_ell at the nodes
    std::vector<double> dz;     // dZ_ell/dtheta at the nodes
};
ZonalRule zonal_rule(int n, int ell, int npts = 64);

// || D phi ||_{L^p}. Exact reductions: single mode ell=0 for any p; any mode
// set at p=2. A single mode ell>=1 with p != 2 goes through the zonal rule.
// Multiple modes with p != 2 are rejected.
double grad_norm_lp(const RadialGrid& g, const ModeFn& phi, double p);

} // namespace soblab
