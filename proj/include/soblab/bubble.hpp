#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "soblab/grid.hpp"
#include "soblab/params.hpp"

namespace soblab {

// A point on the extremal manifold: amplitude * U[center, scale].
struct Bubble {
    double amplitude = 1.0;
    double scale = 1.0;               // the paper's lambda
    std::vector<double> center;       // z in R^n; empty means the origin

    bool centered() const {
        for (double zi : center)
            if (zi != 0.0) return false;
        return true;
    }
};

// Radial profile of amplitude * U[0, lambda] with all the analytic
// derivatives the lab needs. With rho = lambda r, Q = 1 + rho^{q},
//   U(rho) = Q^{-eta},  eta = (n-p)/p,  beta = (n-p)/(p-1),
//   U'  = -beta rho^{q-1} Q^{-eta-1},
//   U'' = -beta rho^{q-2} Q^{-eta-2} [(q-1) Q - (eta+1) q rho^{q}].
class BubbleProfile {
  public:
    BubbleProfile(const Params& pr, const Bubble& b);

    double value(double r) const;
    double deriv(double r) const;        // dv/dr, <= 0
    double second(double r) const;       // d2v/dr2 (unbounded at 0 for p > 2)
    double dlam(double r) const;         // d/dlambda of amplitude*U[0,lambda]
    double dlam_deriv(double r) const;   // d/dr of dlam
    double d2lam(double r) const;        // d2/dlambda2
    double p_flux(double r) const;       // |v'|^{p-2} v'
    double p_lap(double r) const;        // -div(|Dv|^{p-2} Dv), two-term analytic form
    double map_ratio(double r) const;    // Q = 1 + rho^q, conditioning measure

    double amplitude() const { return A_; }
    double lambda() const { return lam_; }

  private:
    int n_;
    double p_, q_, pstar_, eta_, beta_, A_, lam_;
};

double bubble_eval(const Params& pr, const Bubble& b, const std::vector<double>& x);

// Amplitude a for which a*U[z,lambda] solves the Euler-Lagrange equation,
// read off the grid as the ratio (-Delta_p U) / U^{p*-1}; independent of
// lambda and z. Throws if the ratio fails to be constant across the grid.
double normalization_constant(const Params& pr, const RadialGrid* grid = nullptr);

// Optimal Sobolev constant from the calibrated bubble; fills pr.S.
double sobolev_constant(Params& pr, const RadialGrid* grid = nullptr);

// Convenience: params with S computed, plus the calibrated amplitude.
struct Calibration {
    Params params;
    double amplitude = 0.0;     // a
    double ratio_constant = 0.0; // c with -Delta_p U = c U^{p*-1}
};
Calibration calibrate(int n, double p, const RadialGrid* grid = nullptr);

// T_v M sampled on the grid: v and d_lambda v are mode-0 profiles, each
// d_{z_i} v is the mode-1 profile -v' (one entry per coordinate).
struct TangentBasis {
    struct Entry {
        std::string label;  // "v", "dlam", "dz1", ...
        int ell = 0;
        std::vector<double> profile;
    };
    std::vector<Entry> entries; // n + 2 of them
};
TangentBasis tangent_basis(const Params& pr, const Bubble& b, const RadialGrid& g);

// Pointwise Euler-Lagrange residual of a bubble, in relative form
// (-Delta_p v - v^{p*-1}) / v^{p*-1}. The sup is reported over the interior,
// the nodes with Q = 1 + (lambda r)^q <= qmax: past that the two terms of
// the divergence cancel below double precision and the relative residual is
// pure rounding noise.
struct ElResidual {
    std::vector<double> rel;
    std::vector<std::uint8_t> interior;
    double interior_sup = 0.0;
    double qmax = 1e6;
};
ElResidual el_residual(const Params& pr, const Bubble& b, const RadialGrid& g,
                       double qmax = 1e6);

} // namespace soblab
