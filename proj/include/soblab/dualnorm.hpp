#pragma once

#include <limits>
#include <vector>

#include "soblab/field.hpp"
#include "soblab/grid.hpp"
#include "soblab/params.hpp"

namespace soblab {

// Euler-Lagrange residual P(u) of a radial field, carried in two forms:
// Gauss-point data for the functional pairing
//   <P(u), w> = int |Du|^{p-2} Du . Dw - int |u|^{p*-2} u w
// and the pointwise radial expression at the nodes.
struct Residual {
    std::vector<double> lin_grad;  // |u'|^{p-2} u' at Gauss points
    std::vector<double> lin_val;   // -|u|^{p*-2} u at Gauss points
    std::vector<double> pointwise; // -(r^{1-n}(r^{n-1}|u'|^{p-2}u')' ) - u^{p*-1} at nodes
};

Residual residual(const Params& pr, const RadialField& u, const RadialGrid& g);
// Rejects non-radial input (documented restriction).
Residual residual(const Params& pr, const ModeFn& u, const RadialGrid& g);

// <f, w> for a nodal P1 test profile.
double residual_pairing(const RadialGrid& g, const Residual& f,
                        const std::vector<double>& w_nodal);

struct DualSolveResult {
    std::vector<double> w;       // nodal minimizer of (1/p) int |Dw|^p - <f, w>
    double grad_norm_p = 0.0;    // ||Dw||_p
    double pairing = 0.0;        // <f, w>
    double dual_norm = 0.0;      // ||Dw||_p^{p-1}
    double mu_extrapolation_err = 0.0; // relative change over the last two mu stages
    std::vector<double> mu_schedule;
    int newton_iters = 0;
};

struct DualOpts {
    double rmax = std::numeric_limits<double>::infinity(); // Dirichlet past this radius
    double tol = 1e-13;   // Newton decrement tolerance, relative to |J|
    int max_iters = 120;  // per mu stage
};

// Convex dual problem for the W^{-1,q} norm: minimize
// J(w) = (1/p) int |Dw|^p - <f, w> over P1 profiles vanishing at the far end.
// The degenerate Hessian is handled by |Dw|^2 -> |Dw|^2 + mu^2 with mu scaled
// to the solution (mu_rel in 1e-1 .. 1e-8 times the estimated |Dw| scale) and
// the zero-regularization value reported by extrapolation across the last
// stages. Throws on line-search failure with the J history in the message.
DualSolveResult dual_solve(const Params& pr, const Residual& f, const RadialGrid& g,
                           const DualOpts& opts = {});

double dual_norm(const Params& pr, const Residual& f, const RadialGrid& g,
                 const DualOpts& opts = {});

// One-sided oracle: max over a dictionary of nodal profiles of <f,phi>/||Dphi||_p.
double dictionary_lower_bound(const Params& pr, const Residual& f, const RadialGrid& g,
                              const std::vector<std::vector<double>>& dictionary);

} // namespace soblab
