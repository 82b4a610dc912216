#pragma once

#include <string>
#include <vector>

#include "soblab/dualnorm.hpp"
#include "soblab/field.hpp"
#include "soblab/grid.hpp"
#include "soblab/params.hpp"
#include "soblab/spectrum.hpp"
#include "soblab/vectorial.hpp"

namespace soblab {

// Perturbation direction: "eig:k" is the k-th ell=0 eigenvector (0-based;
// k >= 2 lies beyond the tangent space), "bump:r0:sigma" a Gaussian profile.
// Both are projected off {v, d_lambda v} in L^2(v^{p*-2}) and normalized to
// ||D phi||_p = 1 in the P1 sense.
struct DirectionSpec {
    enum class Kind { Eigenvector, Bump } kind = Kind::Eigenvector;
    int index = 2;
    double r0 = 0.0, sigma = 1.0;

    static DirectionSpec parse(const std::string& text);
    std::string str() const;
};

std::vector<double> make_direction(const Params& pr, const Bubble& b, const RadialGrid& g,
                                   const DirectionSpec& spec);

// All constants entering the term-by-term chain, pinned from the empirical
// spectral gap and inequality-constant estimates.
struct ChainConstants {
    double kappa = 0.0;
    double gamma0 = 0.0;    // 0 on branch 3
    double lambda_hat = 0.0;
    double mu_gap = 0.0;
    VecIneqConstants vec;
    ScalarIneqConstants scalar;
    int branch = 0;         // 1: p <= 2n/(n+2), 2: middle, 3: p >= 2
    double window_radius = 0.0; // dual-solve truncation radius
};
ChainConstants make_chain_constants(const Params& pr, const Bubble& b, const RadialGrid& g);

struct TermTable {
    double pairing = 0.0;        // <P(u), eps phi>
    double pairing_grad = 0.0;   // eps int |Du|^{p-2} Du . D phi
    double pairing_mass = 0.0;   // eps int |u|^{p*-2} u phi
    double identity_grad = 0.0;  // int |Dv|^{p-2} Dv . D(u-v)   (== 0)
    double identity_mass = 0.0;  // int v^{p*-1} (u-v)           (== 0)
    double identity_scale = 0.0; // normalization for the identity links
    double grad_term = 0.0;      // int omega_{1|3} |D(u-v)|^2
    double sq_term = 0.0;        // (p-2) int omega_{2|4} (|Du|-|Dv|)^2
    double min_integral = 0.0;   // int min{|D(u-v)|^p, |Dv|^{p-2}|D(u-v)|^2}
    double eps_p_term = 0.0;     // int |D(u-v)|^p
    double mass_term = 0.0;      // branch mass with the (u-v) weight
    double pstar_term = 0.0;     // int |u-v|^{p*} (branches 2-3)
    double c_emp = 0.0;          // min_integral / (eps^2 ||D phi||_p^2)
    double link_grad_ineq = 0.0; // integrated gradient-inequality margin
    double link_mass_ineq = 0.0; // integrated zero-order-inequality margin
    double link_gap = 0.0;       // integrated perturbed-gap margin
    double link_duality = 0.0;   // eps ||P(u)|| ||D phi|| - pairing
};

TermTable term_breakdown(const Params& pr, const RadialField& u, const Bubble& v,
                         double epsilon, const RadialGrid& g, const ChainConstants& cc,
                         double dual_norm_value);

struct StabilityReport {
    int n = 0;
    double p = 0.0;
    double epsilon = 0.0;      // requested perturbation size
    double eps_out = 0.0;      // ||Du - Dv||_p after re-projection
    double lhs = 0.0;          // eps_out^{max(1, p-1)}
    double rhs = 0.0;          // ||P(u)||_{W^{-1,q}}
    double ratio = 0.0;
    double slope = 0.0;        // shared per sweep: d log rhs / d log eps
    double amplitude_drift = 0.0;
    double ortho_max = 0.0;
    bool flagged_exact = false; // below the 1e-8 epsilon floor
    std::string error;          // per-row failure diagnostics, empty if ok
    TermTable terms;
};

std::vector<StabilityReport> stability_sweep(const Params& pr, const Bubble& b,
                                             const RadialGrid& g,
                                             const std::vector<double>& direction,
                                             const std::vector<double>& epsilons,
                                             const ChainConstants* cc = nullptr);

} // namespace soblab
