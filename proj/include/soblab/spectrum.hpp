#pragma once

#include <vector>

#include "soblab/bubble.hpp"
#include "soblab/grid.hpp"
#include "soblab/params.hpp"

namespace soblab {

// Per-mode discretization of the linearized operator around a bubble, as a
// symmetric tridiagonal pencil (A, B) on P1 profiles:
//   f^T A f = |S^{n-1}| int [ (p-1)|v'|^{p-2} f'^2
//                             + ell(ell+n-2) |v'|^{p-2} f^2/r^2 ] r^{n-1} dr
//   f^T B f = |S^{n-1}| int v^{p*-2} f^2 r^{n-1} dr.
//
// The dof window handles the degenerate weights: nodes [0 .. flat_end] are
// tied to a single dof where |v'|^{p-2} blows up at the origin (p < 2; the
// low eigenfunctions are constant there to ~1e-8), and nodes from
// dirichlet_begin on are clamped to zero where the local stiffness/mass
// quotient exceeds the window threshold (those regions cannot host low
// modes, and keeping them poisons the conditioning).
struct ModeOperator {
    int ell = 0;
    int N = 0;              // nodes of the underlying grid
    int flat_end = 0;       // nodes 0..flat_end share dof 0
    int dirichlet_begin = 0;// nodes >= this are zero
    std::vector<double> A_diag, A_off;
    std::vector<double> B_diag, B_off;

    int dofs() const { return static_cast<int>(A_diag.size()); }
    // scatter reduced dof vector to a full nodal profile
    std::vector<double> scatter(const std::vector<double>& x) const;
    // gather a nodal profile to dofs (value at flat_end represents the block)
    std::vector<double> gather(const std::vector<double>& f) const;
    double quad_form_A(const std::vector<double>& x) const;
    double quad_form_B(const std::vector<double>& x) const;
};

ModeOperator assemble_mode_operator(const Params& pr, const Bubble& b,
                                    const RadialGrid& g, int ell,
                                    double window_threshold = 1e8);

// Function-level quadratic form of the linearized operator on Gauss-point
// data (exact up to quadrature; no P1 interpolation of f).
double linearized_form(const Params& pr, const Bubble& b, const RadialGrid& g, int ell,
                       const std::vector<double>& f_gauss,
                       const std::vector<double>& df_gauss);

struct SpectrumResult {
    int ell = 0;
    std::vector<double> eigenvalues;                // ascending
    std::vector<std::vector<double>> eigenvectors;  // nodal profiles, B-orthonormal
    std::vector<double> rayleigh;                   // recomputed quotients
    double gap_lambda = 0.0; // (mu_next - (p*-1)) S^p / 2 for this mode
    int iterations = 0;
};

// k smallest generalized eigenvalues by shift-invert Lanczos on the
// Jacobi-scaled pencil with full reorthogonalization.
SpectrumResult solve_eigs(const ModeOperator& op, int k);

struct GapInfo {
    double mu_gap = 0.0;     // min over {mu_3 at ell=0, mu_2 at ell=1, mu_1 at ell>=2}
    double lambda_hat = 0.0; // S^p/2 (mu_gap - (p*-1))
    std::vector<double> mu0, mu1; // lowest eigenvalues at ell = 0, 1 (diagnostics)
    std::vector<double> mu_higher; // mu_1 for ell = 2..ell_max
};

// Needs pr.S (run sobolev_constant first). Throws if the gap is nonpositive.
GapInfo spectral_gap(const Params& pr, const Bubble& b, const RadialGrid& g,
                     int ell_max = 2);

struct GapCheckReport {
    double lhs = 0.0;      // omega terms (+ gamma0 min term on branches 1-2)
    double rhs = 0.0;      // (p*-1+lambda S^{-p}) mass term
    double margin = 0.0;   // lhs - rhs
    double grad_norm_p = 0.0;
    double ortho_residual = 0.0;
    int branch = 0;
};

// Perturbed spectral-gap inequality for a radial phi orthogonal to T_v M.
// branch: 1 for p <= 2n/(n+2), 2 for 2n/(n+2) < p < 2, 3 for p >= 2.
GapCheckReport perturbed_gap_check(const Params& pr, const Bubble& b, const RadialGrid& g,
                                   const ModeFn& phi, double gamma0, double C1, int branch,
                                   const GapInfo* gap = nullptr,
                                   double delta_bar = 1e-2);

} // namespace soblab
