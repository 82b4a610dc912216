#pragma once

#include <vector>

#include "soblab/field.hpp"
#include "soblab/grid.hpp"
#include "soblab/params.hpp"

namespace soblab {

struct ProjectionResult {
    Bubble v;                      // amplitude c, scale lambda, centered
    double epsilon = 0.0;          // ||Du - Dv||_p
    ModeFn phi;                    // nodal view of (u - v)/epsilon
    RadialField phi_field;         // exact (u - v)/epsilon, bubble parts analytic
    std::vector<double> ortho_residuals; // n+2: v, dlam, dz_1..dz_n (relative)
    double amplitude_drift = 0.0;  // |c - a|/a against the calibrated amplitude
    int newton_iters = 0;
};

// Finds v = c U[0, lambda] with u - v orthogonal to {v, d_lambda v} in
// L^2(v^{p*-2}); for radial u the translation conditions hold by symmetry and
// the center stays at 0. Newton in (c, lambda) with the analytic Jacobian.
// Throws on Newton divergence, reporting the last iterate.
ProjectionResult project(const Params& pr, const RadialField& u, const Bubble& init,
                         const RadialGrid& g);

} // namespace soblab
