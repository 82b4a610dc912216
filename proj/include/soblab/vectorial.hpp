#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace soblab {

// Constants for the weighted gradient inequalities. c1 applies for 1 < p < 2,
// c2 and c3 for p >= 2; kappa is the slack in the quadratic terms.
struct VecIneqConstants {
    double p = 0.0;
    double kappa = 0.0;
    double c1 = 0.0;          // p < 2 branch
    double c2 = 0.0;          // p >= 2 branch
    double c3 = 0.0;          // in (0, 1/2], defines the omega_3 branch split
};

// Constants for the scalar (zero-order) inequalities; C1 >= 1/pstar always.
struct ScalarIneqConstants {
    double pstar = 0.0;
    double kappa = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
};

// Branch-selected weights, scalar level: ax = |x|, axy = |x+y|.
// j in {1,2} requires 1 < p < 2; j in {3,4} requires p >= 2 (uses c3).
double omega_scalar(int j, double p, double ax, double axy, double c3 = 0.5);
double omega(int j, double p, const std::vector<double>& x,
             const std::vector<double>& y, double c3 = 0.5);

// LHS - RHS of the branch gradient inequality; >= 0 when the constants are
// admissible. Scalar-level variant takes (|x|, |y|, x.y).
double gradient_ineq_margin_scalar(double p, const VecIneqConstants& c,
                                   double ax, double ay, double xdoty);
double gradient_ineq_margin(double p, const VecIneqConstants& c,
                            const std::vector<double>& x, const std::vector<double>& y);

// Largest constants (times a 0.9 safety factor) for which the margin stays
// nonnegative on a (t, cos theta) sample of the 2-DOF reduction |x| = 1,
// |y| = t <= t_max. For p >= 2, c3 first by bisection on the branch
// condition F(t, a) >= 0 for t in (0, a^{1/(p-1)}].
VecIneqConstants estimate_vec_constants(double p, double kappa,
                                        double t_max = 1e3, int grid_density = 1200);

// F(t, a) from the c3 construction, exposed for tests.
double c3_condition_fn(double p, double t, double a);
double find_c3(double p);

// RHS - LHS of the scalar inequality; branch chosen by pstar <= 2.
double scalar_ineq_margin(double pstar, const ScalarIneqConstants& c, double a, double b);

ScalarIneqConstants estimate_scalar_constants(double pstar, double kappa);

// Deterministic fuzzing. Sampling is chunked with per-chunk seeds so results
// do not depend on the worker count.
struct VecFuzzResult {
    double min_margin = 0.0;
    std::array<double, 3> argmin_x{}, argmin_y{};
    double min_margin_over_minterm = 0.0; // over samples with minterm > 1e-12
    double omega3_min_rel = 0.0;          // min (omega3 - c3 |x|^{p-2}) / |x|^{p-2}, p >= 2
    VecIneqConstants constants;
    std::uint64_t samples = 0;
};
VecFuzzResult fuzz_gradient_ineq(double p, const VecIneqConstants& c,
                                 std::uint64_t samples, std::uint64_t seed, int dim = 3);

struct ScalarFuzzResult {
    double min_margin = 0.0;
    double argmin_a = 0.0, argmin_b = 0.0;
    ScalarIneqConstants constants;
    std::uint64_t samples = 0;
};
ScalarFuzzResult fuzz_scalar_ineq(double pstar, const ScalarIneqConstants& c,
                                  std::uint64_t samples, std::uint64_t seed);

} // namespace soblab
