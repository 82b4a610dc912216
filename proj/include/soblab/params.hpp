#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace soblab {

// Problem constants for the critical p-Laplace equation on R^n and the
// exponents derived from (n, p). The optimal Sobolev constant S is filled
// in by sobolev_constant() after bubble calibration; it starts at 0.
struct Params {
    int n = 0;          // dimension, n >= 2
    double p = 0.0;     // 1 < p < n
    double q = 0.0;     // dual exponent p/(p-1)
    double pstar = 0.0; // critical exponent n p/(n-p)
    double S = 0.0;     // optimal Sobolev constant, > 0 once computed

    bool has_sobolev_constant() const { return S > 0.0; }
};

inline Params make_params(int n, double p) {
    if (n < 2) throw std::invalid_argument("make_params: need n >= 2");
    if (!(p > 1.0) || !(p < static_cast<double>(n)))
        throw std::invalid_argument("make_params: need 1 < p < n, got p=" + std::to_string(p));
    Params pr;
    pr.n = n;
    pr.p = p;
    pr.q = p / (p - 1.0);
    pr.pstar = n * p / (n - p);
    pr.S = 0.0;
    return pr;
}

// |S^{m}| = 2 pi^{(m+1)/2} / Gamma((m+1)/2); sphere_area(n) is |S^{n-1}|.
inline double sphere_area(int n) {
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

} // namespace soblab
