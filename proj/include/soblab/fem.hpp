#pragma once

#include <vector>

#include "soblab/bubble.hpp"
#include "soblab/grid.hpp"

namespace soblab::fem {

// Values of the P1 interpolant of a nodal profile at all Gauss points.
std::vector<double> interp(const RadialGrid& g, const std::vector<double>& nodal);

// Element slopes of a nodal profile, replicated at the Gauss points.
std::vector<double> deriv(const RadialGrid& g, const std::vector<double>& nodal);

// Bubble profile (and its radial derivative) at all Gauss points.
std::vector<double> bubble_values(const RadialGrid& g, const BubbleProfile& b);
std::vector<double> bubble_derivs(const RadialGrid& g, const BubbleProfile& b);

// sum gw * vals over all Gauss points.
double integrate(const RadialGrid& g, const std::vector<double>& gvals);

// (sum gw |dvals|^p)^{1/p} for Gauss-point values of a radial gradient.
double grad_norm(const RadialGrid& g, const std::vector<double>& dgvals, double p);

// int v^{pstar-2} f g dx for Gauss-point values.
double weighted_ip(const RadialGrid& g, const std::vector<double>& weight,
                   const std::vector<double>& f, const std::vector<double>& h);

} // namespace soblab::fem
