#include "soblab/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace soblab::fem {

std::vector<double> interp(const RadialGrid& g, const std::vector<double>& nodal) {
    if (static_cast<int>(nodal.size()) != g.N)
        throw std::invalid_argument("fem::interp: profile size mismatch");
    std::vector<double> out(g.gx.size());
    for (int e = 0; e < g.N - 1; ++e)
        for (int k = 0; k < g.gk; ++k) {
            size_t idx = static_cast<size_t>(e) * g.gk + k;
            out[idx] = nodal[e] * g.shl[idx] + nodal[e + 1] * g.shr[idx];
        }
    return out;
}

std::vector<double> deriv(const RadialGrid& g, const std::vector<double>& nodal) {
    if (static_cast<int>(nodal.size()) != g.N)
        throw std::invalid_argument("fem::deriv: profile size mismatch");
    std::vector<double> out(g.gx.size());
    for (int e = 0; e < g.N - 1; ++e) {
        double slope = (nodal[e + 1] - nodal[e]) / g.h[e];
        for (int k = 0; k < g.gk; ++k) out[static_cast<size_t>(e) * g.gk + k] = slope;
    }
    return out;
}

std::vector<double> bubble_values(const RadialGrid& g, const BubbleProfile& b) {
    std::vector<double> out(g.gx.size());
    for (size_t i = 0; i < g.gx.size(); ++i) out[i] = b.value(g.gx[i]);
    return out;
}

std::vector<double> bubble_derivs(const RadialGrid& g, const BubbleProfile& b) {
    std::vector<double> out(g.gx.size());
    for (size_t i = 0; i < g.gx.size(); ++i) out[i] = b.deriv(g.gx[i]);
    return out;
}

double integrate(const RadialGrid& g, const std::vector<double>& gvals) {
    if (gvals.size() != g.gw.size())
        throw std::invalid_argument("fem::integrate: gauss value size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < gvals.size(); ++i) acc += g.gw[i] * gvals[i];
    return acc;
}

double grad_norm(const RadialGrid& g, const std::vector<double>& dgvals, double p) {
    double acc = 0.0;
    for (size_t i = 0; i < dgvals.size(); ++i)
        acc += g.gw[i] * std::pow(std::abs(dgvals[i]), p);
    return std::pow(acc, 1.0 / p);
}

double weighted_ip(const RadialGrid& g, const std::vector<double>& weight,
                   const std::vector<double>& f, const std::vector<double>& h) {
    double acc = 0.0;
    for (size_t i = 0; i < f.size(); ++i) acc += g.gw[i] * weight[i] * f[i] * h[i];
    return acc;
}

} // namespace soblab::fem
