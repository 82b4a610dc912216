#include "soblab/field.hpp"

namespace soblab {

std::vector<double> RadialField::values_at_gauss(const Params& pr, const RadialGrid& g) const {
    std::vector<double> out(g.gx.size(), 0.0);
    for (const auto& t : bubbles_) {
        BubbleProfile prof(pr, t.b);
        for (size_t i = 0; i < out.size(); ++i) out[i] += t.coeff * prof.value(g.gx[i]);
    }
    for (const auto& t : nodals_) {
        auto vals = fem::interp(g, t.profile);
        for (size_t i = 0; i < out.size(); ++i) out[i] += t.coeff * vals[i];
    }
    return out;
}

std::vector<double> RadialField::derivs_at_gauss(const Params& pr, const RadialGrid& g) const {
    std::vector<double> out(g.gx.size(), 0.0);
    for (const auto& t : bubbles_) {
        BubbleProfile prof(pr, t.b);
        for (size_t i = 0; i < out.size(); ++i) out[i] += t.coeff * prof.deriv(g.gx[i]);
    }
    for (const auto& t : nodals_) {
        auto der = fem::deriv(g, t.profile);
        for (size_t i = 0; i < out.size(); ++i) out[i] += t.coeff * der[i];
    }
    return out;
}

std::vector<double> RadialField::values_at_nodes(const Params& pr, const RadialGrid& g) const {
    std::vector<double> out(g.N, 0.0);
    for (const auto& t : bubbles_) {
        BubbleProfile prof(pr, t.b);
        for (int i = 0; i < g.N; ++i) out[i] += t.coeff * prof.value(g.r[i]);
    }
    for (const auto& t : nodals_)
        for (int i = 0; i < g.N; ++i) out[i] += t.coeff * t.profile[i];
    return out;
}

std::vector<double> RadialField::derivs_at_nodes(const Params& pr, const RadialGrid& g) const {
    std::vector<double> out(g.N, 0.0);
    for (const auto& t : bubbles_) {
        BubbleProfile prof(pr, t.b);
        for (int i = 0; i < g.N; ++i) out[i] += t.coeff * prof.deriv(g.r[i]);
    }
    for (const auto& t : nodals_) {
        auto der = differentiate(g, t.profile);
        for (int i = 0; i < g.N; ++i) out[i] += t.coeff * der[i];
    }
    return out;
}

} // namespace soblab
