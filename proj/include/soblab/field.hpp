#pragma once

#include <vector>

#include "soblab/bubble.hpp"
#include "soblab/fem.hpp"
#include "soblab/grid.hpp"

namespace soblab {

// Radial function represented as a sum of analytic bubble profiles and P1
// nodal profiles. Keeping bubble parts analytic matters: interpolating them
// onto the mesh costs O(h^2), which would swamp the small quantities the
// stability pipeline extracts (orthogonality residuals, epsilon floors).
class RadialField {
  public:
    RadialField() = default;

    void add_bubble(const Bubble& b, double coeff) { bubbles_.push_back({b, coeff}); }
    void add_nodal(std::vector<double> profile, double coeff) {
        nodals_.push_back({std::move(profile), coeff});
    }
    void scale(double s) {
        for (auto& t : bubbles_) t.coeff *= s;
        for (auto& t : nodals_) t.coeff *= s;
    }
    bool empty() const { return bubbles_.empty() && nodals_.empty(); }

    std::vector<double> values_at_gauss(const Params& pr, const RadialGrid& g) const;
    std::vector<double> derivs_at_gauss(const Params& pr, const RadialGrid& g) const;
    std::vector<double> values_at_nodes(const Params& pr, const RadialGrid& g) const;
    // nodal derivative via analytic bubble parts + FD of the nodal parts
    std::vector<double> derivs_at_nodes(const Params& pr, const RadialGrid& g) const;

    double grad_norm(const Params& pr, const RadialGrid& g, double p) const {
        return fem::grad_norm(g, derivs_at_gauss(pr, g), p);
    }

  private:
    struct BubbleTerm {
        Bubble b;
        double coeff;
    };
    struct NodalTerm {
        std::vector<double> profile;
        double coeff;
    };
    std::vector<BubbleTerm> bubbles_;
    std::vector<NodalTerm> nodals_;
};

} // namespace soblab
