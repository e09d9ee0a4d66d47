#pragma once

#include "ctm/fusion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace testing {

/// Fraction of parameters whose analytic and central-difference derivatives agree.
inline double gradient_agreement(const ctm::AutoencoderParams& params, const Eigen::MatrixXd& x, double step, double tol) {
    Eigen::VectorXd grad;
    ctm::loss_and_gradient(params, x, grad);
    const Eigen::VectorXd base = params.flatten();
    ctm::AutoencoderParams probe = params;
    std::size_t agree = 0;
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        Eigen::VectorXd p = base;
        p(i) = base(i) + step;
        probe.assign(p);
        const double up = ctm::reconstruction_loss(probe, x);
        p(i) = base(i) - step;
        probe.assign(p);
        const double down = ctm::reconstruction_loss(probe, x);
        const double numeric = (up - down) / (2 * step);
        const double denom = std::max({std::abs(numeric), std::abs(grad(i)), 1e-7});
        if (std::abs(numeric - grad(i)) / denom < tol) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(base.size());
}

} // namespace testing
