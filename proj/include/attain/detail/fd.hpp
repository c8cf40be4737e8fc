#pragma once

// Central-difference derivatives with a per-component relative step. One step
// policy shared by cost gradients and constraint Jacobians so the two stay
// consistent.

#include <cmath>
#include <functional>
#include <vector>

namespace attain::detail {

inline double fd_step(double x, double scale) { return scale * (1.0 + std::abs(x)); }

/// Central difference of a scalar function of a vector.
template <typename F>
std::vector<double> fd_gradient(F&& f, const std::vector<double>& x, double scale) {
    std::vector<double> g(x.size());
    std::vector<double> probe = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double h = fd_step(x[j], scale);
        probe[j] = x[j] + h;
        const double fp = f(probe);
        probe[j] = x[j] - h;
        const double fm = f(probe);
        probe[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Central difference of a vector function; returns rows[i][j] = dc_i/dx_j.
template <typename F>
std::vector<std::vector<double>> fd_jacobian(F&& f, const std::vector<double>& x, double scale,
                                             std::size_t out_dim) {
    std::vector<std::vector<double>> jac(out_dim, std::vector<double>(x.size(), 0.0));
    std::vector<double> probe = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double h = fd_step(x[j], scale);
        probe[j] = x[j] + h;
        const std::vector<double> fp = f(probe);
        probe[j] = x[j] - h;
        const std::vector<double> fm = f(probe);
        probe[j] = x[j];
        for (std::size_t i = 0; i < out_dim; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
    }
    return jac;
}

}  // namespace attain::detail
