#include "spdemil/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "spdemil/errors.hpp"

namespace spdemil {

Eigen::VectorXd EigenBasis::eigenvalues(std::size_t N) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(N));
    for (std::size_t i = 1; i <= N; ++i) {
        const double value = lambda(i);
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw InvalidArgument("eigenvalue lambda_" + std::to_string(i) +
                                  " must be positive and finite");
        }
        out[static_cast<Eigen::Index>(i - 1)] = value;
    }
    return out;
}

EigenBasis dirichlet_laplacian_basis(double diffusivity) {
    if (!(diffusivity > 0.0)) {
        throw InvalidArgument("diffusivity must be positive");
    }
    const double scale = diffusivity * std::numbers::pi * std::numbers::pi;
    return EigenBasis{[scale](std::size_t i) {
                          const double di = static_cast<double>(i);
                          return scale * di * di;
                      },
                      2.0};
}

Eigen::VectorXd semigroup_factors(const EigenBasis& basis, std::size_t N, double h) {
    if (N == 0) throw InvalidArgument("semigroup_factors: N must be >= 1");
    if (!std::isfinite(h) || h < 0.0) {
        throw InvalidArgument("semigroup_factors: step must be finite and non-negative");
    }
    return (-h * basis.eigenvalues(N)).array().exp().matrix();
}

Eigen::VectorXd resolvent_factors(const EigenBasis& basis, std::size_t N, double h) {
    if (N == 0) throw InvalidArgument("resolvent_factors: N must be >= 1");
    if (!std::isfinite(h) || !(h > 0.0)) {
        throw InvalidArgument("resolvent_factors: step must be positive");
    }
    return (1.0 + h * basis.eigenvalues(N).array()).inverse().matrix();
}

double fractional_norm(const GalerkinState& state, const EigenBasis& basis, double r) {
    if (!(r >= 0.0)) throw InvalidArgument("fractional_norm: r must be >= 0");
    if (r == 0.0) return state.coeffs.norm();
    const Eigen::ArrayXd weights = basis.eigenvalues(state.size()).array().pow(r);
    return (weights * state.coeffs.array()).matrix().norm();
}

GalerkinState project(const GalerkinState& state, std::size_t N_target) {
    GalerkinState out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N_target)), state.time};
    const auto keep = static_cast<Eigen::Index>(std::min(N_target, state.size()));
    out.coeffs.head(keep) = state.coeffs.head(keep);
    return out;
}

std::vector<double> physical_values(const GalerkinState& state, std::span<const double> x) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t p = 0; p < x.size(); ++p) {
        double sum = 0.0;
        for (std::size_t i = 0; i < state.size(); ++i) {
            sum += state.coeffs[static_cast<Eigen::Index>(i)] * std::numbers::sqrt2 *
                   std::sin(static_cast<double>(i + 1) * std::numbers::pi * x[p]);
        }
        out[p] = sum;
    }
    return out;
}

}  // namespace spdemil
