#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spdemil {

/// Eigen-decomposition of the diagonal generator: -A e_i = lambda_i e_i.
///
/// Basis vectors are never materialized; every state lives in coefficient
/// space. Indices are 1-based to match the usual e_1, e_2, ... labelling.
struct EigenBasis {
    std::function<double(std::size_t)> lambda;
    /// Growth exponent with (inf_{i>N} lambda_i)^{-1} = O(N^{-rho_A}).
    double rho_A = 0.0;

    /// lambda_1..lambda_N. Throws InvalidArgument on a non-positive or
    /// non-finite eigenvalue.
    Eigen::VectorXd eigenvalues(std::size_t N) const;
};

/// lambda_i = diffusivity * pi^2 * i^2, the Dirichlet Laplacian on (0,1)
/// scaled by `diffusivity`; rho_A = 2.
EigenBasis dirichlet_laplacian_basis(double diffusivity);

/// Coefficient vector <Y, e_i>_H, i = 1..N, at a grid time.
struct GalerkinState {
    Eigen::VectorXd coeffs;
    double time = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(coeffs.size()); }
};

/// exp(-lambda_i h) for i = 1..N; componentwise action of P_N e^{Ah}.
Eigen::VectorXd semigroup_factors(const EigenBasis& basis, std::size_t N, double h);

/// (1 + lambda_i h)^{-1} for i = 1..N; componentwise action of (I - hA)^{-1}.
Eigen::VectorXd resolvent_factors(const EigenBasis& basis, std::size_t N, double h);

/// ||(-A)^r Y||_H = (sum_i lambda_i^{2r} c_i^2)^{1/2}.
double fractional_norm(const GalerkinState& state, const EigenBasis& basis, double r);

/// Truncate or zero-pad to N_target coefficients.
GalerkinState project(const GalerkinState& state, std::size_t N_target);

/// Diagnostic export: sum_i c_i sqrt(2) sin(i pi x) at each x.
std::vector<double> physical_values(const GalerkinState& state, std::span<const double> x);

}  // namespace spdemil
