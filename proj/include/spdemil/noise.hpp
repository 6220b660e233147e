#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>

#include <Eigen/Dense>

#include "spdemil/rng.hpp"

namespace spdemil {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Eigenvalues eta_j of the covariance operator Q (1-based).
struct QSpectrum {
    std::function<double(std::size_t)> eta;
    /// Decay exponent with sup_{j>K} eta_j = O(K^{-rho_Q}).
    double rho_Q = 0.0;

    /// eta_1..eta_K; throws InvalidArgument if any is non-positive.
    Eigen::VectorXd eigenvalues(std::size_t K) const;
};

/// eta_j = j^{-exponent}; rho_Q = exponent.
QSpectrum power_law_spectrum(double exponent);

/// eta_j = 1 for all j (standard-scale iterated integrals; not trace class,
/// only meaningful for finite K).
QSpectrum unit_spectrum();

/// Standard Brownian increments on the finest grid, one row per step and
/// one column per noise mode. All coarser grids are derived from it.
struct FinePath {
    RowMatrix increments;  // M_fine x K_max, entries ~ N(0, T / M_fine)
    double T = 1.0;
    std::uint64_t seed = 0;

    std::size_t steps() const { return static_cast<std::size_t>(increments.rows()); }
    std::size_t modes() const { return static_cast<std::size_t>(increments.cols()); }
    double step() const { return T / static_cast<double>(steps()); }
};

/// Fill an M_fine x K_max table from `stream`, row-major.
FinePath sample_fine_path(Stream& stream, std::size_t M_fine, std::size_t K_max, double T);

/// Block sums: coarse row m is the sum of fine rows [m*r, (m+1)*r), r = M_fine / M_coarse.
RowMatrix aggregate(const RowMatrix& increments, std::size_t M_coarse);
RowMatrix aggregate(const FinePath& path, std::size_t M_coarse);

/// Coordinates sqrt(eta_j) * dbeta_j, j = 1..K, of the projected Q-Wiener increment.
Eigen::VectorXd q_increment(std::span<const double> coarse_row, const QSpectrum& spectrum,
                            std::size_t K);

/// Debug dump: four little-endian 64-bit header fields (M_fine, K_max,
/// T as IEEE-754 bits, seed) followed by the increments, row-major, as
/// little-endian IEEE-754 doubles.
void write_fine_path(std::ostream& out, const FinePath& path);
FinePath read_fine_path(std::istream& in);

}  // namespace spdemil
