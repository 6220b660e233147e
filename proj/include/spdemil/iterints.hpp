#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdemil/noise.hpp"
#include "spdemil/rng.hpp"

namespace spdemil {

enum class IterIntAlgorithm { Alg1, Alg2, Oracle };

std::string to_string(IterIntAlgorithm algorithm);
IterIntAlgorithm parse_iterint_algorithm(const std::string& text);

/// How the Gaussian tail covariance is square-rooted. Both routes produce
/// the unique symmetric root; Auto picks Eigen for K <= 8.
enum class TailFactorization { Auto, Eigen, ClosedForm };

/// One time step's approximations of the scaled iterated integrals
/// I^Q_{(i,j)} = sqrt(eta_i eta_j) int int dbeta_i dbeta_j, as a K x K matrix.
struct IterIntBatch {
    Eigen::MatrixXd values;
    double h = 0.0;
    std::size_t D = 0;
    IterIntAlgorithm algorithm = IterIntAlgorithm::Alg1;
    std::uint64_t normals_drawn = 0;
};

/// a_D = h^2 / (2 pi^2) * sum_{r > D} r^{-2}.
double tail_scale(double h, std::size_t D);

/// Number of strictly-lower-triangular pairs, K(K-1)/2.
constexpr std::size_t pair_count(std::size_t K) { return K * (K - 1) / 2; }
/// Position of pair (i, j), i > j (0-based), in the packed tail vector.
constexpr std::size_t pair_index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }

/// Conditional covariance of the packed tail (tau_ij)_{i>j} given the
/// standard increments:
/// a_D [d_ik d_jl - d_il d_jk + (d_ik b_j b_l + d_jl b_i b_k - d_il b_j b_k - d_jk b_i b_l) / h].
Eigen::MatrixXd tail_covariance(std::span<const double> delta_beta, double h, std::size_t D);

/// Symmetric square root of tail_covariance. The eigen route clamps
/// eigenvalues down to -1e-12 (relative) and throws NumericalDegeneracy below.
Eigen::MatrixXd tail_covariance_root(std::span<const double> delta_beta, double h, std::size_t D,
                                     TailFactorization factorization = TailFactorization::Auto);

/// Algorithm 1: Levy-area series truncated after D terms. Draws U_r (K
/// normals) then V_r (K normals) for r = 1..D from `series`, so a smaller D
/// consumes a prefix of a larger one.
IterIntBatch alg1_batch(std::span<const double> delta_beta, double h, std::size_t D,
                        const QSpectrum& spectrum, Stream& series);

/// Algorithm 2: Algorithm 1 plus a conditionally Gaussian tail drawn from
/// `tail` (K(K-1)/2 normals).
IterIntBatch alg2_batch(std::span<const double> delta_beta, double h, std::size_t D,
                        const QSpectrum& spectrum, Stream& series, Stream& tail,
                        TailFactorization factorization = TailFactorization::Auto);

/// Algorithm 2 with caller-supplied standard normals for the tail.
IterIntBatch alg2_batch_with_tail_normals(std::span<const double> delta_beta, double h,
                                          std::size_t D, const QSpectrum& spectrum, Stream& series,
                                          std::span<const double> tail_normals,
                                          TailFactorization factorization = TailFactorization::Auto);

/// Brute-force left-point Riemann sums over S sub-steps: entry (i,j) is
/// sqrt(eta_i eta_j) sum_{s>=2} B^i_{s-1} delta^j_s. `fine_increments` is
/// S x K with column sums equal to the step increments.
IterIntBatch oracle_batch(const RowMatrix& fine_increments, double h, const QSpectrum& spectrum);

enum class TruncationRule {
    StepBased,        // D from M and q
    EigenvalueBased,  // D from M and the truncated-spectrum bound, needs alpha
};

/// Smallest D that preserves the temporal order q:
///   Alg1: ceil(M^{2q-1});
///   Alg2: ceil(M^{q-1/2} * min(K sqrt(K-1), 1 / min_{j<=K} eta_j)).
/// The eigenvalue-based variants replace the M power by
///   Alg1: M^{-1} (sup_{j>K} eta_j)^{-2 alpha};
///   Alg2: M^{-1/2} (sup_{j>K} eta_j)^{-alpha} (times the same min factor).
/// Always >= 1.
std::size_t choose_D(IterIntAlgorithm algorithm, std::size_t M, std::size_t K, double q,
                     const QSpectrum& spectrum, TruncationRule rule = TruncationRule::StepBased,
                     double alpha = 0.0);

/// Root mean square of the Frobenius distance between paired batches.
double measure_rmse(std::span<const IterIntBatch> candidates,
                    std::span<const IterIntBatch> references);

struct RateStudyConfig {
    IterIntAlgorithm algorithm = IterIntAlgorithm::Alg1;
    double h = 0.1;
    std::size_t K = 3;
    std::vector<std::size_t> D_values{4, 16, 64, 256};
    std::size_t D_reference = 4096;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    QSpectrum spectrum = unit_spectrum();
};

struct RateStudyResult {
    std::vector<std::size_t> D_values;
    std::vector<double> rmse;
    double slope = 0.0;  // least-squares log-log slope of rmse against D
};

/// RMSE of Alg1/Alg2 at each D against a D_reference batch driven by the
/// same increments and the same series variables.
///
/// For Alg2 the candidate's Gaussian tail is coupled to the reference:
/// given the U variables of terms D < r <= D_ref, the remaining part of
/// those terms is exactly Gaussian in V, so it is whitened by its
/// conditional covariance and recoloured with the unconditional one. The
/// candidate tail keeps the exact Alg2 law while tracking the reference;
/// an independent tail would only show the D^{-1/2} spread of the series.
RateStudyResult measure_rates(const RateStudyConfig& config);

}  // namespace spdemil
