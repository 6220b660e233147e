#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdemil/iterints.hpp"
#include "spdemil/noise.hpp"
#include "spdemil/spectral.hpp"

namespace spdemil {

/// Regularity exponents of the drift, diffusion and noise assumptions.
struct RegularityParams {
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double alpha = 0.0;
    double vartheta = 0.0;

    /// min(2(gamma - beta), gamma)
    double q_mil() const;
    /// min(1/2, 2(gamma - beta), gamma)
    double q_ees() const;

    /// Range violations, one message per broken bound; empty when admissible.
    std::vector<std::string> violations() const;
};

/// P_N F restricted to H_N, in coefficient space.
using DriftRule = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// F(y) = f + slope * y where f_i = constant(i).
DriftRule affine_drift(std::function<double(std::size_t)> constant, double slope);

/// <1, e_i> for e_i = sqrt(2) sin(i pi x): 2 sqrt(2) / (i pi) for odd i, 0 otherwise.
double constant_one_coefficient(std::size_t i);

/// Diffusion B(y) u = sum_{i,j} mu_ij(y) <u, e~_j> e_i together with the
/// derivatives phi^k_ij(y) = d mu_ij(y) / d y_k. Indices are 1-based; the
/// state y is the coefficient vector of length N, so y_k is y[k - 1].
class DiffusionFamily {
public:
    virtual ~DiffusionFamily() = default;

    virtual std::string name() const = 0;
    virtual double mu(std::size_t i, std::size_t j, const Eigen::VectorXd& y) const = 0;
    virtual double phi(std::size_t i, std::size_t j, std::size_t k, const Eigen::VectorXd& y) const = 0;

    /// N x K matrix (mu_ij(y)), N = y.size().
    virtual Eigen::MatrixXd diffusion_matrix(const Eigen::VectorXd& y, std::size_t K) const;

    /// out_i = sum_{j <= K} sum_{k <= N} phi^k_ij(y) G_kj for an N x K matrix G.
    virtual Eigen::VectorXd derivative_contract(const Eigen::VectorXd& y, const Eigen::MatrixXd& G) const;
};

/// mu_ij(y) = y_j / (i^p + j^p), phi^k_ij = delta_jk / (i^p + j^p).
class DenominatorFamily final : public DiffusionFamily {
public:
    explicit DenominatorFamily(double p = 4.0);

    std::string name() const override { return "example"; }
    double exponent() const { return p_; }
    double mu(std::size_t i, std::size_t j, const Eigen::VectorXd& y) const override;
    double phi(std::size_t i, std::size_t j, std::size_t k, const Eigen::VectorXd& y) const override;
    Eigen::MatrixXd diffusion_matrix(const Eigen::VectorXd& y, std::size_t K) const override;
    Eigen::VectorXd derivative_contract(const Eigen::VectorXd& y, const Eigen::MatrixXd& G) const override;

private:
    double denom(std::size_t i, std::size_t j) const;
    double power(std::size_t i) const;
    double p_;
    std::vector<double> powers_;  // i^p for small i
};

/// mu_ij(y) = nu_i y_i for every j. Commutative.
class DiagonalFamily final : public DiffusionFamily {
public:
    explicit DiagonalFamily(std::function<double(std::size_t)> nu);

    std::string name() const override { return "diagonal"; }
    double mu(std::size_t i, std::size_t j, const Eigen::VectorXd& y) const override;
    double phi(std::size_t i, std::size_t j, std::size_t k, const Eigen::VectorXd& y) const override;

private:
    std::function<double(std::size_t)> nu_;
};

/// mu_ij(y) = value(i, j) independent of y; phi = 0.
class ConstantFamily final : public DiffusionFamily {
public:
    explicit ConstantFamily(std::function<double(std::size_t, std::size_t)> value);

    std::string name() const override { return "constant"; }
    double mu(std::size_t i, std::size_t j, const Eigen::VectorXd& y) const override;
    double phi(std::size_t, std::size_t, std::size_t, const Eigen::VectorXd&) const override { return 0.0; }

private:
    std::function<double(std::size_t, std::size_t)> value_;
};

/// mu_ij(y) = sin(omega y_j) / (i^p + j^p). Nonlinear variant of the
/// example family, used where the derivative check needs curvature.
class SineFamily final : public DiffusionFamily {
public:
    SineFamily(double omega, double p = 4.0);

    std::string name() const override { return "sine"; }
    double mu(std::size_t i, std::size_t j, const Eigen::VectorXd& y) const override;
    double phi(std::size_t i, std::size_t j, std::size_t k, const Eigen::VectorXd& y) const override;

private:
    double omega_;
    double p_;
};

struct SpdeProblem {
    EigenBasis basis;
    QSpectrum spectrum;
    double T = 1.0;
    DriftRule drift;
    std::shared_ptr<const DiffusionFamily> diffusion;
    RegularityParams params;
    /// Initial coefficients for a given N.
    std::function<Eigen::VectorXd(std::size_t)> initial;
};

/// A = Laplacian / 100 on (0,1) with Dirichlet conditions, eta_j = j^{-3},
/// F(y) = 1 - y, xi = 0, mu_ij(y) = y_j / (i^p + j^p), T = 1.
/// Regularity: beta = 0, gamma = 1 - eps, delta = (1 - eps) / 2,
/// alpha = 7/3 - eps, vartheta = 0.4.
SpdeProblem example_problem(double epsilon = 1e-6, double p = 4.0);

/// N x K matrix with entry (i, j) = mu_ij(state).
Eigen::MatrixXd apply_B(const SpdeProblem& problem, const Eigen::VectorXd& state, std::size_t K);

/// sum_{i,j<=K} B'(y)(P_N B(y) e~_i, e~_j) I_(i,j); coefficient on e_i is
/// sum_{j,r<=K} sum_{k<=N} phi^k_ij(y) mu_kr(y) I_(r,j).
Eigen::VectorXd milstein_correction(const SpdeProblem& problem, const Eigen::VectorXd& state,
                                    const Eigen::MatrixXd& iter_values);

/// Same, reusing a precomputed diffusion matrix (N x K).
Eigen::VectorXd milstein_correction(const SpdeProblem& problem, const Eigen::VectorXd& state,
                                    const Eigen::MatrixXd& diffusion, const Eigen::MatrixXd& iter_values);

struct CommutativityWitness {
    std::size_t i = 0, m = 0, n = 0;  // 1-based
    Eigen::VectorXd state;
    double lhs = 0.0;  // sum_k phi^k_im mu_kn
    double rhs = 0.0;  // sum_k phi^k_in mu_km
};

struct CommutativityResult {
    bool commutative = true;  // "no violation found"
    std::optional<CommutativityWitness> witness;
};

/// Falsifier for sum_k phi^k_im mu_kn = sum_k phi^k_in mu_km over
/// i <= N, m < n <= K on each trial state, tolerance 1e-10.
CommutativityResult check_commutativity(const SpdeProblem& problem, std::size_t N, std::size_t K,
                                        const std::vector<Eigen::VectorXd>& trial_states);

struct AssumptionCheck {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // positive when satisfied
};

struct AssumptionReport {
    bool checkable = false;
    std::vector<AssumptionCheck> checks;

    bool all_pass() const;
};

/// Range checks of the regularity parameters plus the example family's
/// admissible bounds delta < p/4 - 1/2,
/// alpha < (rho_Q + 2p + 4 gamma - 1) / (2 rho_Q) (7/3 for p = 4, rho_Q = 3,
/// gamma = 1), vartheta > 1/4 and gamma in [1/2, 1). Families other than the
/// denominator family come back with checkable = false.
AssumptionReport check_assumptions(const SpdeProblem& problem);

/// max_{i,k<=N, j<=K} |phi^k_ij(y) - (mu_ij(y + eps e_k) - mu_ij(y - eps e_k)) / (2 eps)|.
double frechet_residual(const DiffusionFamily& family, const Eigen::VectorXd& state, std::size_t K,
                        double eps);

}  // namespace spdemil
