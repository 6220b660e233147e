#include "spdemil/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spdemil/errors.hpp"

namespace spdemil {

double RegularityParams::q_mil() const { return std::min(2.0 * (gamma - beta), gamma); }

double RegularityParams::q_ees() const { return std::min(0.5, q_mil()); }

std::vector<std::string> RegularityParams::violations() const {
    std::vector<std::string> out;
    if (!(beta >= 0.0 && beta < 1.0)) out.emplace_back("beta must lie in [0, 1)");
    if (!(delta > 0.0 && delta < 0.5)) out.emplace_back("delta must lie in (0, 1/2)");
    if (!(gamma >= std::max(beta, delta) && gamma < delta + 0.5)) {
        out.emplace_back("gamma must lie in [max(beta, delta), delta + 1/2)");
    }
    if (!(vartheta > 0.0 && vartheta < 0.5)) out.emplace_back("vartheta must lie in (0, 1/2)");
    if (!(alpha > 0.0)) out.emplace_back("alpha must be positive");
    return out;
}

DriftRule affine_drift(std::function<double(std::size_t)> constant, double slope) {
    return [constant = std::move(constant), slope](const Eigen::VectorXd& y) {
        Eigen::VectorXd out(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            out[i] = constant(static_cast<std::size_t>(i + 1)) + slope * y[i];
        }
        return out;
    };
}

double constant_one_coefficient(std::size_t i) {
    if (i % 2 == 0) return 0.0;
    return 2.0 * std::numbers::sqrt2 / (static_cast<double>(i) * std::numbers::pi);
}

Eigen::MatrixXd DiffusionFamily::diffusion_matrix(const Eigen::VectorXd& y, std::size_t K) const {
    const Eigen::Index N = y.size();
    Eigen::MatrixXd out(N, static_cast<Eigen::Index>(K));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < N; ++i) {
            out(i, j) = mu(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1), y);
        }
    }
    return out;
}

Eigen::VectorXd DiffusionFamily::derivative_contract(const Eigen::VectorXd& y,
                                                     const Eigen::MatrixXd& G) const {
    const Eigen::Index N = y.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < G.cols(); ++j) {
            for (Eigen::Index k = 0; k < N; ++k) {
                sum += phi(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1),
                           static_cast<std::size_t>(k + 1), y) *
                       G(k, j);
            }
        }
        out[i] = sum;
    }
    return out;
}

DenominatorFamily::DenominatorFamily(double p) : p_(p), powers_(1025) {
    if (!(p > 0.0)) throw InvalidArgument("denominator exponent p must be positive");
    for (std::size_t i = 0; i < powers_.size(); ++i) powers_[i] = std::pow(static_cast<double>(i), p);
}

double DenominatorFamily::power(std::size_t i) const {
    return i < powers_.size() ? powers_[i] : std::pow(static_cast<double>(i), p_);
}

double DenominatorFamily::denom(std::size_t i, std::size_t j) const { return power(i) + power(j); }

double DenominatorFamily::mu(std::size_t i, std::size_t j, const Eigen::VectorXd& y) const {
    if (j > static_cast<std::size_t>(y.size())) return 0.0;
    return y[static_cast<Eigen::Index>(j - 1)] / denom(i, j);
}

double DenominatorFamily::phi(std::size_t i, std::size_t j, std::size_t k, const Eigen::VectorXd&) const {
    return j == k ? 1.0 / denom(i, j) : 0.0;
}

Eigen::MatrixXd DenominatorFamily::diffusion_matrix(const Eigen::VectorXd& y, std::size_t K) const {
    const Eigen::Index N = y.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N, static_cast<Eigen::Index>(K));
    const Eigen::Index cols = std::min<Eigen::Index>(N, static_cast<Eigen::Index>(K));
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < N; ++i) {
            out(i, j) = y[j] / denom(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1));
        }
    }
    return out;
}

Eigen::VectorXd DenominatorFamily::derivative_contract(const Eigen::VectorXd& y,
                                                       const Eigen::MatrixXd& G) const {
    const Eigen::Index N = y.size();
    const Eigen::Index cols = std::min(N, G.cols());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            sum += G(j, j) / denom(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1));
        }
        out[i] = sum;
    }
    return out;
}

DiagonalFamily::DiagonalFamily(std::function<double(std::size_t)> nu) : nu_(std::move(nu)) {}

double DiagonalFamily::mu(std::size_t i, std::size_t, const Eigen::VectorXd& y) const {
    return nu_(i) * y[static_cast<Eigen::Index>(i - 1)];
}

double DiagonalFamily::phi(std::size_t i, std::size_t, std::size_t k, const Eigen::VectorXd&) const {
    return i == k ? nu_(i) : 0.0;
}

ConstantFamily::ConstantFamily(std::function<double(std::size_t, std::size_t)> value)
    : value_(std::move(value)) {}

double ConstantFamily::mu(std::size_t i, std::size_t j, const Eigen::VectorXd&) const {
    return value_(i, j);
}

SineFamily::SineFamily(double omega, double p) : omega_(omega), p_(p) {}

double SineFamily::mu(std::size_t i, std::size_t j, const Eigen::VectorXd& y) const {
    if (j > static_cast<std::size_t>(y.size())) return 0.0;
    const double d = std::pow(static_cast<double>(i), p_) + std::pow(static_cast<double>(j), p_);
    return std::sin(omega_ * y[static_cast<Eigen::Index>(j - 1)]) / d;
}

double SineFamily::phi(std::size_t i, std::size_t j, std::size_t k, const Eigen::VectorXd& y) const {
    if (j != k) return 0.0;
    const double d = std::pow(static_cast<double>(i), p_) + std::pow(static_cast<double>(j), p_);
    return omega_ * std::cos(omega_ * y[static_cast<Eigen::Index>(j - 1)]) / d;
}

SpdeProblem example_problem(double epsilon, double p) {
    SpdeProblem problem;
    problem.basis = dirichlet_laplacian_basis(0.01);
    problem.spectrum = power_law_spectrum(3.0);
    problem.T = 1.0;
    problem.drift = affine_drift(constant_one_coefficient, -1.0);
    problem.diffusion = std::make_shared<DenominatorFamily>(p);
    problem.params.beta = 0.0;
    problem.params.gamma = 1.0 - epsilon;
    problem.params.delta = 0.5 - 0.5 * epsilon;
    problem.params.alpha = 7.0 / 3.0 - epsilon;
    problem.params.vartheta = 0.4;
    problem.initial = [](std::size_t N) { return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N)); };
    return problem;
}

Eigen::MatrixXd apply_B(const SpdeProblem& problem, const Eigen::VectorXd& state, std::size_t K) {
    return problem.diffusion->diffusion_matrix(state, K);
}

Eigen::VectorXd milstein_correction(const SpdeProblem& problem, const Eigen::VectorXd& state,
                                    const Eigen::MatrixXd& diffusion, const Eigen::MatrixXd& iter_values) {
    if (diffusion.rows() != state.size() || diffusion.cols() != iter_values.rows() ||
        iter_values.rows() != iter_values.cols()) {
        throw InvalidArgument("milstein_correction: dimension mismatch");
    }
    const Eigen::MatrixXd G = diffusion * iter_values;
    return problem.diffusion->derivative_contract(state, G);
}

Eigen::VectorXd milstein_correction(const SpdeProblem& problem, const Eigen::VectorXd& state,
                                    const Eigen::MatrixXd& iter_values) {
    const auto K = static_cast<std::size_t>(iter_values.rows());
    return milstein_correction(problem, state, apply_B(problem, state, K), iter_values);
}

CommutativityResult check_commutativity(const SpdeProblem& problem, std::size_t N, std::size_t K,
                                        const std::vector<Eigen::VectorXd>& trial_states) {
    if (trial_states.empty()) throw InvalidArgument("check_commutativity: need a trial state");
    const DiffusionFamily& family = *problem.diffusion;
    CommutativityResult result;
    for (const Eigen::VectorXd& y : trial_states) {
        if (static_cast<std::size_t>(y.size()) != N) {
            throw InvalidArgument("check_commutativity: trial state length differs from N");
        }
        const Eigen::MatrixXd mu = family.diffusion_matrix(y, K);
        for (std::size_t i = 1; i <= N; ++i) {
            Eigen::MatrixXd phi_i(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
            for (std::size_t k = 1; k <= N; ++k) {
                for (std::size_t m = 1; m <= K; ++m) {
                    phi_i(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(m - 1)) =
                        family.phi(i, m, k, y);
                }
            }
            const Eigen::MatrixXd S = phi_i.transpose() * mu;  // S(m, n) = sum_k phi^k_im mu_kn
            for (std::size_t m = 1; m <= K; ++m) {
                for (std::size_t n = m + 1; n <= K; ++n) {
                    const double lhs = S(static_cast<Eigen::Index>(m - 1), static_cast<Eigen::Index>(n - 1));
                    const double rhs = S(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(m - 1));
                    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
                    if (std::abs(lhs - rhs) > 1e-10 * scale) {
                        result.commutative = false;
                        result.witness = CommutativityWitness{i, m, n, y, lhs, rhs};
                        return result;
                    }
                }
            }
        }
    }
    return result;
}

bool AssumptionReport::all_pass() const {
    return checkable && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

AssumptionReport check_assumptions(const SpdeProblem& problem) {
    AssumptionReport report;
    const auto* family = dynamic_cast<const DenominatorFamily*>(problem.diffusion.get());
    if (family == nullptr) return report;
    report.checkable = true;
    const RegularityParams& r = problem.params;
    auto add = [&report](std::string name, double margin, bool strict) {
        report.checks.push_back({std::move(name), strict ? margin > 0.0 : margin >= 0.0, margin});
    };
    add("beta >= 0", r.beta, false);
    add("beta < 1", 1.0 - r.beta, true);
    add("delta > 0", r.delta, true);
    add("gamma >= max(beta, delta)", r.gamma - std::max(r.beta, r.delta), false);
    add("gamma < delta + 1/2", r.delta + 0.5 - r.gamma, true);
    add("vartheta < 1/2", 0.5 - r.vartheta, true);
    add("alpha > 0", r.alpha, true);

    const double p = family->exponent();
    const double rho = problem.spectrum.rho_Q;
    // Linear growth in H_delta needs sum_i i^{2 delta - p/2} < infinity.
    add("delta < p/4 - 1/2", p / 4.0 - 0.5 - r.delta, true);
    // Hilbert-Schmidt bound: sum_j j^{-(rho (1 - 2 alpha) + 2p + 4 gamma)} and sum_i i^{-4 vartheta}.
    add("alpha < (rho_Q + 2p + 4 gamma - 1) / (2 rho_Q)",
        (rho + 2.0 * p + 4.0 * r.gamma - 1.0) / (2.0 * rho) - r.alpha, true);
    add("vartheta > 1/4", r.vartheta - 0.25, true);
    add("gamma >= 1/2", r.gamma - 0.5, false);
    add("gamma < 1", 1.0 - r.gamma, true);
    return report;
}

double frechet_residual(const DiffusionFamily& family, const Eigen::VectorXd& state, std::size_t K,
                        double eps) {
    const auto N = static_cast<std::size_t>(state.size());
    double worst = 0.0;
    Eigen::VectorXd plus = state, minus = state;
    for (std::size_t k = 1; k <= N; ++k) {
        const auto kk = static_cast<Eigen::Index>(k - 1);
        plus[kk] = state[kk] + eps;
        minus[kk] = state[kk] - eps;
        for (std::size_t i = 1; i <= N; ++i) {
            for (std::size_t j = 1; j <= K; ++j) {
                const double fd = (family.mu(i, j, plus) - family.mu(i, j, minus)) / (2.0 * eps);
                worst = std::max(worst, std::abs(family.phi(i, j, k, state) - fd));
            }
        }
        plus[kk] = state[kk];
        minus[kk] = state[kk];
    }
    return worst;
}

}  // namespace spdemil
