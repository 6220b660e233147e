#include "spdemil/iterints.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spdemil/errors.hpp"
#include "spdemil/stats.hpp"

namespace spdemil {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::VectorXd as_vector(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_inputs(std::span<const double> delta_beta, double h, std::size_t D) {
    if (D == 0) throw InvalidArgument("truncation level D must be >= 1");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("step h must be positive");
    if (delta_beta.empty()) throw InvalidArgument("need at least one noise mode");
}

/// U (K x D) and V (K x D), drawn column by column: U_1, V_1, U_2, V_2, ...
struct SeriesVariables {
    Eigen::MatrixXd U;
    Eigen::MatrixXd V;
};

SeriesVariables draw_series(Stream& series, std::size_t K, std::size_t D) {
    SeriesVariables out{Eigen::MatrixXd(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(D)),
                        Eigen::MatrixXd(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(D))};
    for (Eigen::Index r = 0; r < out.U.cols(); ++r) {
        for (Eigen::Index k = 0; k < out.U.rows(); ++k) out.U(k, r) = series.normal();
        for (Eigen::Index k = 0; k < out.V.rows(); ++k) out.V(k, r) = series.normal();
    }
    return out;
}

/// Standard-scale Levy-area series, exactly antisymmetric:
/// (h / 2 pi) sum_r (1/r) [U_r (V_r + sqrt(2/h) b)^T - (V_r + sqrt(2/h) b) U_r^T].
Eigen::MatrixXd series_area(const SeriesVariables& vars, const Eigen::VectorXd& b, double h) {
    const Eigen::Index D = vars.U.cols();
    const Eigen::RowVectorXd inv_r =
        Eigen::RowVectorXd::LinSpaced(D, 1.0, static_cast<double>(D)).cwiseInverse();
    const Eigen::MatrixXd scaled_U = vars.U.array().rowwise() * inv_r.array();
    const Eigen::MatrixXd shifted_V = vars.V.colwise() + std::sqrt(2.0 / h) * b;
    const Eigen::MatrixXd P = scaled_U * shifted_V.transpose();
    return (h / kTwoPi) * (P - P.transpose());
}

/// Scale a standard-scale antisymmetric area into I^Q values.
Eigen::MatrixXd assemble(const Eigen::MatrixXd& area, const Eigen::VectorXd& b, double h,
                         const Eigen::VectorXd& eta) {
    const Eigen::Index K = b.size();
    Eigen::MatrixXd sym = 0.5 * (b * b.transpose());
    sym.diagonal().array() -= 0.5 * h;
    const Eigen::VectorXd root_eta = eta.cwiseSqrt();
    Eigen::MatrixXd values(K, K);
    for (Eigen::Index j = 0; j < K; ++j) {
        for (Eigen::Index i = 0; i < K; ++i) {
            values(i, j) = root_eta[i] * root_eta[j] * (sym(i, j) + area(i, j));
        }
    }
    return values;
}

void add_packed_tail(Eigen::MatrixXd& area, const Eigen::VectorXd& tail) {
    const auto K = static_cast<std::size_t>(area.rows());
    for (std::size_t i = 1; i < K; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double t = tail[static_cast<Eigen::Index>(pair_index(i, j))];
            area(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += t;
            area(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) -= t;
        }
    }
}

/// Pair matrix of W(b): d_ik b_j b_l + d_jl b_i b_k - d_il b_j b_k - d_jk b_i b_l.
Eigen::MatrixXd increment_pair_matrix(const Eigen::VectorXd& b) {
    const auto K = static_cast<std::size_t>(b.size());
    const auto P = static_cast<Eigen::Index>(pair_count(K));
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(P, P);
    auto delta = [](std::size_t a, std::size_t c) { return a == c ? 1.0 : 0.0; };
    for (std::size_t i = 1; i < K; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            for (std::size_t k = 1; k < K; ++k) {
                for (std::size_t l = 0; l < k; ++l) {
                    const auto bi = b[static_cast<Eigen::Index>(i)], bj = b[static_cast<Eigen::Index>(j)];
                    const auto bk = b[static_cast<Eigen::Index>(k)], bl = b[static_cast<Eigen::Index>(l)];
                    W(static_cast<Eigen::Index>(pair_index(i, j)), static_cast<Eigen::Index>(pair_index(k, l))) =
                        delta(i, k) * bj * bl + delta(j, l) * bi * bk - delta(i, l) * bj * bk -
                        delta(j, k) * bi * bl;
                }
            }
        }
    }
    return W;
}

Eigen::MatrixXd symmetric_root(const Eigen::MatrixXd& C) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(C);
    if (solver.info() != Eigen::Success) {
        throw NumericalDegeneracy("tail covariance eigendecomposition failed", C);
    }
    Eigen::VectorXd ev = solver.eigenvalues();
    const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    if (ev.minCoeff() < -1e-12 * scale) {
        std::ostringstream msg;
        msg << "tail covariance is not positive semidefinite (min eigenvalue " << ev.minCoeff() << ")";
        throw NumericalDegeneracy(msg.str(), C);
    }
    ev = ev.cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().transpose();
}

double inverse_square_sum(std::size_t from, std::size_t to) {
    // Neumaier-compensated sum_{r=from}^{to} r^{-2}, smallest terms first.
    double sum = 0.0, carry = 0.0;
    for (std::size_t r = to; r >= from && r > 0; --r) {
        const double term = 1.0 / (static_cast<double>(r) * static_cast<double>(r));
        const double t = sum + term;
        carry += std::abs(sum) >= term ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return sum + carry;
}

}  // namespace

std::string to_string(IterIntAlgorithm algorithm) {
    switch (algorithm) {
        case IterIntAlgorithm::Alg1: return "ALG1";
        case IterIntAlgorithm::Alg2: return "ALG2";
        case IterIntAlgorithm::Oracle: return "ORACLE";
    }
    return "?";
}

IterIntAlgorithm parse_iterint_algorithm(const std::string& text) {
    std::string up = text;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "ALG1" || up == "1") return IterIntAlgorithm::Alg1;
    if (up == "ALG2" || up == "2") return IterIntAlgorithm::Alg2;
    if (up == "ORACLE") return IterIntAlgorithm::Oracle;
    throw InvalidArgument("unknown iterated-integral algorithm '" + text + "'");
}

double tail_scale(double h, std::size_t D) {
    const double partial = inverse_square_sum(1, D);
    return h * h / (2.0 * std::numbers::pi * std::numbers::pi) *
           (std::numbers::pi * std::numbers::pi / 6.0 - partial);
}

Eigen::MatrixXd tail_covariance(std::span<const double> delta_beta, double h, std::size_t D) {
    check_inputs(delta_beta, h, D);
    const Eigen::VectorXd b = as_vector(delta_beta);
    const auto P = static_cast<Eigen::Index>(pair_count(delta_beta.size()));
    return tail_scale(h, D) * (Eigen::MatrixXd::Identity(P, P) + increment_pair_matrix(b) / h);
}

Eigen::MatrixXd tail_covariance_root(std::span<const double> delta_beta, double h, std::size_t D,
                                     TailFactorization factorization) {
    check_inputs(delta_beta, h, D);
    const std::size_t K = delta_beta.size();
    if (factorization == TailFactorization::Auto) {
        factorization = K <= 8 ? TailFactorization::Eigen : TailFactorization::ClosedForm;
    }
    if (factorization == TailFactorization::Eigen) {
        return symmetric_root(tail_covariance(delta_beta, h, D));
    }
    // W(b)^2 = |b|^2 W(b), so (I + W/h)^{1/2} = I + W / (h (1 + sqrt(1 + |b|^2 / h))).
    const Eigen::VectorXd b = as_vector(delta_beta);
    const auto P = static_cast<Eigen::Index>(pair_count(K));
    const double s = b.squaredNorm();
    const double c = 1.0 / (h * (1.0 + std::sqrt(1.0 + s / h)));
    return std::sqrt(tail_scale(h, D)) *
           (Eigen::MatrixXd::Identity(P, P) + c * increment_pair_matrix(b));
}

IterIntBatch alg1_batch(std::span<const double> delta_beta, double h, std::size_t D,
                        const QSpectrum& spectrum, Stream& series) {
    check_inputs(delta_beta, h, D);
    const Eigen::VectorXd b = as_vector(delta_beta);
    const Eigen::VectorXd eta = spectrum.eigenvalues(delta_beta.size());
    const std::uint64_t before = series.normals_drawn();
    const SeriesVariables vars = draw_series(series, delta_beta.size(), D);
    IterIntBatch batch;
    batch.values = assemble(series_area(vars, b, h), b, h, eta);
    batch.h = h;
    batch.D = D;
    batch.algorithm = IterIntAlgorithm::Alg1;
    batch.normals_drawn = series.normals_drawn() - before;
    return batch;
}

IterIntBatch alg2_batch_with_tail_normals(std::span<const double> delta_beta, double h,
                                          std::size_t D, const QSpectrum& spectrum, Stream& series,
                                          std::span<const double> tail_normals,
                                          TailFactorization factorization) {
    check_inputs(delta_beta, h, D);
    const std::size_t K = delta_beta.size();
    if (tail_normals.size() != pair_count(K)) {
        throw InvalidArgument("alg2: expected K(K-1)/2 tail normals");
    }
    const Eigen::VectorXd b = as_vector(delta_beta);
    const Eigen::VectorXd eta = spectrum.eigenvalues(K);
    const std::uint64_t before = series.normals_drawn();
    const SeriesVariables vars = draw_series(series, K, D);
    Eigen::MatrixXd area = series_area(vars, b, h);
    if (K >= 2) {
        const Eigen::VectorXd tail =
            tail_covariance_root(delta_beta, h, D, factorization) * as_vector(tail_normals);
        add_packed_tail(area, tail);
    }
    IterIntBatch batch;
    batch.values = assemble(area, b, h, eta);
    batch.h = h;
    batch.D = D;
    batch.algorithm = IterIntAlgorithm::Alg2;
    batch.normals_drawn = series.normals_drawn() - before + tail_normals.size();
    return batch;
}

IterIntBatch alg2_batch(std::span<const double> delta_beta, double h, std::size_t D,
                        const QSpectrum& spectrum, Stream& series, Stream& tail,
                        TailFactorization factorization) {
    std::vector<double> xi(pair_count(delta_beta.size()));
    for (double& x : xi) x = tail.normal();
    return alg2_batch_with_tail_normals(delta_beta, h, D, spectrum, series, xi, factorization);
}

IterIntBatch oracle_batch(const RowMatrix& fine_increments, double h, const QSpectrum& spectrum) {
    const Eigen::Index S = fine_increments.rows();
    const Eigen::Index K = fine_increments.cols();
    if (S < 2) throw InvalidArgument("oracle_batch: need S >= 2 sub-steps");
    const Eigen::VectorXd eta = spectrum.eigenvalues(static_cast<std::size_t>(K));
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd partial = fine_increments.row(0).transpose();
    for (Eigen::Index s = 1; s < S; ++s) {
        sum.noalias() += partial * fine_increments.row(s);
        partial += fine_increments.row(s).transpose();
    }
    const Eigen::VectorXd root_eta = eta.cwiseSqrt();
    IterIntBatch batch;
    batch.values = root_eta.asDiagonal() * sum * root_eta.asDiagonal();
    batch.h = h;
    batch.D = static_cast<std::size_t>(S);
    batch.algorithm = IterIntAlgorithm::Oracle;
    return batch;
}

std::size_t choose_D(IterIntAlgorithm algorithm, std::size_t M, std::size_t K, double q,
                     const QSpectrum& spectrum, TruncationRule rule, double alpha) {
    if (M == 0) throw InvalidArgument("choose_D: M must be >= 1");
    if (!(q > 0.0)) throw InvalidArgument("choose_D: q must be positive");
    const double m = static_cast<double>(M);
    double sup_tail = 0.0;
    if (rule == TruncationRule::EigenvalueBased) {
        if (!(alpha > 0.0)) throw InvalidArgument("choose_D: eigenvalue rule needs alpha > 0");
        for (std::size_t j = K + 1; j <= K + 4096; ++j) sup_tail = std::max(sup_tail, spectrum.eta(j));
        if (!(sup_tail > 0.0)) throw InvalidArgument("choose_D: truncated spectrum is identically zero");
    }
    double bound = 1.0;
    switch (algorithm) {
        case IterIntAlgorithm::Alg1:
            bound = rule == TruncationRule::StepBased ? std::pow(m, 2.0 * q - 1.0)
                                                      : std::pow(sup_tail, -2.0 * alpha) / m;
            break;
        case IterIntAlgorithm::Alg2: {
            const double kd = static_cast<double>(K);
            const double min_eta = spectrum.eigenvalues(K).minCoeff();
            const double factor = std::min(kd * std::sqrt(kd - 1.0), 1.0 / min_eta);
            bound = rule == TruncationRule::StepBased
                        ? std::pow(m, q - 0.5) * factor
                        : factor * std::pow(sup_tail, -alpha) / std::sqrt(m);
            break;
        }
        case IterIntAlgorithm::Oracle:
            throw InvalidArgument("choose_D: the oracle has no truncation level");
    }
    // Bounds that are integers up to round-off must not be bumped by ceil.
    const double D = std::ceil(bound * (1.0 - 1e-12));
    return static_cast<std::size_t>(std::max(1.0, D));
}

double measure_rmse(std::span<const IterIntBatch> candidates,
                    std::span<const IterIntBatch> references) {
    if (candidates.size() != references.size() || candidates.empty()) {
        throw InvalidArgument("measure_rmse: need equally many candidate and reference batches");
    }
    std::vector<double> sq(candidates.size());
    for (std::size_t s = 0; s < candidates.size(); ++s) {
        sq[s] = (candidates[s].values - references[s].values).squaredNorm();
    }
    return std::sqrt(mean(sq));
}

RateStudyResult measure_rates(const RateStudyConfig& config) {
    if (config.algorithm == IterIntAlgorithm::Oracle) {
        throw InvalidArgument("measure_rates: oracle has no D-rate");
    }
    if (config.D_values.size() < 2) throw InvalidArgument("measure_rates: need two or more D values");
    std::vector<std::size_t> Ds = config.D_values;
    std::sort(Ds.begin(), Ds.end());
    if (Ds.back() >= config.D_reference) {
        throw InvalidArgument("measure_rates: D_reference must exceed every D");
    }
    const std::size_t K = config.K;
    const double h = config.h;
    const bool alg2 = config.algorithm == IterIntAlgorithm::Alg2;
    if (alg2 && K < 2) throw InvalidArgument("measure_rates: Alg2 rates need K >= 2");
    const auto P = static_cast<Eigen::Index>(pair_count(K));

    std::vector<std::vector<double>> sq(Ds.size(), std::vector<double>(config.samples));
    std::vector<double> between_scale(Ds.size());
    for (std::size_t d = 0; d < Ds.size(); ++d) {
        between_scale[d] = h * h / (2.0 * std::numbers::pi * std::numbers::pi) *
                           inverse_square_sum(Ds[d] + 1, config.D_reference);
    }

    for (std::size_t s = 0; s < config.samples; ++s) {
        Stream inc({config.seed, s, StreamPurpose::Auxiliary, 0, 0});
        std::vector<double> dbeta(K);
        for (double& x : dbeta) x = std::sqrt(h) * inc.normal();
        const StreamKey series_key{config.seed, s, StreamPurpose::Series, 0, 0};
        const StreamKey tail_key{config.seed, s, StreamPurpose::Tail, 0, 0};

        IterIntBatch reference;
        {
            Stream series(series_key);
            if (alg2) {
                Stream tail(tail_key);
                reference = alg2_batch(dbeta, h, config.D_reference, config.spectrum, series, tail);
            } else {
                reference = alg1_batch(dbeta, h, config.D_reference, config.spectrum, series);
            }
        }

        if (!alg2) {
            for (std::size_t d = 0; d < Ds.size(); ++d) {
                Stream series(series_key);
                const IterIntBatch cand = alg1_batch(dbeta, h, Ds[d], config.spectrum, series);
                sq[d][s] = (cand.values - reference.values).squaredNorm();
            }
            continue;
        }

        // Coupled tails, see header.
        Stream replay(series_key);
        const SeriesVariables vars = draw_series(replay, K, config.D_reference);
        const Eigen::VectorXd b = as_vector(dbeta);
        Eigen::VectorXd reference_tail(P);
        {
            Stream tail(tail_key);
            Eigen::VectorXd xi(P);
            for (Eigen::Index p = 0; p < P; ++p) xi[p] = tail.normal();
            reference_tail = tail_covariance_root(dbeta, h, config.D_reference) * xi;
        }

        Eigen::VectorXd u_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
        Eigen::MatrixXd gram = cross;
        std::size_t next = Ds.size();
        for (std::size_t r = config.D_reference; r >= 1 && next > 0; --r) {
            const double inv_r = 1.0 / static_cast<double>(r);
            const auto col = static_cast<Eigen::Index>(r - 1);
            u_sum += inv_r * vars.U.col(col);
            cross.noalias() += inv_r * vars.U.col(col) * vars.V.col(col).transpose();
            const double w = (h * inv_r / kTwoPi) * (h * inv_r / kTwoPi);
            gram.noalias() += w * vars.U.col(col) * vars.U.col(col).transpose();
            if (r != Ds[next - 1] + 1) continue;
            --next;
            const std::size_t D = Ds[next];
            // Gaussian-in-U part, conditional covariance of the V part, and the V part itself.
            Eigen::VectorXd mean_part(P), bilinear(P);
            Eigen::MatrixXd cond_cov(P, P);
            const double c = std::sqrt(2.0 / h) * h / kTwoPi;
            for (std::size_t i = 1; i < K; ++i) {
                for (std::size_t j = 0; j < i; ++j) {
                    const auto p = static_cast<Eigen::Index>(pair_index(i, j));
                    const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
                    mean_part[p] = c * (u_sum[I] * b[J] - u_sum[J] * b[I]);
                    bilinear[p] = (h / kTwoPi) * (cross(I, J) - cross(J, I));
                    for (std::size_t k = 1; k < K; ++k) {
                        for (std::size_t l = 0; l < k; ++l) {
                            const auto q = static_cast<Eigen::Index>(pair_index(k, l));
                            const auto Kk = static_cast<Eigen::Index>(k), L = static_cast<Eigen::Index>(l);
                            cond_cov(p, q) = (j == l ? gram(I, Kk) : 0.0) - (j == k ? gram(I, L) : 0.0) -
                                             (i == l ? gram(J, Kk) : 0.0) + (i == k ? gram(J, L) : 0.0);
                        }
                    }
                }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cond_cov);
            const Eigen::MatrixXd whiten = eig.eigenvectors() *
                                           eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse().asDiagonal() *
                                           eig.eigenvectors().transpose();
            const Eigen::VectorXd z = whiten * bilinear;
            const Eigen::VectorXd coupled = mean_part + std::sqrt(between_scale[next]) * z + reference_tail;
            const Eigen::MatrixXd root = tail_covariance_root(dbeta, h, D);
            const Eigen::VectorXd xi = root.ldlt().solve(coupled);
            Stream series(series_key);
            std::vector<double> xi_vec(xi.data(), xi.data() + xi.size());
            const IterIntBatch cand =
                alg2_batch_with_tail_normals(dbeta, h, D, config.spectrum, series, xi_vec);
            sq[next][s] = (cand.values - reference.values).squaredNorm();
        }
    }

    RateStudyResult result;
    result.D_values = Ds;
    std::vector<double> xs;
    for (std::size_t d = 0; d < Ds.size(); ++d) {
        result.rmse.push_back(std::sqrt(mean(sq[d])));
        xs.push_back(static_cast<double>(Ds[d]));
    }
    result.slope = fit_loglog_slope(xs, result.rmse);
    return result;
}

}  // namespace spdemil
