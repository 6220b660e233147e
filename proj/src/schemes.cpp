#include "spdemil/schemes.hpp"

#include <algorithm>
#include <cctype>

#include "spdemil/errors.hpp"

namespace spdemil {

std::string to_string(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::MIL1: return "MIL1";
        case SchemeKind::MIL2: return "MIL2";
        case SchemeKind::EES: return "EES";
        case SchemeKind::LIE: return "LIE";
    }
    return "?";
}

SchemeKind parse_scheme_kind(const std::string& text) {
    std::string up = text;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "MIL1") return SchemeKind::MIL1;
    if (up == "MIL2") return SchemeKind::MIL2;
    if (up == "EES") return SchemeKind::EES;
    if (up == "LIE") return SchemeKind::LIE;
    throw InvalidArgument("unknown scheme '" + text + "'");
}

double SchemeConfig::h() const {
    return (problem ? problem->T : 1.0) / static_cast<double>(M);
}

void SchemeConfig::validate() const {
    if (problem == nullptr) throw InvalidArgument("scheme config has no problem");
    if (N == 0 || K == 0 || M == 0) throw InvalidArgument("N, K and M must be >= 1");
    if (!(h() > 0.0)) throw InvalidArgument("time step must be positive");
    if ((kind == SchemeKind::MIL1 || kind == SchemeKind::MIL2) && D == 0) {
        throw InvalidArgument("Milstein schemes need D >= 1");
    }
}

namespace {

void check_dims(const SchemeConfig& config, const GalerkinState& state, const Eigen::VectorXd& q_inc) {
    if (state.size() != config.N) throw InvalidArgument("state length differs from N");
    if (static_cast<std::size_t>(q_inc.size()) != config.K) {
        throw InvalidArgument("noise increment length differs from K");
    }
}

/// y + h F(y) + B(y) q_inc, plus the Milstein term when `iter` is given.
Eigen::VectorXd explicit_part(const SchemeConfig& config, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& q_inc, const Eigen::MatrixXd* iter) {
    const SpdeProblem& problem = *config.problem;
    const Eigen::MatrixXd B = apply_B(problem, y, config.K);
    Eigen::VectorXd out = y + config.h() * problem.drift(y) + B * q_inc;
    if (iter != nullptr) out += milstein_correction(problem, y, B, *iter);
    return out;
}

}  // namespace

GalerkinState step_mil(const SchemeConfig& config, const GalerkinState& state,
                       const Eigen::VectorXd& q_inc, const IterIntBatch& iter) {
    config.validate();
    check_dims(config, state, q_inc);
    if (static_cast<std::size_t>(iter.values.rows()) != config.K ||
        static_cast<std::size_t>(iter.values.cols()) != config.K) {
        throw InvalidArgument("iterated-integral batch is not K x K");
    }
    const double h = config.h();
    const Eigen::VectorXd factors = semigroup_factors(config.problem->basis, config.N, h);
    return {factors.cwiseProduct(explicit_part(config, state.coeffs, q_inc, &iter.values)), state.time + h};
}

GalerkinState step_ees(const SchemeConfig& config, const GalerkinState& state,
                       const Eigen::VectorXd& q_inc) {
    config.validate();
    check_dims(config, state, q_inc);
    const double h = config.h();
    const Eigen::VectorXd factors = semigroup_factors(config.problem->basis, config.N, h);
    return {factors.cwiseProduct(explicit_part(config, state.coeffs, q_inc, nullptr)), state.time + h};
}

GalerkinState step_lie(const SchemeConfig& config, const GalerkinState& state,
                       const Eigen::VectorXd& q_inc) {
    config.validate();
    check_dims(config, state, q_inc);
    const double h = config.h();
    const Eigen::VectorXd factors = resolvent_factors(config.problem->basis, config.N, h);
    return {factors.cwiseProduct(explicit_part(config, state.coeffs, q_inc, nullptr)), state.time + h};
}

TrajectoryResult run_trajectory(const SchemeConfig& config, const FinePath& fine_path,
                                const TrajectoryStreams& streams, const TrajectoryOptions& options) {
    config.validate();
    if (config.K > fine_path.modes()) throw InvalidArgument("K exceeds the fine path's modes");
    if (fine_path.steps() % config.M != 0) {
        throw InvalidArgument("fine path steps are not a multiple of M");
    }
    if (std::abs(fine_path.T - config.problem->T) > 1e-12 * config.problem->T) {
        throw InvalidArgument("fine path horizon differs from the problem's");
    }
    if (options.record && options.record_every == 0) throw InvalidArgument("record_every must be >= 1");

    const SpdeProblem& problem = *config.problem;
    const std::size_t N = config.N, K = config.K, M = config.M;
    const double h = config.h();
    const bool milstein = config.kind == SchemeKind::MIL1 || config.kind == SchemeKind::MIL2;

    const RowMatrix coarse = aggregate(fine_path.increments.leftCols(static_cast<Eigen::Index>(K)), M);
    const Eigen::VectorXd factors = config.kind == SchemeKind::LIE
                                        ? resolvent_factors(problem.basis, N, h)
                                        : semigroup_factors(problem.basis, N, h);
    const Eigen::VectorXd root_eta = problem.spectrum.eigenvalues(K).cwiseSqrt();

    TrajectoryResult result;
    result.D = milstein ? config.D : 0;
    result.increment_checksum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
    Eigen::VectorXd y = problem.initial(N);
    if (static_cast<std::size_t>(y.size()) != N) throw InvalidArgument("initial state length differs from N");
    if (options.record) result.recorded.push_back({y, 0.0});

    const std::vector<double> zero_tail(pair_count(K), 0.0);
    std::vector<double> dbeta(K);
    Eigen::VectorXd q_inc(static_cast<Eigen::Index>(K));
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t j = 0; j < K; ++j) {
            dbeta[j] = coarse(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j));
            q_inc[static_cast<Eigen::Index>(j)] = root_eta[static_cast<Eigen::Index>(j)] * dbeta[j];
        }
        result.increment_checksum += coarse.row(static_cast<Eigen::Index>(m)).transpose();
        result.normals_drawn += K;

        const Eigen::MatrixXd B = problem.diffusion->diffusion_matrix(y, K);
        Eigen::VectorXd next = y + h * problem.drift(y) + B * q_inc;
        if (milstein) {
            Stream series({streams.seed, streams.path, StreamPurpose::Series, streams.level, m});
            IterIntBatch iter;
            if (config.kind == SchemeKind::MIL1) {
                iter = alg1_batch(dbeta, h, config.D, problem.spectrum, series);
            } else if (options.tail == TailMode::Zero) {
                iter = alg2_batch_with_tail_normals(dbeta, h, config.D, problem.spectrum, series, zero_tail,
                                                    config.factorization);
            } else {
                Stream tail({streams.seed, streams.path, StreamPurpose::Tail, streams.level, m});
                iter = alg2_batch(dbeta, h, config.D, problem.spectrum, series, tail, config.factorization);
            }
            result.normals_drawn += iter.normals_drawn;
            next += milstein_correction(problem, y, B, iter.values);
        }
        y = factors.cwiseProduct(next);
        if (options.record && (m + 1) % options.record_every == 0) {
            result.recorded.push_back({y, h * static_cast<double>(m + 1)});
        }
    }
    result.final_state = {y, problem.T};
    return result;
}

}  // namespace spdemil
