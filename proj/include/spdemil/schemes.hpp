#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdemil/iterints.hpp"
#include "spdemil/noise.hpp"
#include "spdemil/operators.hpp"
#include "spdemil/spectral.hpp"

namespace spdemil {

enum class SchemeKind { MIL1, MIL2, EES, LIE };

std::string to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(const std::string& text);

struct SchemeConfig {
    SchemeKind kind = SchemeKind::EES;
    std::size_t N = 1;
    std::size_t K = 1;
    std::size_t M = 1;
    std::size_t D = 1;  // ignored for EES and LIE
    const SpdeProblem* problem = nullptr;
    TailFactorization factorization = TailFactorization::Auto;

    double h() const;
    /// Throws InvalidArgument on a broken invariant.
    void validate() const;
};

/// semigroup ⊙ (y + h F(y) + B(y) q_inc + correction(iter)).
GalerkinState step_mil(const SchemeConfig& config, const GalerkinState& state,
                       const Eigen::VectorXd& q_inc, const IterIntBatch& iter);

/// semigroup ⊙ (y + h F(y) + B(y) q_inc).
GalerkinState step_ees(const SchemeConfig& config, const GalerkinState& state,
                       const Eigen::VectorXd& q_inc);

/// resolvent ⊙ (y + h F(y) + B(y) q_inc).
GalerkinState step_lie(const SchemeConfig& config, const GalerkinState& state,
                       const Eigen::VectorXd& q_inc);

enum class TailMode {
    Sampled,  // MIL2 tail drawn from its own stream
    Zero,     // MIL2 tail normals forced to zero (reduces MIL2 to MIL1)
};

/// Which derived streams a trajectory reads its iterated-integral
/// variables from. `level` separates resolutions on one path; runs that
/// should share series variables (MIL1 and MIL2 at one resolution) use the
/// same level.
struct TrajectoryStreams {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    std::uint32_t level = 0;
};

struct TrajectoryOptions {
    /// Also keep the state after every `record_every` steps (and at t = 0).
    bool record = false;
    std::size_t record_every = 1;
    TailMode tail = TailMode::Sampled;
};

struct TrajectoryResult {
    GalerkinState final_state;
    std::vector<GalerkinState> recorded;
    std::size_t D = 0;
    /// K per step for the increments plus every normal the iterated
    /// integrals consumed.
    std::uint64_t normals_drawn = 0;
    /// Column sums of the consumed standard increments (length K).
    Eigen::VectorXd increment_checksum;
};

/// Runs config.M steps on increments aggregated from `fine_path` (leading
/// K columns). MIL1/MIL2 draw one batch per step from the streams
/// (seed, path, Series|Tail, level, step).
TrajectoryResult run_trajectory(const SchemeConfig& config, const FinePath& fine_path,
                                const TrajectoryStreams& streams,
                                const TrajectoryOptions& options = {});

}  // namespace spdemil
