#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace spdemil {

enum class CostScheme { MIL1, MIL2, EES };

std::string to_string(CostScheme scheme);

struct CostParams {
    double gamma = 1.0;
    double beta = 0.0;
    double alpha = 1.0;
    double rho_A = 1.0;
    double rho_Q = 2.0;
    double q = 1.0;  // temporal order of the scheme under study
    double c = 1.0;  // unit cost of one functional evaluation or one normal draw

    double gamma_rho_A() const { return gamma * rho_A; }
    double alpha_rho_Q() const { return alpha * rho_Q; }
    /// Throws InvalidArgument unless rho_Q > 1, q > 0 and c >= 1.
    void validate() const;
};

/// Parameters of the shipped example (rho_A = 2, rho_Q = 3, beta = 0,
/// gamma = 1 - eps, alpha = 7/3 - eps) with q = q_MIL = 1 - eps or
/// q = q_EES = 1/2.
CostParams example_cost_params(double epsilon, bool ees);

struct CostBreakdown {
    /// Closed-form cost: MIL1 MKN^2 + KM^{2q} + M(K+N+KN),
    /// MIL2 MKN^2 + M^{q+1/2}K^{5/2} + MK^2 + M(K+N+KN), EES MKN + MN + MK.
    double caption = 0.0;
    /// The same without the lowest-order addends: MIL1 MKN^2 + KM^{2q},
    /// MIL2 MKN^2 + M^{q+1/2}K^{5/2} + MK^2, EES MKN.
    double dominant = 0.0;
    /// Per step: N + KN functional evaluations (+ KN^2 for MIL).
    std::uint64_t functional_evals_per_step = 0;
    /// Per step: K normals (+ 2KD for MIL, + K(K-1)/2 more for MIL2).
    std::uint64_t normal_draws_per_step = 0;
    /// c * M * (functional evaluations + normal draws).
    double primitives = 0.0;
};

CostBreakdown total_cost(CostScheme scheme, std::size_t M, std::size_t N, std::size_t K, std::size_t D,
                         double q, double c = 1.0);

struct ConditionFlags {
    bool M1C1 = false, M1C2 = false;
    bool M2C1a = false, M2C1b = false;
    bool M2C2a = false, M2C2b = false;
    bool M2C3a = false, M2C3b = false;

    std::string describe() const;
};

ConditionFlags check_conditions(const CostParams& p);

/// Named effective-order formulas.
enum class EocCase {
    Standard,  // MIL1 under M1C2, MIL2 under M2C1a/b
    MIL1C1,    // MIL1 under M1C1
    MIL2C2,    // MIL2 under M2C2a/b
    MIL2C3a,
    MIL2C3b,
    EES,       // exponential Euler with p.q = q_EES
};

std::string to_string(EocCase c);
EocCase parse_eoc_case(const std::string& text);

double eoc(EocCase which, const CostParams& p);

struct Resolution {
    double e_M = 0.0, e_N = 0.0, e_K = 0.0;  // exponents of the budget
    std::size_t M = 1, N = 1, K = 1;         // ceil(budget^e)
};

Resolution optimal_resolution(EocCase which, const CostParams& p, double budget);

/// M and K tied to a given N along the optimal path: M = N^{e_M/e_N}
/// (rounded to the nearest integer), K = ceil(N^{e_K/e_N}).
struct LadderPoint {
    std::size_t N = 1, M = 1, K = 1;
};
LadderPoint ladder_point(EocCase which, const CostParams& p, std::size_t N);

struct SelectionReport {
    ConditionFlags flags;
    bool ees_by_low_order = false;  // q_MIL <= 1/2 short-circuit
    int row = 0;                    // matched decision-table row (1-based), 0 for the short-circuit
    std::string optimal;            // "MIL1", "MIL2", "MIL1=MIL2" or "EES"
    EocCase choice = EocCase::Standard;
    double eoc = 0.0;
    double eoc_mil1 = 0.0;  // best admissible MIL1 case
    double eoc_mil2 = 0.0;  // best admissible MIL2 case
    double eoc_ees = 0.0;
    std::string regime_mil1;  // dominating cost term
    std::string regime_mil2;
    Resolution exponents;  // of the chosen case at budget 1 (counts unused)
};

/// Walks the decision table in order. Throws InvalidArgument listing the
/// flags when no row applies.
SelectionReport select_scheme(const CostParams& p_mil, const CostParams& p_ees);

}  // namespace spdemil
