#include "spdemil/costmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "spdemil/errors.hpp"

namespace spdemil {

std::string to_string(CostScheme scheme) {
    switch (scheme) {
        case CostScheme::MIL1: return "MIL1";
        case CostScheme::MIL2: return "MIL2";
        case CostScheme::EES: return "EES";
    }
    return "?";
}

void CostParams::validate() const {
    if (!(rho_Q > 1.0)) throw InvalidArgument("rho_Q must exceed 1");
    if (!(q > 0.0)) throw InvalidArgument("q must be positive");
    if (!(c >= 1.0)) throw InvalidArgument("unit cost c must be >= 1");
    if (!(gamma_rho_A() > 0.0) || !(alpha_rho_Q() > 0.0)) {
        throw InvalidArgument("gamma * rho_A and alpha * rho_Q must be positive");
    }
}

CostParams example_cost_params(double epsilon, bool ees) {
    CostParams p;
    p.gamma = 1.0 - epsilon;
    p.beta = 0.0;
    p.alpha = 7.0 / 3.0 - epsilon;
    p.rho_A = 2.0;
    p.rho_Q = 3.0;
    p.q = ees ? 0.5 : std::min(2.0 * (p.gamma - p.beta), p.gamma);
    p.c = 1.0;
    return p;
}

namespace {

/// base^exponent, exact when the exponent is a small non-negative integer
/// and the result fits in 53 bits.
double power(std::size_t base, double exponent) {
    const double rounded = std::round(exponent);
    if (rounded == exponent && rounded >= 0.0 && rounded <= 64.0) {
        std::uint64_t acc = 1;
        bool exact = true;
        for (int e = 0; e < static_cast<int>(rounded); ++e) {
            if (base != 0 && acc > (std::uint64_t{1} << 53) / base) {
                exact = false;
                break;
            }
            acc *= base;
        }
        if (exact) return static_cast<double>(acc);
    }
    return std::pow(static_cast<double>(base), exponent);
}

}  // namespace

CostBreakdown total_cost(CostScheme scheme, std::size_t M, std::size_t N, std::size_t K, std::size_t D,
                         double q, double c) {
    if (M == 0 || N == 0 || K == 0 || D == 0) throw InvalidArgument("total_cost: counts must be >= 1");
    if (!(q > 0.0) || !(c > 0.0)) throw InvalidArgument("total_cost: q and c must be positive");
    const std::uint64_t m = M, n = N, k = K, d = D;
    CostBreakdown out;
    const std::uint64_t linear = m * (k + n + k * n);
    switch (scheme) {
        case CostScheme::MIL1: {
            const std::uint64_t mkn2 = m * k * n * n;
            const double series = static_cast<double>(k) * power(M, 2.0 * q);
            out.dominant = static_cast<double>(mkn2) + series;
            out.caption = out.dominant + static_cast<double>(linear);
            out.functional_evals_per_step = n + k * n + k * n * n;
            out.normal_draws_per_step = k * (1 + 2 * d);
            break;
        }
        case CostScheme::MIL2: {
            const std::uint64_t mkn2 = m * k * n * n;
            const double series = power(M, q + 0.5) * static_cast<double>(k * k) * std::sqrt(static_cast<double>(k));
            out.dominant = static_cast<double>(mkn2 + m * k * k) + series;
            out.caption = out.dominant + static_cast<double>(linear);
            out.functional_evals_per_step = n + k * n + k * n * n;
            out.normal_draws_per_step = k * (1 + 2 * d) + k * (k - 1) / 2;
            break;
        }
        case CostScheme::EES:
            out.dominant = static_cast<double>(m * k * n);
            out.caption = static_cast<double>(m * k * n + m * n + m * k);
            out.functional_evals_per_step = n + k * n;
            out.normal_draws_per_step = k;
            break;
    }
    out.primitives = c * static_cast<double>(m * (out.functional_evals_per_step + out.normal_draws_per_step));
    return out;
}

std::string ConditionFlags::describe() const {
    std::ostringstream s;
    s << "M1C1=" << M1C1 << " M1C2=" << M1C2 << " M2C1a=" << M2C1a << " M2C1b=" << M2C1b
      << " M2C2a=" << M2C2a << " M2C2b=" << M2C2b << " M2C3a=" << M2C3a << " M2C3b=" << M2C3b;
    return s.str();
}

ConditionFlags check_conditions(const CostParams& p) {
    p.validate();
    const double q = p.q, ga = p.gamma_rho_A(), aq = p.alpha_rho_Q(), a = p.alpha, rq = p.rho_Q;
    ConditionFlags f;
    f.M1C1 = ga * (2.0 * q - 1.0) >= 2.0 * q;
    f.M1C2 = ga * (2.0 * q - 1.0) <= 2.0 * q;
    const bool large = rq >= 1.5;
    f.M2C1a = large && ga <= 2.0 * aq && 1.5 * ga * q + (q - 0.5) * aq * ga <= 2.0 * aq * q;
    f.M2C1b = !large && ga <= 2.0 * aq && ga * q + (q - 0.5) * a * ga <= 2.0 * a * q;
    f.M2C2a = large && 2.0 * aq <= ga && q <= aq / (2.0 * aq + 1.0);
    f.M2C2b = !large && 2.0 * aq <= ga && q < aq / (2.0 * aq + 2.0 * (rq - 1.0));
    f.M2C3a = large && 2.0 * aq * q <= 1.5 * ga * q + (q - 0.5) * aq * ga && q >= aq / (2.0 * aq + 1.0);
    f.M2C3b = !large && 2.0 * a * q <= ga * q + (q - 0.5) * a * ga && q >= aq / (2.0 * aq + 2.0 * (rq - 1.0));
    return f;
}

std::string to_string(EocCase c) {
    switch (c) {
        case EocCase::Standard: return "standard";
        case EocCase::MIL1C1: return "mil1c1";
        case EocCase::MIL2C2: return "mil2c2";
        case EocCase::MIL2C3a: return "mil2c3a";
        case EocCase::MIL2C3b: return "mil2c3b";
        case EocCase::EES: return "ees";
    }
    return "?";
}

EocCase parse_eoc_case(const std::string& text) {
    std::string low = text;
    std::transform(low.begin(), low.end(), low.begin(), [](unsigned char ch) { return std::tolower(ch); });
    for (EocCase c : {EocCase::Standard, EocCase::MIL1C1, EocCase::MIL2C2, EocCase::MIL2C3a,
                      EocCase::MIL2C3b, EocCase::EES}) {
        if (to_string(c) == low) return c;
    }
    throw InvalidArgument("unknown effective-order case '" + text + "'");
}

namespace {

Resolution exponents(EocCase which, const CostParams& p) {
    p.validate();
    const double q = p.q, ga = p.gamma_rho_A(), aq = p.alpha_rho_Q();
    Resolution r;
    switch (which) {
        case EocCase::Standard: {
            const double den = (2.0 * aq + ga) * q + aq * ga;
            r.e_M = ga * aq / den;
            r.e_N = aq * q / den;
            r.e_K = ga * q / den;
            break;
        }
        case EocCase::MIL1C1:
            r.e_M = aq / ((2.0 * aq + 1.0) * q);
            r.e_N = aq / ((2.0 * aq + 1.0) * ga);
            r.e_K = 1.0 / (2.0 * aq + 1.0);
            break;
        case EocCase::MIL2C2: {
            const double den = aq + 2.0 * q;
            r.e_M = aq / den;
            r.e_N = aq * q / (ga * den);
            r.e_K = q / den;
            break;
        }
        case EocCase::MIL2C3a:
        case EocCase::MIL2C3b: {
            const double den = aq * (q + 0.5) + (which == EocCase::MIL2C3a ? 2.5 * q : q * (p.rho_Q + 1.0));
            r.e_M = aq / den;
            r.e_N = aq * q / (ga * den);
            r.e_K = q / den;
            break;
        }
        case EocCase::EES: {
            const double den = (aq + ga) * q + aq * ga;
            r.e_M = ga * aq / den;
            r.e_N = aq * q / den;
            r.e_K = ga * q / den;
            break;
        }
    }
    return r;
}

std::size_t ceil_count(double x) {
    // Values that are integers up to round-off stay put.
    const double c = std::ceil(x * (1.0 - 1e-12));
    if (!(c < 9.0e15)) throw InvalidArgument("resolution count overflows");
    return static_cast<std::size_t>(std::max(1.0, c));
}

}  // namespace

double eoc(EocCase which, const CostParams& p) {
    p.validate();
    const double q = p.q, ga = p.gamma_rho_A(), aq = p.alpha_rho_Q();
    switch (which) {
        case EocCase::Standard: return ga * aq * q / ((2.0 * aq + ga) * q + aq * ga);
        case EocCase::MIL1C1: return aq / (2.0 * aq + 1.0);
        case EocCase::MIL2C2: return aq * q / (aq + 2.0 * q);
        case EocCase::MIL2C3a: return aq * q / (aq * (q + 0.5) + 2.5 * q);
        case EocCase::MIL2C3b: return aq * q / (aq * (q + 0.5) + q * (p.rho_Q + 1.0));
        case EocCase::EES: return q * ga * aq / ((aq + ga) * q + ga * aq);
    }
    throw InvalidArgument("unknown effective-order case");
}

Resolution optimal_resolution(EocCase which, const CostParams& p, double budget) {
    if (!(budget > 1.0)) throw InvalidArgument("optimal_resolution: budget must exceed 1");
    Resolution r = exponents(which, p);
    r.M = ceil_count(std::pow(budget, r.e_M));
    r.N = ceil_count(std::pow(budget, r.e_N));
    r.K = ceil_count(std::pow(budget, r.e_K));
    return r;
}

LadderPoint ladder_point(EocCase which, const CostParams& p, std::size_t N) {
    if (N == 0) throw InvalidArgument("ladder_point: N must be >= 1");
    const Resolution r = exponents(which, p);
    const double n = static_cast<double>(N);
    LadderPoint out;
    out.N = N;
    out.M = static_cast<std::size_t>(std::max(1.0, std::round(std::pow(n, r.e_M / r.e_N))));
    out.K = ceil_count(std::pow(n, r.e_K / r.e_N));
    return out;
}

namespace {

struct Row {
    int index;
    const char* scheme;
    EocCase choice;
};

std::string mil1_regime(const ConditionFlags& f) {
    if (f.M1C1 && f.M1C2) return "K M^{2q} ~ M K N^2";
    return f.M1C1 ? "K M^{2q}" : "M K N^2";
}

std::string mil2_regime(const ConditionFlags& f) {
    if (f.M2C1a || f.M2C1b) return "M K N^2";
    if (f.M2C2a || f.M2C2b) return "M K^2";
    if (f.M2C3a) return "M^{q+1/2} K^{5/2}";
    if (f.M2C3b) return "M^{q+1/2} K^{rho_Q+1}";
    return "none";
}

}  // namespace

SelectionReport select_scheme(const CostParams& p_mil, const CostParams& p_ees) {
    p_mil.validate();
    p_ees.validate();
    SelectionReport report;
    report.flags = check_conditions(p_mil);
    const ConditionFlags& f = report.flags;
    const double q = p_mil.q, ga = p_mil.gamma_rho_A(), aq = p_mil.alpha_rho_Q(), a = p_mil.alpha;

    report.eoc_ees = eoc(EocCase::EES, p_ees);
    report.eoc_mil1 = std::max(f.M1C1 ? eoc(EocCase::MIL1C1, p_mil) : 0.0,
                               f.M1C2 ? eoc(EocCase::Standard, p_mil) : 0.0);
    double mil2 = 0.0;
    if (f.M2C1a || f.M2C1b) mil2 = std::max(mil2, eoc(EocCase::Standard, p_mil));
    if (f.M2C2a || f.M2C2b) mil2 = std::max(mil2, eoc(EocCase::MIL2C2, p_mil));
    if (f.M2C3a) mil2 = std::max(mil2, eoc(EocCase::MIL2C3a, p_mil));
    if (f.M2C3b) mil2 = std::max(mil2, eoc(EocCase::MIL2C3b, p_mil));
    report.eoc_mil2 = mil2;
    report.regime_mil1 = mil1_regime(f);
    report.regime_mil2 = mil2_regime(f);

    if (q <= 0.5) {
        report.ees_by_low_order = true;
        report.row = 0;
        report.optimal = "EES";
        report.choice = EocCase::EES;
        report.eoc = report.eoc_ees;
        report.exponents = exponents(EocCase::EES, p_ees);
        return report;
    }

    const bool steep = ga * (2.0 * q - 1.0) > q;
    const bool guards[11] = {
        f.M1C1 && f.M2C1a,
        f.M1C1 && f.M2C1b,
        f.M1C1 && f.M2C3a && (2.0 * aq - 3.0) * q < aq,
        f.M1C1 && f.M2C3a && (2.0 * aq - 3.0) * q >= aq,
        f.M1C1 && f.M2C3b && a * (2.0 * q - 1.0) < 2.0 * q,
        f.M1C1 && f.M2C3b && a * (2.0 * q - 1.0) >= 2.0 * q,
        f.M1C2 && !steep,
        f.M1C2 && f.M2C1a && steep,
        f.M1C2 && f.M2C1b && steep,
        f.M1C2 && f.M2C3a && steep,
        f.M1C2 && f.M2C3b && steep,
    };
    static const Row rows[11] = {
        {1, "MIL2", EocCase::Standard},  {2, "MIL2", EocCase::Standard},
        {3, "MIL1", EocCase::MIL1C1},    {4, "MIL2", EocCase::MIL2C3a},
        {5, "MIL1", EocCase::MIL1C1},    {6, "MIL2", EocCase::MIL2C3b},
        {7, "EES", EocCase::EES},        {8, "MIL1=MIL2", EocCase::Standard},
        {9, "MIL1=MIL2", EocCase::Standard}, {10, "MIL1", EocCase::Standard},
        {11, "MIL1", EocCase::Standard},
    };

    // At a boundary several rows can hold; keep the best EOC and merge the
    // scheme names of the rows that tie with it.
    double best = -1.0;
    std::vector<int> winners;
    for (int r = 0; r < 11; ++r) {
        if (!guards[r]) continue;
        const double value = eoc(rows[r].choice, rows[r].choice == EocCase::EES ? p_ees : p_mil);
        if (value > best + 1e-12) {
            best = value;
            winners.assign(1, r);
        } else if (std::abs(value - best) <= 1e-12) {
            winners.push_back(r);
        }
    }
    if (winners.empty()) {
        throw InvalidArgument("no decision-table row matches: " + f.describe());
    }
    bool has1 = false, has2 = false, has_ees = false;
    for (int r : winners) {
        const std::string s = rows[r].scheme;
        has1 = has1 || s.find("MIL1") != std::string::npos;
        has2 = has2 || s.find("MIL2") != std::string::npos;
        has_ees = has_ees || s == "EES";
    }
    std::string merged = has1 && has2 ? "MIL1=MIL2" : has1 ? "MIL1" : has2 ? "MIL2" : "EES";
    if (has_ees && (has1 || has2)) merged += "=EES";
    int chosen = winners.front();
    for (int r : winners) {
        if (merged == rows[r].scheme) {
            chosen = r;
            break;
        }
    }
    report.row = rows[chosen].index;
    report.optimal = merged;
    report.choice = rows[chosen].choice;
    report.eoc = best;
    report.exponents = exponents(report.choice, report.choice == EocCase::EES ? p_ees : p_mil);
    return report;
}

}  // namespace spdemil
