// spdemil command-line front end.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdemil/costmodel.hpp"
#include "spdemil/errors.hpp"
#include "spdemil/harness.hpp"
#include "spdemil/iterints.hpp"
#include "spdemil/noise.hpp"
#include "spdemil/rng.hpp"
#include "spdemil/stats.hpp"

using namespace spdemil;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

struct ExperimentFlags {
    std::string config;
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    bool full = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, bool with_out) {
    cmd->add_option("--config", f.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--paths", f.paths, "number of Monte Carlo paths")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--threads", f.threads, "worker threads (overrides SPDEMIL_THREADS)");
    cmd->add_flag("--full", f.full, "ladder up to N = 32 with M_ref = 2^16");
    if (with_out) cmd->add_option("--out", f.out, "output directory");
}

ExperimentConfig experiment_config(const ExperimentFlags& f) {
    ExperimentConfig c = f.config.empty() ? default_config(f.full) : load_config(f.config, f.full);
    if (f.paths) c.paths = *f.paths;
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.output = *f.out;
    if (f.threads) c.threads = *f.threads;
    return c;
}

struct ParamFlags {
    double gamma = 1.0;
    double beta = 0.0;
    double alpha = 7.0 / 3.0;
    double rho_A = 2.0;
    double rho_Q = 3.0;
    double c = 1.0;
    std::optional<double> q;
};

void add_param_flags(CLI::App* cmd, ParamFlags& f, bool with_q) {
    cmd->add_option("--gamma", f.gamma, "regularity of the diffusion")->capture_default_str();
    cmd->add_option("--beta", f.beta, "regularity loss of the drift")->capture_default_str();
    cmd->add_option("--alpha", f.alpha, "noise regularity")->capture_default_str();
    cmd->add_option("--rhoA", f.rho_A, "eigenvalue growth of -A")->capture_default_str();
    cmd->add_option("--rhoQ", f.rho_Q, "eigenvalue decay of Q")->capture_default_str();
    cmd->add_option("--c", f.c, "unit cost of a primitive")->capture_default_str();
    if (with_q) cmd->add_option("--q", f.q, "temporal order of the Milstein scheme (default min(2(gamma-beta), gamma))");
}

std::pair<CostParams, CostParams> cost_params(const ParamFlags& f) {
    CostParams mil;
    mil.gamma = f.gamma;
    mil.beta = f.beta;
    mil.alpha = f.alpha;
    mil.rho_A = f.rho_A;
    mil.rho_Q = f.rho_Q;
    mil.c = f.c;
    mil.q = f.q ? *f.q : std::min(2.0 * (f.gamma - f.beta), f.gamma);
    CostParams ees = mil;
    ees.q = std::min(0.5, mil.q);
    mil.validate();
    ees.validate();
    return {mil, ees};
}

void print_report(const SelectionReport& r) {
    std::printf("conditions: %s\n", r.flags.describe().c_str());
    if (r.ees_by_low_order) {
        std::printf("row: none (q_MIL <= 1/2)\n");
    } else {
        std::printf("row: %d\n", r.row);
    }
    std::printf("optimal: %s\n", r.optimal.c_str());
    std::printf("case: %s\n", to_string(r.choice).c_str());
    std::printf("eoc: %.17g\n", r.eoc);
    std::printf("eoc_mil1: %.17g  (dominant cost %s)\n", r.eoc_mil1, r.regime_mil1.c_str());
    std::printf("eoc_mil2: %.17g  (dominant cost %s)\n", r.eoc_mil2, r.regime_mil2.c_str());
    std::printf("eoc_ees: %.17g\n", r.eoc_ees);
    std::printf("exponents: M = c^%.6g, N = c^%.6g, K = c^%.6g\n", r.exponents.e_M, r.exponents.e_N,
                r.exponents.e_K);
}

int run_simulate(const ExperimentFlags& f) {
    const ExperimentConfig config = experiment_config(f);
    const ExperimentResult result = run_experiment(config);
    write_outputs(config, result);
    write_table(std::cout, result.rows);
    std::printf("wrote %s/{rows.csv,plot.csv,manifest.json,timing.json}\n", config.output.c_str());
    return 0;
}

int run_iterint_test(double h, std::size_t K, std::size_t D, const std::string& alg_name, std::size_t samples,
                     std::uint64_t seed) {
    const IterIntAlgorithm alg = parse_iterint_algorithm(alg_name);
    if (alg == IterIntAlgorithm::Oracle) throw InvalidArgument("iterint-test: --alg must be alg1 or alg2");
    if (!(h > 0.0) || K == 0 || D == 0 || samples < 2) throw InvalidArgument("iterint-test: h, K, D > 0 and samples >= 2");
    const QSpectrum spectrum = unit_spectrum();

    // Moments of every entry, against the exact values.
    std::vector<std::vector<double>> entries(K * K, std::vector<double>(samples));
    for (std::size_t s = 0; s < samples; ++s) {
        Stream aux({seed, s, StreamPurpose::Auxiliary, 0, 0});
        std::vector<double> db(K);
        for (double& b : db) b = std::sqrt(h) * aux.normal();
        Stream series({seed, s, StreamPurpose::Series, 0, 0});
        Stream tail({seed, s, StreamPurpose::Tail, 0, 0});
        const IterIntBatch batch = alg == IterIntAlgorithm::Alg1 ? alg1_batch(db, h, D, spectrum, series)
                                                                 : alg2_batch(db, h, D, spectrum, series, tail);
        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t j = 0; j < K; ++j) entries[i * K + j][s] = batch.values(i, j);
        }
    }
    std::printf("i,j,mean,variance,exact_variance,mean_z\n");
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
            const auto& v = entries[i * K + j];
            const double m = mean(v), sd = sample_std(v);
            std::printf("%zu,%zu,%.17g,%.17g,%.17g,%.6f\n", i + 1, j + 1, m, sd * sd, h * h / 2.0,
                        m / (sd / std::sqrt(static_cast<double>(samples))));
        }
    }

    RateStudyConfig rate;
    rate.algorithm = alg;
    rate.h = h;
    rate.K = K;
    rate.samples = samples;
    rate.seed = seed;
    rate.D_values.clear();
    for (std::size_t d : {D / 64, D / 16, D / 4, D}) {
        if (d >= 1 && (rate.D_values.empty() || d > rate.D_values.back())) rate.D_values.push_back(d);
    }
    rate.D_reference = 16 * D;
    std::printf("\nD,rmse\n");
    const RateStudyResult rates = measure_rates(rate);
    for (std::size_t k = 0; k < rates.D_values.size(); ++k) {
        std::printf("%zu,%.17g\n", rates.D_values[k], rates.rmse[k]);
    }
    if (rates.D_values.size() >= 2) std::printf("slope,%.17g\n", rates.slope);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Milstein-type spectral Galerkin schemes for SPDEs with non-commutative noise"};
    app.require_subcommand(1);

    ExperimentFlags sim_flags, table_flags, plot_flags;
    auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo experiment and write CSV/JSON outputs");
    add_experiment_flags(simulate, sim_flags, true);

    ParamFlags select_flags, eoc_flags, res_flags;
    auto* select = app.add_subcommand("select", "walk the decision table and print the optimal scheme");
    add_param_flags(select, select_flags, true);

    auto* eoc_cmd = app.add_subcommand("eoc", "print every effective-order formula");
    add_param_flags(eoc_cmd, eoc_flags, true);

    double budget = 0.0;
    std::string case_name;
    auto* resolution = app.add_subcommand("resolution", "optimal M, N, K for a cost budget");
    add_param_flags(resolution, res_flags, true);
    resolution->add_option("--budget", budget, "total cost budget")->required();
    resolution->add_option("--case", case_name, "effective-order case (default: the selected one)");

    double it_h = 0.1;
    std::size_t it_K = 3, it_D = 256, it_samples = 10000;
    std::string it_alg = "alg1";
    std::uint64_t it_seed = 1;
    auto* iterint = app.add_subcommand("iterint-test", "moment and rate tables of the iterated-integral engines");
    iterint->set_help_flag("--help", "print this help message and exit");
    iterint->add_option("--h", it_h, "step size")->capture_default_str();
    iterint->add_option("--K", it_K, "noise modes")->capture_default_str();
    iterint->add_option("--D", it_D, "series truncation")->capture_default_str();
    iterint->add_option("--alg", it_alg, "alg1 or alg2")->capture_default_str();
    iterint->add_option("--samples", it_samples, "samples")->capture_default_str();
    iterint->add_option("--seed", it_seed, "seed")->capture_default_str();

    bool costs_only = false;
    auto* table = app.add_subcommand("table", "run the experiment and print the error/cost table");
    add_experiment_flags(table, table_flags, false);
    table->add_flag("--costs-only", costs_only, "print the planned resolutions and costs without simulating");

    std::string plot_out;
    auto* plot = app.add_subcommand("plot-data", "run the experiment and emit the (scheme, cost, error) CSV");
    add_experiment_flags(plot, plot_flags, false);
    plot->add_option("--out", plot_out, "write the CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate) return run_simulate(sim_flags);
        if (*select) {
            const auto [mil, ees] = cost_params(select_flags);
            print_report(select_scheme(mil, ees));
            return 0;
        }
        if (*eoc_cmd) {
            const auto [mil, ees] = cost_params(eoc_flags);
            std::printf("q_mil: %.17g\nq_ees: %.17g\n", mil.q, ees.q);
            std::printf("conditions: %s\n", check_conditions(mil).describe().c_str());
            for (EocCase c : {EocCase::Standard, EocCase::MIL1C1, EocCase::MIL2C2, EocCase::MIL2C3a,
                              EocCase::MIL2C3b}) {
                std::printf("%s: %.17g\n", to_string(c).c_str(), eoc(c, mil));
            }
            std::printf("%s: %.17g\n", to_string(EocCase::EES).c_str(), eoc(EocCase::EES, ees));
            const SelectionReport r = select_scheme(mil, ees);
            std::printf("optimal: %s (eoc %.17g)\n", r.optimal.c_str(), r.eoc);
            return 0;
        }
        if (*resolution) {
            const auto [mil, ees] = cost_params(res_flags);
            const EocCase which = case_name.empty() ? select_scheme(mil, ees).choice : parse_eoc_case(case_name);
            const Resolution r = optimal_resolution(which, which == EocCase::EES ? ees : mil, budget);
            std::printf("case: %s\n", to_string(which).c_str());
            std::printf("M = %zu (c^%.6g)\nN = %zu (c^%.6g)\nK = %zu (c^%.6g)\n", r.M, r.e_M, r.N, r.e_N, r.K,
                        r.e_K);
            return 0;
        }
        if (*iterint) return run_iterint_test(it_h, it_K, it_D, it_alg, it_samples, it_seed);
        if (*table) {
            const ExperimentConfig config = experiment_config(table_flags);
            if (costs_only) {
                std::printf("scheme,N,M,K,D,cost_caption,cost_dominant,cost_primitives\n");
                for (const ResolutionSpec& r : plan_rows(config)) {
                    const CostScheme cs = r.scheme == SchemeKind::MIL1   ? CostScheme::MIL1
                                          : r.scheme == SchemeKind::MIL2 ? CostScheme::MIL2
                                                                         : CostScheme::EES;
                    const CostBreakdown b = total_cost(cs, r.M, r.N, r.K, *r.D, config.d_order);
                    std::printf("%s,%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g\n", to_string(r.scheme).c_str(), r.N, r.M,
                                r.K, *r.D, b.caption, b.dominant, b.primitives);
                }
                return 0;
            }
            write_table(std::cout, run_experiment(config).rows);
            return 0;
        }
        if (*plot) {
            const ExperimentResult result = run_experiment(experiment_config(plot_flags));
            if (plot_out.empty()) {
                write_plot_csv(std::cout, result.rows);
            } else {
                std::ofstream out(plot_out);
                if (!out) throw InvalidArgument("cannot write '" + plot_out + "'");
                write_plot_csv(out, result.rows);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        const std::string file = !sim_flags.config.empty()     ? sim_flags.config
                                 : !table_flags.config.empty() ? table_flags.config
                                                               : plot_flags.config;
        std::fprintf(stderr, "%s:%zu:%zu: error: %s\n", file.c_str(), e.line(), e.column(), e.what());
        return kExitConfig;
    } catch (const ResourceLimitExceeded& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitResource;
    } catch (const InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
