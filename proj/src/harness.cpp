#include "spdemil/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spdemil/errors.hpp"
#include "spdemil/stats.hpp"

namespace spdemil {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Source positions of keys and values in an already validated JSON text.

class Locator {
public:
    explicit Locator(const std::string& text) : text_(text) {
        skip_ws();
        parse_value("");
    }

    /// 1-based (line, column) of the key of member `pointer`, or of the
    /// value when the pointer names an array element or the root.
    std::pair<std::size_t, std::size_t> key(const std::string& pointer) const {
        auto it = keys_.find(pointer);
        if (it == keys_.end()) return value(pointer);
        return line_col(it->second);
    }

    std::pair<std::size_t, std::size_t> value(const std::string& pointer) const {
        auto it = values_.find(pointer);
        return line_col(it == values_.end() ? 0 : it->second);
    }

    std::pair<std::size_t, std::size_t> line_col(std::size_t offset) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return {line, col};
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string read_string() {
        std::string out;
        ++pos_;  // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\') {
                out += text_[pos_++];
            }
            if (pos_ < text_.size()) out += text_[pos_++];
        }
        ++pos_;  // closing quote
        return out;
    }

    void parse_value(const std::string& pointer) {
        values_[pointer] = pos_;
        if (pos_ >= text_.size()) return;
        const char c = text_[pos_];
        if (c == '{') {
            ++pos_;
            skip_ws();
            if (text_[pos_] == '}') {
                ++pos_;
                return;
            }
            while (pos_ < text_.size()) {
                skip_ws();
                const std::size_t at = pos_;
                const std::string name = read_string();
                const std::string child = pointer + "/" + name;
                keys_[child] = at;
                skip_ws();
                ++pos_;  // ':'
                skip_ws();
                parse_value(child);
                skip_ws();
                if (text_[pos_++] == '}') return;
            }
        } else if (c == '[') {
            ++pos_;
            skip_ws();
            if (text_[pos_] == ']') {
                ++pos_;
                return;
            }
            for (std::size_t index = 0; pos_ < text_.size(); ++index) {
                skip_ws();
                parse_value(pointer + "/" + std::to_string(index));
                skip_ws();
                if (text_[pos_++] == ']') return;
            }
        } else if (c == '"') {
            read_string();
        } else {
            while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
                   !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    std::map<std::string, std::size_t> keys_;
    std::map<std::string, std::size_t> values_;
};

class ConfigReader {
public:
    ConfigReader(const std::string& text, const json& doc) : locator_(text), doc_(doc) {}

    [[noreturn]] void fail_key(const std::string& pointer, const std::string& message) const {
        const auto [line, col] = locator_.key(pointer);
        throw ConfigError(message, line, col);
    }

    [[noreturn]] void fail_value(const std::string& pointer, const std::string& message) const {
        const auto [line, col] = locator_.value(pointer);
        throw ConfigError(message, line, col);
    }

    void only_keys(const std::string& pointer, const json& object, std::set<std::string> allowed) const {
        if (!object.is_object()) fail_value(pointer, "expected an object");
        for (auto it = object.begin(); it != object.end(); ++it) {
            if (!allowed.count(it.key())) fail_key(pointer + "/" + it.key(), "unknown key '" + it.key() + "'");
        }
    }

    std::size_t count(const std::string& pointer, const json& v, std::size_t minimum = 1) const {
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0) ||
            v.get<long long>() < static_cast<long long>(minimum)) {
            fail_value(pointer, "expected an integer >= " + std::to_string(minimum));
        }
        return v.get<std::size_t>();
    }

    double number(const std::string& pointer, const json& v) const {
        if (!v.is_number()) fail_value(pointer, "expected a number");
        return v.get<double>();
    }

    std::string string(const std::string& pointer, const json& v) const {
        if (!v.is_string()) fail_value(pointer, "expected a string");
        return v.get<std::string>();
    }

    SchemeKind scheme(const std::string& pointer, const json& v) const {
        const std::string s = string(pointer, v);
        try {
            return parse_scheme_kind(s);
        } catch (const InvalidArgument&) {
            fail_value(pointer, "unknown scheme '" + s + "' (expected MIL1, MIL2, EES or LIE)");
        }
    }

private:
    Locator locator_;
    const json& doc_;
};

std::size_t lcm_checked(std::size_t a, std::size_t b) {
    const std::size_t l = a / std::gcd(a, b);
    if (b > (std::size_t{1} << 40) / l) throw InvalidArgument("time grids are too large");
    return l * b;
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

CostScheme cost_scheme(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::MIL1: return CostScheme::MIL1;
        case SchemeKind::MIL2: return CostScheme::MIL2;
        default: return CostScheme::EES;
    }
}

bool is_milstein(SchemeKind kind) { return kind == SchemeKind::MIL1 || kind == SchemeKind::MIL2; }

unsigned worker_count(const ExperimentConfig& config) {
    unsigned n = config.threads;
    if (n == 0) {
        if (const char* env = std::getenv("SPDEMIL_THREADS")) n = static_cast<unsigned>(std::atoi(env));
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(config.paths, 1)));
}

}  // namespace

ExperimentConfig default_config(bool full) {
    ExperimentConfig c;
    if (full) {
        c.ladder = {2, 4, 8, 16, 32};
        c.reference = {32, 3, 1u << 16};
        c.paths = 200;
    }
    return c;
}

ExperimentConfig parse_config(const std::string& text, bool full) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        const auto colon = what.find("syntax error");
        throw ConfigError(colon == std::string::npos ? what : what.substr(colon), line, col);
    }
    ConfigReader r(text, doc);
    ExperimentConfig c = default_config(full);
    r.only_keys("", doc,
                {"problem", "schemes", "ladder", "resolutions", "reference", "paths", "batches", "seed",
                 "threads", "error", "d_order", "truncation", "max_normal_draws", "output"});

    if (doc.contains("problem")) {
        const json& p = doc["problem"];
        r.only_keys("/problem", p, {"family", "epsilon", "p"});
        if (p.contains("family")) {
            c.family = r.string("/problem/family", p["family"]);
            if (c.family != "example") r.fail_value("/problem/family", "unknown problem family '" + c.family + "'");
        }
        if (p.contains("epsilon")) {
            c.epsilon = r.number("/problem/epsilon", p["epsilon"]);
            if (!(c.epsilon >= 0.0 && c.epsilon < 0.5)) r.fail_value("/problem/epsilon", "epsilon must lie in [0, 1/2)");
        }
        if (p.contains("p")) {
            c.p = r.number("/problem/p", p["p"]);
            if (!(c.p > 0.0)) r.fail_value("/problem/p", "p must be positive");
        }
    }
    if (doc.contains("schemes")) {
        const json& s = doc["schemes"];
        if (!s.is_array() || s.empty()) r.fail_value("/schemes", "expected a non-empty array of scheme names");
        c.schemes.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            c.schemes.push_back(r.scheme("/schemes/" + std::to_string(i), s[i]));
        }
    }
    if (doc.contains("ladder")) {
        const json& l = doc["ladder"];
        if (!l.is_array() || l.empty()) r.fail_value("/ladder", "expected a non-empty array of N values");
        c.ladder.clear();
        for (std::size_t i = 0; i < l.size(); ++i) c.ladder.push_back(r.count("/ladder/" + std::to_string(i), l[i]));
    }
    if (doc.contains("resolutions")) {
        const json& l = doc["resolutions"];
        if (!l.is_array()) r.fail_value("/resolutions", "expected an array");
        for (std::size_t i = 0; i < l.size(); ++i) {
            const std::string ptr = "/resolutions/" + std::to_string(i);
            const json& e = l[i];
            r.only_keys(ptr, e, {"scheme", "N", "M", "K", "D"});
            for (const char* need : {"scheme", "N", "M", "K"}) {
                if (!e.contains(need)) r.fail_value(ptr, std::string("missing key '") + need + "'");
            }
            ResolutionSpec spec;
            spec.scheme = r.scheme(ptr + "/scheme", e["scheme"]);
            spec.N = r.count(ptr + "/N", e["N"]);
            spec.M = r.count(ptr + "/M", e["M"]);
            spec.K = r.count(ptr + "/K", e["K"]);
            if (e.contains("D")) spec.D = r.count(ptr + "/D", e["D"]);
            c.resolutions.push_back(spec);
        }
    }
    if (doc.contains("reference")) {
        const json& ref = doc["reference"];
        r.only_keys("/reference", ref, {"scheme", "N", "K", "M"});
        if (ref.contains("scheme") && r.scheme("/reference/scheme", ref["scheme"]) != SchemeKind::LIE) {
            r.fail_value("/reference/scheme", "the reference scheme must be LIE");
        }
        if (ref.contains("N")) c.reference.N = r.count("/reference/N", ref["N"]);
        if (ref.contains("K")) c.reference.K = r.count("/reference/K", ref["K"]);
        if (ref.contains("M")) c.reference.M = r.count("/reference/M", ref["M"]);
    }
    if (doc.contains("paths")) c.paths = r.count("/paths", doc["paths"]);
    if (doc.contains("batches")) c.batches = r.count("/batches", doc["batches"]);
    if (doc.contains("seed")) c.seed = r.count("/seed", doc["seed"], 0);
    if (doc.contains("threads")) c.threads = static_cast<unsigned>(r.count("/threads", doc["threads"], 0));
    if (doc.contains("error")) {
        const std::string e = r.string("/error", doc["error"]);
        if (e == "endpoint") {
            c.error = ErrorFunctional::Endpoint;
        } else if (e == "sup-grid") {
            c.error = ErrorFunctional::SupGrid;
        } else {
            r.fail_value("/error", "error must be \"endpoint\" or \"sup-grid\"");
        }
    }
    if (doc.contains("d_order")) {
        c.d_order = r.number("/d_order", doc["d_order"]);
        if (!(c.d_order > 0.0)) r.fail_value("/d_order", "d_order must be positive");
    }
    if (doc.contains("truncation")) {
        const std::string t = r.string("/truncation", doc["truncation"]);
        if (t == "step") {
            c.truncation = TruncationRule::StepBased;
        } else if (t == "eigenvalue") {
            c.truncation = TruncationRule::EigenvalueBased;
        } else {
            r.fail_value("/truncation", "truncation must be \"step\" or \"eigenvalue\"");
        }
    }
    if (doc.contains("max_normal_draws")) {
        c.max_normal_draws = r.number("/max_normal_draws", doc["max_normal_draws"]);
        if (!(c.max_normal_draws > 0.0)) r.fail_value("/max_normal_draws", "must be positive");
    }
    if (doc.contains("output")) c.output = r.string("/output", doc["output"]);
    return c;
}

ExperimentConfig load_config(const std::string& path, bool full) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, 0);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), full);
}

std::vector<ResolutionSpec> plan_rows(const ExperimentConfig& config) {
    const SpdeProblem problem = example_problem(config.epsilon, config.p);
    std::vector<ResolutionSpec> rows;
    if (!config.resolutions.empty()) {
        rows = config.resolutions;
    } else {
        // The ladder follows the optimal relations in the eps -> 0 limit.
        const CostParams mil = example_cost_params(0.0, false);
        const CostParams ees = example_cost_params(0.0, true);
        std::vector<std::size_t> ladder = config.ladder;
        std::sort(ladder.begin(), ladder.end());
        for (std::size_t N : ladder) {
            for (SchemeKind kind : config.schemes) {
                const LadderPoint pt = kind == SchemeKind::MIL1 || kind == SchemeKind::MIL2
                                           ? ladder_point(EocCase::Standard, mil, N)
                                           : ladder_point(EocCase::EES, ees, N);
                rows.push_back({kind, N, pt.M, pt.K, std::nullopt});
            }
        }
    }
    const double alpha = problem.params.alpha;
    for (ResolutionSpec& row : rows) {
        if (row.N == 0 || row.M == 0 || row.K == 0) throw InvalidArgument("resolution counts must be >= 1");
        if (!is_milstein(row.scheme)) {
            row.D = 1;
        } else if (!row.D) {
            const IterIntAlgorithm alg =
                row.scheme == SchemeKind::MIL1 ? IterIntAlgorithm::Alg1 : IterIntAlgorithm::Alg2;
            row.D = choose_D(alg, row.M, row.K, config.d_order, problem.spectrum, config.truncation, alpha);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.N < b.N; });
    return rows;
}

namespace {

struct Grid {
    std::size_t M_fine = 1;
    std::size_t K_max = 1;
};

Grid fine_grid(const ExperimentConfig& config, const std::vector<ResolutionSpec>& rows) {
    Grid g{config.reference.M, config.reference.K};
    for (const ResolutionSpec& r : rows) {
        g.M_fine = lcm_checked(g.M_fine, r.M);
        g.K_max = std::max(g.K_max, r.K);
    }
    if (g.M_fine > (std::size_t{1} << 26)) {
        throw InvalidArgument("the common fine grid has " + std::to_string(g.M_fine) +
                              " steps; choose M values with a smaller least common multiple");
    }
    return g;
}

}  // namespace

double predict_normal_draws(const ExperimentConfig& config) {
    const std::vector<ResolutionSpec> rows = plan_rows(config);
    const Grid grid = fine_grid(config, rows);
    double per_path = static_cast<double>(grid.M_fine) * static_cast<double>(grid.K_max);
    for (const ResolutionSpec& r : rows) {
        const CostBreakdown cost = total_cost(cost_scheme(r.scheme), r.M, r.N, r.K, *r.D, config.d_order);
        per_path += static_cast<double>(r.M) * static_cast<double>(cost.normal_draws_per_step - r.K);
    }
    return per_path * static_cast<double>(config.paths);
}

namespace {

struct PathOutcome {
    std::vector<std::vector<double>> sq;  // per row: endpoint (1 entry) or per grid time
    std::vector<std::uint64_t> normals;
    std::vector<double> seconds;
    bool coupled = true;
};

double squared_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index n = std::max(a.size(), b.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        sum += (x - y) * (x - y);
    }
    return sum;
}

bool checksum_matches(const Eigen::VectorXd& consumed, const Eigen::RowVectorXd& fine_sums) {
    for (Eigen::Index j = 0; j < consumed.size(); ++j) {
        if (std::abs(consumed[j] - fine_sums[j]) > 1e-10 * (1.0 + std::abs(fine_sums[j]))) return false;
    }
    return true;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    if (config.paths == 0 || config.batches == 0) throw InvalidArgument("paths and batches must be >= 1");
    if (config.family != "example") throw InvalidArgument("unknown problem family '" + config.family + "'");
    const auto started = std::chrono::steady_clock::now();
    const std::vector<ResolutionSpec> plan = plan_rows(config);
    if (plan.empty()) throw InvalidArgument("the experiment has no rows");
    const Grid grid = fine_grid(config, plan);
    const double predicted = predict_normal_draws(config);
    if (predicted > config.max_normal_draws) {
        std::ostringstream msg;
        msg << "predicted " << predicted << " normal draws exceed the ceiling of " << config.max_normal_draws;
        throw ResourceLimitExceeded(msg.str());
    }

    const SpdeProblem problem = example_problem(config.epsilon, config.p);
    const SchemeConfig reference{SchemeKind::LIE, config.reference.N, config.reference.K, config.reference.M,
                                 1, &problem};
    reference.validate();

    // Runs at the same (N, M, K) share a stream level, so MIL1 and MIL2
    // there see the same series variables.
    std::vector<std::uint32_t> levels(plan.size());
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::uint32_t> level_of;
    std::vector<SchemeConfig> configs;
    for (std::size_t r = 0; r < plan.size(); ++r) {
        const auto key = std::make_tuple(plan[r].N, plan[r].M, plan[r].K);
        auto it = level_of.find(key);
        if (it == level_of.end()) {
            it = level_of.emplace(key, static_cast<std::uint32_t>(level_of.size() + 1)).first;
        }
        levels[r] = it->second;
        SchemeConfig sc{plan[r].scheme, plan[r].N, plan[r].K, plan[r].M, *plan[r].D, &problem};
        sc.validate();
        configs.push_back(sc);
    }
    const bool sup = config.error == ErrorFunctional::SupGrid;

    std::vector<PathOutcome> outcomes(config.paths);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t path = next.fetch_add(1);
            if (path >= config.paths) return;
            PathOutcome& out = outcomes[path];
            Stream increments({config.seed, path, StreamPurpose::Increments, 0, 0});
            const FinePath fine = sample_fine_path(increments, grid.M_fine, grid.K_max, problem.T);
            const Eigen::RowVectorXd fine_sums = fine.increments.colwise().sum();

            TrajectoryOptions ref_options;
            ref_options.record = sup;
            const TrajectoryResult ref = run_trajectory(reference, fine, {config.seed, path, 0}, ref_options);
            out.coupled = checksum_matches(ref.increment_checksum, fine_sums);

            for (std::size_t r = 0; r < plan.size(); ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                const std::size_t g = std::gcd(plan[r].M, reference.M);
                TrajectoryOptions options;
                options.record = sup;
                options.record_every = plan[r].M / g;
                const TrajectoryResult res = run_trajectory(configs[r], fine, {config.seed, path, levels[r]}, options);
                out.coupled = out.coupled && checksum_matches(res.increment_checksum, fine_sums);
                out.normals.push_back(res.normals_drawn);
                if (sup) {
                    std::vector<double> sq(g + 1);
                    const std::size_t stride = reference.M / g;
                    for (std::size_t t = 0; t <= g; ++t) {
                        sq[t] = squared_distance(ref.recorded[t * stride].coeffs, res.recorded[t].coeffs);
                    }
                    out.sq.push_back(std::move(sq));
                } else {
                    out.sq.push_back({squared_distance(ref.final_state.coeffs, res.final_state.coeffs)});
                }
                out.seconds.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
        }
    };
    const unsigned n_workers = worker_count(config);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ExperimentResult result;
    result.M_fine = grid.M_fine;
    result.K_max = grid.K_max;
    result.paths = config.paths;
    result.batches = std::min(config.batches, config.paths);
    result.predicted_normals = predicted;
    result.coupling_verified =
        std::all_of(outcomes.begin(), outcomes.end(), [](const PathOutcome& o) { return o.coupled; });
    if (!result.coupling_verified) throw std::logic_error("consumed increments differ from the fine path");

    const std::size_t P = config.paths, B = result.batches;
    for (std::size_t r = 0; r < plan.size(); ++r) {
        ExperimentRow row;
        row.scheme = plan[r].scheme;
        row.N = plan[r].N;
        row.M = plan[r].M;
        row.K = plan[r].K;
        row.D = is_milstein(row.scheme) ? *plan[r].D : 0;
        row.level = levels[r];
        const CostBreakdown cost =
            total_cost(cost_scheme(row.scheme), row.M, row.N, row.K, *plan[r].D, config.d_order);
        row.cost_caption = cost.caption;
        row.cost_primitives = cost.primitives;
        row.normals_per_step = outcomes[0].normals[r] / row.M;
        for (const PathOutcome& o : outcomes) {
            if (o.normals[r] != cost.normal_draws_per_step * row.M) {
                throw std::logic_error("normal-draw count differs from the per-step tally");
            }
            row.wall_time += o.seconds[r];
        }

        const std::size_t times = outcomes[0].sq[r].size();
        auto rms_over = [&](std::size_t begin, std::size_t end) {
            double worst = 0.0;
            std::vector<double> column(end - begin);
            for (std::size_t t = 0; t < times; ++t) {
                for (std::size_t p = begin; p < end; ++p) column[p - begin] = outcomes[p].sq[r][t];
                worst = std::max(worst, mean(column));
            }
            return std::sqrt(worst);
        };
        row.error = rms_over(0, P);
        std::vector<double> batch_rms;
        for (std::size_t b = 0; b < B; ++b) batch_rms.push_back(rms_over(b * P / B, (b + 1) * P / B));
        row.std = sample_std(batch_rms);
        std::vector<double> per_path(P);
        for (std::size_t p = 0; p < P; ++p) {
            per_path[p] = std::sqrt(*std::max_element(outcomes[p].sq[r].begin(), outcomes[p].sq[r].end()));
        }
        row.std_path = sample_std(per_path);
        result.rows.push_back(row);
    }
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::vector<ExperimentRow> rows_of(const std::vector<ExperimentRow>& rows, SchemeKind scheme) {
    std::vector<ExperimentRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
                 [scheme](const ExperimentRow& r) { return r.scheme == scheme; });
    return out;
}

EocFit fit_eoc(const std::vector<ExperimentRow>& rows) {
    if (rows.size() < 2) throw InvalidArgument("fit_eoc: need at least two rows");
    std::vector<ExperimentRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.cost_caption < b.cost_caption; });
    std::vector<double> cost, error;
    for (const ExperimentRow& r : sorted) {
        cost.push_back(r.cost_caption);
        error.push_back(r.error);
    }
    EocFit fit;
    fit.slope = fit_loglog_slope(cost, error);
    const std::size_t n = cost.size();
    const double c[2] = {cost[n - 2], cost[n - 1]}, e[2] = {error[n - 2], error[n - 1]};
    fit.finest_slope = fit_loglog_slope(c, e);
    return fit;
}

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    out << "scheme,N,M,K,D,cost_caption,cost_primitives,error,std\n";
    for (const ExperimentRow& r : rows) {
        out << to_string(r.scheme) << ',' << r.N << ',' << r.M << ',' << r.K << ',' << r.D << ','
            << format_double(r.cost_caption) << ',' << format_double(r.cost_primitives) << ','
            << format_double(r.error) << ',' << format_double(r.std) << '\n';
    }
}

void write_plot_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    out << "scheme,cost,error\n";
    for (const ExperimentRow& r : rows) {
        out << to_string(r.scheme) << ',' << format_double(r.cost_caption) << ',' << format_double(r.error) << '\n';
    }
}

void write_manifest(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result) {
    ordered_json m;
    m["tool"] = "spdemil";
    m["version"] = "1.0.0";
    m["seed"] = config.seed;
    m["stream_derivation"] =
        "philox4x32-10, key = seed, counter = (block, step, path, purpose << 24 | level); "
        "increments: purpose 1 level 0 step 0; series: purpose 2; tail: purpose 3";
    m["problem"] = {{"family", config.family}, {"epsilon", config.epsilon}, {"p", config.p}};
    m["reference"] = {{"scheme", "LIE"}, {"N", config.reference.N}, {"K", config.reference.K},
                      {"M", config.reference.M}};
    m["paths"] = result.paths;
    m["batches"] = result.batches;
    m["error_functional"] = config.error == ErrorFunctional::Endpoint ? "endpoint" : "sup-grid";
    m["d_order"] = config.d_order;
    m["truncation"] = config.truncation == TruncationRule::StepBased ? "step" : "eigenvalue";
    m["M_fine"] = result.M_fine;
    m["K_max"] = result.K_max;
    m["predicted_normal_draws"] = result.predicted_normals;
    m["coupling_verified"] = result.coupling_verified;
    ordered_json rows = ordered_json::array();
    for (const ExperimentRow& r : result.rows) {
        rows.push_back({{"scheme", to_string(r.scheme)},
                        {"N", r.N},
                        {"M", r.M},
                        {"K", r.K},
                        {"D", r.D},
                        {"stream_level", r.level},
                        {"cost_caption", r.cost_caption},
                        {"cost_primitives", r.cost_primitives},
                        {"normals_per_step", r.normals_per_step},
                        {"error", r.error},
                        {"std_batch_rms", r.std},
                        {"std_per_path", r.std_path}});
    }
    m["rows"] = rows;
    ordered_json slopes = ordered_json::object();
    for (SchemeKind kind : {SchemeKind::MIL1, SchemeKind::MIL2, SchemeKind::EES, SchemeKind::LIE}) {
        const auto subset = rows_of(result.rows, kind);
        if (subset.size() < 2) continue;
        try {
            const EocFit fit = fit_eoc(subset);
            slopes[to_string(kind)] = {{"least_squares", fit.slope}, {"finest_two", fit.finest_slope}};
        } catch (const InvalidArgument&) {
        }
    }
    m["eoc_fit"] = slopes;
    m["eoc_predicted"] = {{"MIL", eoc(EocCase::Standard, example_cost_params(0.0, false))},
                          {"EES", eoc(EocCase::EES, example_cost_params(0.0, true))}};
    out << m.dump(2) << '\n';
}

void write_timing(std::ostream& out, const ExperimentResult& result) {
    ordered_json t;
    t["total_seconds"] = result.wall_time;
    ordered_json rows = ordered_json::array();
    for (const ExperimentRow& r : result.rows) {
        rows.push_back({{"scheme", to_string(r.scheme)}, {"N", r.N}, {"seconds", r.wall_time}});
    }
    t["rows"] = rows;
    out << t.dump(2) << '\n';
}

void write_table(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    std::map<std::size_t, std::map<SchemeKind, ExperimentRow>> by_n;
    for (const ExperimentRow& r : rows) by_n[r.N][r.scheme] = r;
    char line[512];
    std::snprintf(line, sizeof line, "%4s %8s %3s | %12s %10s %10s | %12s %10s %10s | %9s %12s %10s %10s\n", "N",
                  "M", "K", "MIL1 cost", "error", "std", "MIL2 cost", "error", "std", "EES M", "cost", "error",
                  "std");
    out << line;
    for (const auto& [n, schemes] : by_n) {
        auto cell = [&](SchemeKind k, double ExperimentRow::*field) {
            auto it = schemes.find(k);
            return it == schemes.end() ? std::nan("") : it->second.*field;
        };
        std::size_t M = 0, K = 0, Mees = 0;
        for (SchemeKind k : {SchemeKind::MIL1, SchemeKind::MIL2}) {
            if (auto it = schemes.find(k); it != schemes.end()) {
                M = it->second.M;
                K = it->second.K;
            }
        }
        if (auto it = schemes.find(SchemeKind::EES); it != schemes.end()) {
            Mees = it->second.M;
            if (K == 0) K = it->second.K;
        }
        std::snprintf(line, sizeof line,
                      "%4zu %8zu %3zu | %12.0f %10.3e %10.3e | %12.0f %10.3e %10.3e | %9zu %12.0f %10.3e %10.3e\n", n,
                      M, K, cell(SchemeKind::MIL1, &ExperimentRow::cost_caption),
                      cell(SchemeKind::MIL1, &ExperimentRow::error), cell(SchemeKind::MIL1, &ExperimentRow::std),
                      cell(SchemeKind::MIL2, &ExperimentRow::cost_caption),
                      cell(SchemeKind::MIL2, &ExperimentRow::error), cell(SchemeKind::MIL2, &ExperimentRow::std),
                      Mees, cell(SchemeKind::EES, &ExperimentRow::cost_caption),
                      cell(SchemeKind::EES, &ExperimentRow::error), cell(SchemeKind::EES, &ExperimentRow::std));
        out << line;
    }
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output);
    const fs::path dir(config.output);
    std::ofstream rows(dir / "rows.csv"), plot(dir / "plot.csv"), manifest(dir / "manifest.json"),
        timing(dir / "timing.json");
    if (!rows || !plot || !manifest || !timing) {
        throw InvalidArgument("cannot write outputs into '" + config.output + "'");
    }
    write_rows_csv(rows, result.rows);
    write_plot_csv(plot, result.rows);
    write_manifest(manifest, config, result);
    write_timing(timing, result);
}

}  // namespace spdemil
