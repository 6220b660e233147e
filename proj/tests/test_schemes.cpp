#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spdemil/errors.hpp"
#include "spdemil/schemes.hpp"
#include "spdemil/stats.hpp"

using namespace spdemil;

namespace {

IterIntBatch zero_batch(std::size_t K, double h) {
    IterIntBatch b;
    b.values = Eigen::MatrixXd::Zero(K, K);
    b.h = h;
    return b;
}

FinePath fine_path(std::uint64_t path, std::size_t M, std::size_t K) {
    Stream s({77, path, StreamPurpose::Increments, 0, 0});
    return sample_fine_path(s, M, K, 1.0);
}

SpdeProblem silent_problem(double slope) {
    SpdeProblem p = example_problem();
    p.drift = affine_drift([](std::size_t) { return 0.0; }, slope);
    p.diffusion = std::make_shared<ConstantFamily>([](std::size_t, std::size_t) { return 0.0; });
    return p;
}

}  // namespace

TEST_CASE("scheme names") {
    for (SchemeKind k : {SchemeKind::MIL1, SchemeKind::MIL2, SchemeKind::EES, SchemeKind::LIE}) {
        CHECK(parse_scheme_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_scheme_kind("RK4"), InvalidArgument);
}

TEST_CASE("config validation") {
    const SpdeProblem p = example_problem();
    CHECK_NOTHROW(SchemeConfig{SchemeKind::MIL1, 4, 2, 16, 3, &p}.validate());
    CHECK_THROWS_AS((SchemeConfig{SchemeKind::MIL1, 4, 2, 16, 0, &p}.validate()), InvalidArgument);
    CHECK_THROWS_AS((SchemeConfig{SchemeKind::EES, 4, 2, 0, 1, &p}.validate()), InvalidArgument);
    CHECK_THROWS_AS((SchemeConfig{SchemeKind::EES, 4, 2, 4, 1, nullptr}.validate()), InvalidArgument);
    CHECK(SchemeConfig{SchemeKind::EES, 4, 2, 8, 1, &p}.h() == 0.125);
}

TEST_CASE("first step of the example") {
    const SpdeProblem p = example_problem();
    const SchemeConfig mil{SchemeKind::MIL1, 4, 2, 16, 4, &p};
    const double h = mil.h();
    const GalerkinState zero{Eigen::VectorXd::Zero(4), 0.0};
    const Eigen::VectorXd q = Eigen::Vector2d(0.3, -0.2);
    IterIntBatch iter = zero_batch(2, h);
    iter.values << 0.01, 0.02, -0.03, 0.04;
    const GalerkinState s = step_mil(mil, zero, q, iter);
    const double lambda1 = std::numbers::pi * std::numbers::pi / 100.0;
    CHECK(s.coeffs[0] == doctest::Approx(std::exp(-lambda1 * h) * h * 2.0 * std::sqrt(2.0) / std::numbers::pi).epsilon(1e-14));
    CHECK(s.coeffs[1] == 0.0);
    CHECK(s.time == h);
    const GalerkinState e = step_ees(mil, zero, q);
    CHECK(e.coeffs == s.coeffs);

    const GalerkinState l = step_lie(mil, zero, q);
    const Eigen::VectorXd res = resolvent_factors(p.basis, 4, h);
    for (int i = 0; i < 4; ++i) CHECK(l.coeffs[i] == doctest::Approx(res[i] * h * constant_one_coefficient(i + 1)).epsilon(1e-15).scale(1.0));
}

TEST_CASE("EES is Milstein without the correction") {
    const SpdeProblem p = example_problem();
    const SchemeConfig c{SchemeKind::MIL2, 5, 3, 8, 2, &p};
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 10; ++t) {
        GalerkinState y{Eigen::VectorXd(5), 0.0};
        for (int i = 0; i < 5; ++i) y.coeffs[i] = nd(gen);
        Eigen::VectorXd q(3);
        for (int i = 0; i < 3; ++i) q[i] = nd(gen);
        CHECK(step_ees(c, y, q).coeffs == step_mil(c, y, q, zero_batch(3, c.h())).coeffs);
    }
    GalerkinState bad{Eigen::VectorXd::Zero(4), 0.0};
    CHECK_THROWS_AS(step_ees(c, bad, Eigen::VectorXd::Zero(3)), InvalidArgument);
    GalerkinState good{Eigen::VectorXd::Zero(5), 0.0};
    CHECK_THROWS_AS(step_lie(c, good, Eigen::VectorXd::Zero(2)), InvalidArgument);
    CHECK_THROWS_AS(step_mil(c, good, Eigen::VectorXd::Zero(3), zero_batch(2, c.h())), InvalidArgument);
}

TEST_CASE("noiseless linear problems") {
    // F = 0, B = 0: pure semigroup decay.
    const SpdeProblem silent = silent_problem(0.0);
    const SchemeConfig c{SchemeKind::MIL1, 3, 2, 4, 1, &silent};
    GalerkinState y{Eigen::Vector3d(1.0, -2.0, 0.5), 0.0};
    const GalerkinState s = step_mil(c, y, Eigen::Vector2d(0.4, 0.1), zero_batch(2, c.h()));
    CHECK(s.coeffs == y.coeffs.cwiseProduct(semigroup_factors(silent.basis, 3, c.h())));

    // LIE on one mode: (1 + lambda h)^{-M} -> exp(-lambda T).
    SpdeProblem one = silent;
    one.initial = [](std::size_t N) { return Eigen::VectorXd::Ones(N); };
    const double lambda1 = std::numbers::pi * std::numbers::pi / 100.0;
    double prev_gap = 1.0;
    for (std::size_t M : {4, 16, 64, 256}) {
        const SchemeConfig lie{SchemeKind::LIE, 1, 1, M, 1, &one};
        const TrajectoryResult r = run_trajectory(lie, fine_path(0, 256, 1), {1, 0, 0});
        CHECK(r.final_state.coeffs[0] == doctest::Approx(std::pow(1.0 + lambda1 / M, -double(M))).epsilon(1e-13));
        const double gap = std::abs(r.final_state.coeffs[0] - std::exp(-lambda1));
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }

    // Contractive: with F = -y and no noise every coefficient shrinks in magnitude.
    const SpdeProblem damped = silent_problem(-1.0);
    SpdeProblem start = damped;
    start.initial = [](std::size_t N) { return Eigen::VectorXd::LinSpaced(N, -1.0, 2.0); };
    for (SchemeKind k : {SchemeKind::MIL1, SchemeKind::MIL2, SchemeKind::EES, SchemeKind::LIE}) {
        const SchemeConfig cfg{k, 6, 2, 16, 2, &start};
        TrajectoryOptions opt;
        opt.record = true;
        const TrajectoryResult r = run_trajectory(cfg, fine_path(1, 16, 2), {1, 1, 1}, opt);
        REQUIRE(r.recorded.size() == 17);
        for (std::size_t m = 1; m < r.recorded.size(); ++m) {
            for (int i = 0; i < 6; ++i) {
                CHECK(std::abs(r.recorded[m].coeffs[i]) <= std::abs(r.recorded[m - 1].coeffs[i]));
            }
        }
    }
}

TEST_CASE("LIE and EES factors differ at second order") {
    const SpdeProblem p = example_problem();
    for (int i = 1; i <= 8; ++i) {
        double prev = 0.0;
        for (double h : {1e-1, 1e-2, 1e-3}) {
            const double d = std::abs(semigroup_factors(p.basis, 8, h)[i - 1] - resolvent_factors(p.basis, 8, h)[i - 1]);
            const double lambda = p.basis.lambda(i);
            CHECK(d <= lambda * lambda * h * h);
            if (prev > 0.0) CHECK(d / prev == doctest::Approx(0.01).epsilon(0.2));
            prev = d;
        }
    }
}

TEST_CASE("single step spread shrinks like sqrt(h)") {
    const SpdeProblem p = example_problem();
    GalerkinState y{Eigen::VectorXd::Constant(4, 0.5), 0.0};
    std::mt19937_64 gen(2);
    std::normal_distribution<double> nd;
    std::vector<double> rms;
    const std::vector<double> steps{1e-4, 1e-6, 1e-8};
    for (double h : steps) {
        const SchemeConfig c{SchemeKind::EES, 4, 3, static_cast<std::size_t>(std::llround(1.0 / h)), 1, &p};
        double sum = 0.0;
        const int n = 4000;
        for (int s = 0; s < n; ++s) {
            Eigen::VectorXd q(3);
            for (int j = 0; j < 3; ++j) q[j] = std::sqrt(p.spectrum.eta(j + 1) * h) * nd(gen);
            sum += (step_ees(c, y, q).coeffs - y.coeffs).squaredNorm();
        }
        rms.push_back(std::sqrt(sum / n));
    }
    const double slope = fit_loglog_slope(steps, rms);
    CHECK(slope == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("trajectories") {
    const SpdeProblem p = example_problem();
    const FinePath fp = fine_path(3, 64, 4);

    SUBCASE("M = 1 is one step") {
        SpdeProblem q = p;
        q.initial = [](std::size_t N) { return Eigen::VectorXd::Constant(N, 0.3); };
        const SchemeConfig c{SchemeKind::MIL1, 3, 2, 1, 5, &q};
        const TrajectoryResult r = run_trajectory(c, fp, {9, 3, 2});
        const RowMatrix inc = aggregate(fp, 1);
        const Eigen::VectorXd qi = q_increment(std::span<const double>(inc.row(0).data(), 2), q.spectrum, 2);
        Stream series({9, 3, StreamPurpose::Series, 2, 0});
        const IterIntBatch batch = alg1_batch(std::span<const double>(inc.row(0).data(), 2), 1.0, 5, q.spectrum, series);
        const GalerkinState one = step_mil(c, {q.initial(3), 0.0}, qi, batch);
        CHECK(r.final_state.coeffs == one.coeffs);
        CHECK(r.final_state.time == doctest::Approx(1.0));
    }

    SUBCASE("draw counts per step") {
        for (std::size_t D : {1, 4, 9}) {
            for (std::size_t K : {1, 2, 4}) {
                const SchemeConfig m1{SchemeKind::MIL1, 4, K, 16, D, &p};
                const SchemeConfig m2{SchemeKind::MIL2, 4, K, 16, D, &p};
                const SchemeConfig ee{SchemeKind::EES, 4, K, 16, D, &p};
                CHECK(run_trajectory(m1, fp, {1, 0, 1}).normals_drawn == 16 * K * (1 + 2 * D));
                CHECK(run_trajectory(m2, fp, {1, 0, 1}).normals_drawn == 16 * (K * (1 + 2 * D) + K * (K - 1) / 2));
                CHECK(run_trajectory(ee, fp, {1, 0, 1}).normals_drawn == 16 * K);
                CHECK(run_trajectory(m1, fp, {1, 0, 1}).D == D);
            }
        }
    }

    SUBCASE("zero tail reduces MIL2 to MIL1") {
        SpdeProblem q = p;
        q.initial = [](std::size_t N) { return Eigen::VectorXd::Constant(N, 0.2); };
        TrajectoryOptions zero;
        zero.tail = TailMode::Zero;
        const SchemeConfig m1{SchemeKind::MIL1, 5, 3, 32, 6, &q};
        const SchemeConfig m2{SchemeKind::MIL2, 5, 3, 32, 6, &q};
        const auto a = run_trajectory(m1, fp, {4, 3, 7});
        const auto b = run_trajectory(m2, fp, {4, 3, 7}, zero);
        const auto c = run_trajectory(m2, fp, {4, 3, 7});
        CHECK(a.final_state.coeffs == b.final_state.coeffs);
        CHECK(a.final_state.coeffs != c.final_state.coeffs);
    }

    SUBCASE("coupling checksum is independent of D and M") {
        const Eigen::RowVectorXd sums = fp.increments.colwise().sum();
        for (SchemeKind k : {SchemeKind::MIL1, SchemeKind::MIL2, SchemeKind::EES, SchemeKind::LIE}) {
            for (std::size_t M : {1, 8, 64}) {
                const SchemeConfig c{k, 3, 3, M, 1 + M % 5, &p};
                const auto r = run_trajectory(c, fp, {1, 0, 2});
                REQUIRE(r.increment_checksum.size() == 3);
                for (int j = 0; j < 3; ++j) CHECK(r.increment_checksum[j] == doctest::Approx(sums[j]).epsilon(1e-12));
            }
        }
    }

    SUBCASE("recording and errors") {
        const SchemeConfig c{SchemeKind::EES, 3, 2, 16, 1, &p};
        TrajectoryOptions opt;
        opt.record = true;
        opt.record_every = 4;
        const auto r = run_trajectory(c, fp, {1, 0, 0}, opt);
        REQUIRE(r.recorded.size() == 5);
        CHECK(r.recorded.back().coeffs == r.final_state.coeffs);
        CHECK(r.recorded[2].time == doctest::Approx(0.5));

        CHECK_THROWS_AS(run_trajectory({SchemeKind::EES, 3, 5, 16, 1, &p}, fp, {1, 0, 0}), InvalidArgument);
        CHECK_THROWS_AS(run_trajectory({SchemeKind::EES, 3, 2, 24, 1, &p}, fp, {1, 0, 0}), InvalidArgument);
        opt.record_every = 0;
        CHECK_THROWS_AS(run_trajectory(c, fp, {1, 0, 0}, opt), InvalidArgument);
    }
}
