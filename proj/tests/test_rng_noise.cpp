#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "spdemil/errors.hpp"
#include "spdemil/noise.hpp"
#include "spdemil/rng.hpp"
#include "spdemil/stats.hpp"

using namespace spdemil;

TEST_CASE("philox known answers") {
    // Known-answer vectors published with the Random123 library.
    using W = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          W{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          W{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are deterministic and disjoint") {
    const StreamKey key{42, 7, StreamPurpose::Series, 3, 11};
    Stream a(key), b(key);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());

    std::set<std::uint64_t> firsts;
    for (std::uint64_t path = 0; path < 4; ++path) {
        for (auto purpose : {StreamPurpose::Increments, StreamPurpose::Series, StreamPurpose::Tail}) {
            for (std::uint32_t level = 0; level < 3; ++level) {
                for (std::uint64_t step = 0; step < 3; ++step) {
                    Stream s({42, path, purpose, level, step});
                    firsts.insert(s());
                }
            }
        }
    }
    CHECK(firsts.size() == 4 * 3 * 3 * 3);

    Stream c({42, 0, StreamPurpose::Auxiliary, 0, 0});
    for (int i = 0; i < 5; ++i) c.normal();
    CHECK(c.normals_drawn() == 5);

    CHECK_THROWS_AS(Stream({1, 0, StreamPurpose::Series, 1u << 24, 0}), InvalidArgument);
    CHECK_THROWS_AS(Stream({1, std::uint64_t{1} << 32, StreamPurpose::Series, 0, 0}), InvalidArgument);
}

TEST_CASE("standard normal moments") {
    Stream s({9, 0, StreamPurpose::Auxiliary, 0, 0});
    const std::size_t n = 200000;
    std::vector<double> x(n);
    for (double& v : x) v = s.normal();
    const double m = mean(x), sd = sample_std(x);
    CHECK(std::abs(m) < 4.0 / std::sqrt(static_cast<double>(n)));
    // Var of the sample variance of N(0,1) is 2 / (n - 1).
    CHECK(std::abs(sd * sd - 1.0) < 4.0 * std::sqrt(2.0 / (n - 1)));
    std::size_t within = 0;
    for (double v : x) within += std::abs(v) < 1.0;
    const double frac = static_cast<double>(within) / n;
    const double p = std::erf(1.0 / std::sqrt(2.0));
    CHECK(std::abs(frac - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("fine path moments and determinism") {
    const std::size_t M = 1000, K = 100;
    const double T = 2.0;
    Stream s({5, 1, StreamPurpose::Increments, 0, 0});
    const FinePath p = sample_fine_path(s, M, K, T);
    REQUIRE(p.steps() == M);
    REQUIRE(p.modes() == K);
    CHECK(p.step() == T / M);

    std::vector<double> all(p.increments.data(), p.increments.data() + M * K);
    const double var = T / M;
    CHECK(std::abs(mean(all)) < 4.0 * std::sqrt(var / all.size()));

    Stream s2({5, 1, StreamPurpose::Increments, 0, 0});
    const std::size_t Mc = 100000;
    const FinePath q = sample_fine_path(s2, Mc, 1, 1.0);
    std::vector<double> col(q.increments.data(), q.increments.data() + Mc);
    const double sd = sample_std(col);
    CHECK(std::abs(sd * sd / (1.0 / Mc) - 1.0) < 0.05);

    Stream s3({5, 1, StreamPurpose::Increments, 0, 0});
    const FinePath r = sample_fine_path(s3, M, K, T);
    CHECK(r.increments == p.increments);

    Stream s4({5, 1, StreamPurpose::Increments, 0, 0});
    CHECK_THROWS_AS(sample_fine_path(s4, 0, 1, 1.0), InvalidArgument);
    CHECK_THROWS_AS(sample_fine_path(s4, 1, 1, 0.0), InvalidArgument);
}

TEST_CASE("aggregation") {
    Stream s({3, 0, StreamPurpose::Increments, 0, 0});
    const FinePath p = sample_fine_path(s, 64, 3, 1.0);

    const RowMatrix one = aggregate(p, 1);
    REQUIRE(one.rows() == 1);
    for (int j = 0; j < 3; ++j) CHECK(one(0, j) == doctest::Approx(p.increments.col(j).sum()).epsilon(1e-12));

    CHECK(aggregate(p, 64) == p.increments);

    const RowMatrix direct = aggregate(p, 2);
    const RowMatrix staged = aggregate(aggregate(p, 8), 2);
    for (int m = 0; m < 2; ++m) {
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(direct(m, j) - staged(m, j)) <= 1e-12 * (1.0 + std::abs(direct(m, j))));
            double block = 0.0;
            for (int r = 0; r < 32; ++r) block += p.increments(32 * m + r, j);
            CHECK(direct(m, j) == doctest::Approx(block).epsilon(1e-12));
        }
    }

    Stream s4({3, 0, StreamPurpose::Increments, 0, 0});
    const FinePath small = sample_fine_path(s4, 4, 1, 1.0);
    const RowMatrix tiny = aggregate(small, 1);
    CHECK(tiny(0, 0) == doctest::Approx(small.increments.sum()).epsilon(1e-15));
    CHECK_THROWS_AS(aggregate(p, 3), InvalidArgument);
}

TEST_CASE("q increments") {
    const QSpectrum spec = power_law_spectrum(3.0);
    const double ones[] = {1.0, 1.0};
    const Eigen::VectorXd q = q_increment(ones, spec, 2);
    CHECK(q[0] == 1.0);
    CHECK(q[1] == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-15));

    const double zeros[] = {0.0, 0.0, 0.0};
    CHECK(q_increment(zeros, spec, 3).isZero());

    const double single[] = {0.3};
    CHECK(q_increment(single, spec, 1)[0] == 0.3);

    QSpectrum bad;
    bad.eta = [](std::size_t j) { return j == 2 ? 0.0 : 1.0; };
    bad.rho_Q = 2.0;
    CHECK_THROWS_AS(q_increment(ones, bad, 2), InvalidArgument);
    CHECK_THROWS_AS(q_increment(ones, spec, 3), InvalidArgument);
}

TEST_CASE("q increment covariance") {
    const QSpectrum spec = power_law_spectrum(3.0);
    const std::size_t n = 100000, K = 3;
    const double h = 0.01;
    Stream s({11, 0, StreamPurpose::Increments, 0, 0});
    const FinePath p = sample_fine_path(s, n, K, n * h);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(K, K);
    for (std::size_t m = 0; m < n; ++m) {
        const Eigen::VectorXd q = q_increment(std::span<const double>(p.increments.row(m).data(), K), spec, K);
        cov += q * q.transpose();
    }
    cov /= static_cast<double>(n);
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
            const double ei = spec.eta(i + 1), ej = spec.eta(j + 1);
            // Var of a product of independent centred normals is the product of variances.
            const double sigma = (i == j ? std::sqrt(2.0) * ei * h : std::sqrt(ei * ej) * h) / std::sqrt(double(n));
            const double expect = i == j ? ei * h : 0.0;
            CHECK(std::abs(cov(i, j) - expect) < 4.0 * sigma);
        }
    }
}

TEST_CASE("trace of the example spectrum") {
    const QSpectrum spec = power_law_spectrum(3.0);
    for (std::size_t K : {1, 2, 10, 1000}) CHECK(spec.eigenvalues(K).sum() <= 1.2020569031595942);
    const Eigen::VectorXd eta = spec.eigenvalues(50);
    for (Eigen::Index j = 1; j < eta.size(); ++j) CHECK(eta[j] <= eta[j - 1]);
}

TEST_CASE("fine path dump round trip") {
    Stream s({12, 4, StreamPurpose::Increments, 0, 0});
    FinePath p = sample_fine_path(s, 16, 3, 0.5);
    p.seed = 12;
    std::stringstream buffer;
    write_fine_path(buffer, p);
    CHECK(buffer.str().size() == 32 + 16 * 3 * 8);
    const FinePath q = read_fine_path(buffer);
    CHECK(q.increments == p.increments);
    CHECK(q.T == p.T);
    CHECK(q.seed == 12);

    std::stringstream truncated(buffer.str().substr(0, 40));
    CHECK_THROWS_AS(read_fine_path(truncated), InvalidArgument);
}
