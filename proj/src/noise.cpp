#include "spdemil/noise.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "spdemil/errors.hpp"

namespace spdemil {

Eigen::VectorXd QSpectrum::eigenvalues(std::size_t K) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(K));
    for (std::size_t j = 1; j <= K; ++j) {
        const double value = eta(j);
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw InvalidArgument("eta_" + std::to_string(j) +
                                  " must be non-zero for every retained noise mode");
        }
        out[static_cast<Eigen::Index>(j - 1)] = value;
    }
    return out;
}

QSpectrum power_law_spectrum(double exponent) {
    return QSpectrum{[exponent](std::size_t j) {
                         return std::pow(static_cast<double>(j), -exponent);
                     },
                     exponent};
}

QSpectrum unit_spectrum() {
    return QSpectrum{[](std::size_t) { return 1.0; }, 0.0};
}

FinePath sample_fine_path(Stream& stream, std::size_t M_fine, std::size_t K_max, double T) {
    if (M_fine == 0 || K_max == 0) throw InvalidArgument("sample_fine_path: counts must be >= 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("sample_fine_path: T must be positive");
    FinePath path;
    path.T = T;
    path.seed = stream.key().seed;
    path.increments.resize(static_cast<Eigen::Index>(M_fine), static_cast<Eigen::Index>(K_max));
    const double sd = std::sqrt(T / static_cast<double>(M_fine));
    double* data = path.increments.data();
    const std::size_t total = M_fine * K_max;
    for (std::size_t n = 0; n < total; ++n) data[n] = sd * stream.normal();
    return path;
}

RowMatrix aggregate(const RowMatrix& increments, std::size_t M_coarse) {
    const auto M_fine = static_cast<std::size_t>(increments.rows());
    if (M_coarse == 0 || M_fine % M_coarse != 0) {
        throw InvalidArgument("aggregate: fine step count " + std::to_string(M_fine) +
                              " is not a multiple of " + std::to_string(M_coarse));
    }
    if (M_coarse == M_fine) return increments;
    const auto ratio = static_cast<Eigen::Index>(M_fine / M_coarse);
    const Eigen::Index K = increments.cols();
    RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(M_coarse), K);
    for (Eigen::Index m = 0; m < out.rows(); ++m) {
        out.row(m) = increments.middleRows(m * ratio, ratio).colwise().sum();
    }
    return out;
}

RowMatrix aggregate(const FinePath& path, std::size_t M_coarse) {
    return aggregate(path.increments, M_coarse);
}

Eigen::VectorXd q_increment(std::span<const double> coarse_row, const QSpectrum& spectrum,
                            std::size_t K) {
    if (K > coarse_row.size()) {
        throw InvalidArgument("q_increment: K exceeds the number of sampled modes");
    }
    const Eigen::VectorXd eta = spectrum.eigenvalues(K);
    Eigen::VectorXd out(static_cast<Eigen::Index>(K));
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        out[j] = std::sqrt(eta[j]) * coarse_row[static_cast<std::size_t>(j)];
    }
    return out;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
    out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw InvalidArgument("read_fine_path: truncated input");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    return v;
}

}  // namespace

void write_fine_path(std::ostream& out, const FinePath& path) {
    put_u64(out, path.steps());
    put_u64(out, path.modes());
    put_u64(out, std::bit_cast<std::uint64_t>(path.T));
    put_u64(out, path.seed);
    const double* data = path.increments.data();
    const std::size_t total = path.steps() * path.modes();
    for (std::size_t n = 0; n < total; ++n) put_u64(out, std::bit_cast<std::uint64_t>(data[n]));
}

FinePath read_fine_path(std::istream& in) {
    const std::uint64_t M_fine = get_u64(in);
    const std::uint64_t K_max = get_u64(in);
    FinePath path;
    path.T = std::bit_cast<double>(get_u64(in));
    path.seed = get_u64(in);
    if (M_fine == 0 || K_max == 0 || M_fine > (1ull << 32) || K_max > (1ull << 16)) {
        throw InvalidArgument("read_fine_path: implausible header");
    }
    path.increments.resize(static_cast<Eigen::Index>(M_fine), static_cast<Eigen::Index>(K_max));
    double* data = path.increments.data();
    for (std::size_t n = 0; n < M_fine * K_max; ++n) data[n] = std::bit_cast<double>(get_u64(in));
    return path;
}

}  // namespace spdemil
