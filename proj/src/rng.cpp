#include "spdemil/rng.hpp"

#include <boost/random/normal_distribution.hpp>

#include "spdemil/errors.hpp"

namespace spdemil {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(product);
    hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kMul0, ctr[0], lo0, hi0);
        mulhilo(kMul1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

Stream::Stream(const StreamKey& key) : key_(key) {
    if (key.level >= (1u << 24)) throw InvalidArgument("stream level must be < 2^24");
    if (key.path > 0xFFFFFFFFull || key.step > 0xFFFFFFFFull) {
        throw InvalidArgument("stream path and step indices must fit in 32 bits");
    }
    philox_key_ = {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
    counter_ = {0u, static_cast<std::uint32_t>(key.step), static_cast<std::uint32_t>(key.path),
                (static_cast<std::uint32_t>(key.purpose) << 24) | key.level};
}

void Stream::refill() {
    buffer_ = philox4x32_10(counter_, philox_key_);
    if (++counter_[0] == 0) throw InvalidArgument("stream exhausted (2^32 blocks)");
    buffered_ = 2;
}

Stream::result_type Stream::operator()() {
    if (buffered_ == 0) refill();
    const int offset = (2 - buffered_) * 2;
    --buffered_;
    return static_cast<std::uint64_t>(buffer_[offset]) |
           (static_cast<std::uint64_t>(buffer_[offset + 1]) << 32);
}

double Stream::normal() {
    boost::random::normal_distribution<double> unit(0.0, 1.0);  // stateless ziggurat
    ++normals_drawn_;
    return unit(*this);
}

}  // namespace spdemil
