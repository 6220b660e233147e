#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace spdemil {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure: the same (counter, key) always maps to the
/// same four words.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

enum class StreamPurpose : std::uint32_t {
    Increments = 1,  // fine-grid Brownian increment table
    Series = 2,      // U, V variables of the truncated Levy-area series
    Tail = 3,        // Gaussian tail correction
    Oracle = 4,      // sub-step increments for the brute-force oracle
    Auxiliary = 5,   // anything else (tests, diagnostics)
};

/// Identifies one independent substream.
///
/// Derivation: the 64-bit master seed is the Philox key; the 128-bit
/// counter is (block, step, path, purpose_word) with
/// purpose_word = (purpose << 24) | level. `level` separates resolutions
/// of one experiment (e.g. two time grids on the same path) and must be
/// < 2^24. Blocks enumerate 128-bit outputs within the substream. Distinct
/// keys never share a counter, so substreams are disjoint by construction.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    StreamPurpose purpose = StreamPurpose::Auxiliary;
    std::uint32_t level = 0;
    std::uint64_t step = 0;
};

/// Counter-based generator over one substream. Satisfies
/// UniformRandomBitGenerator with 64-bit outputs; normal() draws exact
/// N(0,1) variates (ziggurat) and counts them.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(const StreamKey& key);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    double normal();

    std::uint64_t normals_drawn() const { return normals_drawn_; }
    const StreamKey& key() const { return key_; }

private:
    void refill();

    StreamKey key_;
    std::array<std::uint32_t, 2> philox_key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;  // remaining 64-bit words in buffer_ (0, 1 or 2)
    std::uint64_t normals_drawn_ = 0;
};

}  // namespace spdemil
