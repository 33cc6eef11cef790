#pragma once

#include <cstdint>
#include <random>

namespace bec {

/// Portable random stream: std::mt19937_64 (its output sequence is fixed by
/// the C++ standard) with hand-rolled conversions, since the standard
/// distributions are implementation-defined.
///
/// uniform(): top 53 bits of the next output scaled by 2^-53, in [0, 1).
/// Substreams for run r of a seeded experiment use seed ^ r.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    static RngStream substream(std::uint64_t seed, std::uint64_t run_index) { return RngStream(seed ^ run_index); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Index i with probability (cumulative[i] - cumulative[i-1]); `cumulative`
    /// is nondecreasing. Zero-probability entries are never returned.
    template <class Cumulative>
    std::size_t categorical(const Cumulative& cumulative, std::size_t size) {
        const double u = uniform() * cumulative[size - 1];
        for (std::size_t i = 0; i < size; ++i)
            if (u < cumulative[i]) return i;
        // u landed on the total through rounding: last index with mass
        for (std::size_t i = size; i-- > 0;)
            if (cumulative[i] > (i == 0 ? 0.0 : cumulative[i - 1])) return i;
        return size - 1;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace bec
