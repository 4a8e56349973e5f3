#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mfmlmc {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key);
};

/// Purposes give every consumer of randomness inside one sample its own
/// sub-stream, so that e.g. changing the observation noise never perturbs
/// the reaction dynamics.
enum class Purpose : std::uint32_t {
    kGeneric = 0,
    kPrior = 1,
    kExactDynamics = 2,
    kExactObservation = 3,
    kApproxDynamics = 4,
    kApproxObservation = 5,
    kContinuation = 6,
    kData = 7,
};

/// A reproducible stream of random numbers identified by (seed, stream_id).
///
/// Draws are produced by running Philox over an incrementing counter, so a
/// stream is cheap to create and identical (seed, stream_id) pairs always
/// reproduce identical sequences regardless of thread scheduling.
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions.
class RngStream {
public:
    using result_type = std::uint32_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    /// Derive an independent child stream; children of distinct
    /// (a, b, c) triples never share a key.
    [[nodiscard]] RngStream derive(std::uint64_t a, std::uint64_t b = 0,
                                   Purpose purpose = Purpose::kGeneric) const;

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform();
    /// Exponential with the given rate (> 0).
    double exponential(double rate);
    /// Standard normal draw.
    double normal();

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    Philox4x32::Key key_{};
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int next_ = 4;
};

/// SplitMix64 finaliser, used to hash stream identities into keys.
std::uint64_t mix64(std::uint64_t x);

}  // namespace mfmlmc
