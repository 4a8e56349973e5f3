#include "mfmlmc/rng.hpp"

#include <cmath>
#include <numbers>

namespace mfmlmc {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    // The key carries the seed; the stream id occupies the upper counter
    // words so distinct streams never overlap for fewer than 2^64 blocks.
    const std::uint64_t k = mix64(seed);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

RngStream RngStream::derive(std::uint64_t a, std::uint64_t b, Purpose purpose) const {
    std::uint64_t h = mix64(stream_id_ ^ 0x5851F42D4C957F2Dull);
    h = mix64(h ^ a);
    h = mix64(h ^ (b * 0x2545F4914F6CDD1Dull));
    h = mix64(h ^ static_cast<std::uint64_t>(purpose));
    return RngStream(seed_, h);
}

void RngStream::refill() {
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    buffer_ = Philox4x32::apply(ctr, key_);
    ++block_;
    next_ = 0;
}

RngStream::result_type RngStream::operator()() {
    if (next_ == 4) refill();
    return buffer_[next_++];
}

double RngStream::uniform() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    // (bits + 0.5) / 2^53 lies strictly inside (0, 1).
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::exponential(double rate) { return -std::log(uniform()) / rate; }

double RngStream::normal() {
    // Box-Muller, one variate per call to keep draw accounting simple.
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mfmlmc
