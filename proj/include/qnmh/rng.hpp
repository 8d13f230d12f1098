#ifndef QNMH_RNG_HPP
#define QNMH_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random number generation (Philox4x32-10). Every draw is a
// pure function of (seed, stream, position), so particle-level parallel
// loops produce bit-identical results regardless of thread count or
// evaluation order.

namespace qnmh {

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  key[0] += kPhiloxW0;
  key[1] += kPhiloxW1;
}

}  // namespace detail

struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block ctr, Key key) {
    for (int r = 0; r < 10; ++r) detail::philox_round(ctr, key);
    return ctr;
  }
};

// splitmix64 finalizer; bijective on 64 bits.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derives an independent stream/seed id from a parent id and a tag.
inline std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t tag) {
  return mix64(parent ^ mix64(tag));
}

// One 128-bit Philox block addressed by (seed, stream, position).
inline Philox4x32::Block block_at(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t pos) {
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                               static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Block ctr = {
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(pos >> 32)};
  return Philox4x32::generate(ctr, key);
}

namespace detail {

// [0,1) with 53 random bits.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// (0,1]; keeps log() finite in Box-Muller.
inline double to_unit_positive(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

inline std::uint64_t lo64(const Philox4x32::Block& b) {
  return static_cast<std::uint64_t>(b[0]) | (static_cast<std::uint64_t>(b[1]) << 32);
}

inline std::uint64_t hi64(const Philox4x32::Block& b) {
  return static_cast<std::uint64_t>(b[2]) | (static_cast<std::uint64_t>(b[3]) << 32);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double normal_from_block(const Philox4x32::Block& b) {
  const double u1 = to_unit_positive(lo64(b));
  const double u2 = to_unit(hi64(b));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace detail

// Positional draws for parallel kernels. Each position consumes exactly one
// Philox block; distinct positions are independent.
inline double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t pos) {
  return detail::to_unit(detail::lo64(block_at(seed, stream, pos)));
}

inline double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t pos) {
  return detail::normal_from_block(block_at(seed, stream, pos));
}

// Both Box-Muller outputs of one block; first equals normal_at for the same
// position. Used in bulk kernels to halve the per-draw cost.
struct NormalPair {
  double first, second;
};

inline NormalPair normal_pair_at(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t pos) {
  const auto b = block_at(seed, stream, pos);
  const double u1 = detail::to_unit_positive(detail::lo64(b));
  const double u2 = detail::to_unit(detail::hi64(b));
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {r * std::cos(detail::kTwoPi * u2), r * std::sin(detail::kTwoPi * u2)};
}

// Sequential stream over the same block space: draw n consumes block n.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double uniform() { return detail::to_unit(detail::lo64(next_block())); }

  double normal() { return detail::normal_from_block(next_block()); }

  std::uint64_t bits() { return detail::lo64(next_block()); }

  // Independent child stream; safe to hand to a different consumer.
  RngStream substream(std::uint64_t tag) const {
    return RngStream(seed_, derive_stream(stream_, tag));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  Philox4x32::Block next_block() { return block_at(seed_, stream_, counter_++); }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace qnmh

#endif  // QNMH_RNG_HPP
