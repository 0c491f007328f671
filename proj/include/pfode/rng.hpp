#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace pfode {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// A (seed, stream) pair selects an independent sequence; the output is a
// pure function of (seed, stream, position), so results are reproducible
// bit-for-bit on any platform.
class Philox {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t seed, std::uint64_t stream = 0);

  static Counter block(Counter ctr, Key key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }
  result_type operator()();

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  // Standard normal via Box-Muller; pairs are cached.
  double normal();

 private:
  Key key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t position_ = 0;
  Counter buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Stable 64-bit stream id for (seed, purpose); FNV-1a over the purpose text
// mixed with the seed.
std::uint64_t derive_stream(std::uint64_t seed, std::string_view purpose);

}  // namespace pfode
