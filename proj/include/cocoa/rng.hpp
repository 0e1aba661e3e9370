#pragma once

#include <cstdint>
#include <string_view>

namespace cocoa {

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view bytes);

/// Mixes a seed with a sequence of keys into one stream key.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0);

/// Counter-keyed xoshiro256** stream. The output depends only on the key it
/// was constructed from, so draws never depend on scheduling order.
class KeyedRng {
 public:
  explicit KeyedRng(std::uint64_t key);
  KeyedRng(std::uint64_t seed, std::string_view label, std::uint64_t counter);

  std::uint64_t next();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double normal();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cocoa
