#include "mincon/rng.hpp"

#include <stdexcept>

namespace mincon {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr double kTwoPowMinus53 = 1.0 / 9007199254740992.0;
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ static_cast<std::uint64_t>(stream));
  key_ = mix64(k ^ mix64(substream));
}

std::uint64_t CounterRng::bits(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  std::uint64_t h = mix64(key_ ^ a);
  h = mix64(h ^ (b * kGolden));
  return mix64(h ^ (c + 0x632be59bd9b4e019ULL));
}

double CounterRng::uniform01(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return static_cast<double>(bits(a, b, c) >> 11) * kTwoPowMinus53;
}

double CounterRng::uniform_open0(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return static_cast<double>((bits(a, b, c) >> 11) + 1) * kTwoPowMinus53;
}

std::int64_t CounterRng::uniform_int(std::int64_t lo, std::int64_t hi, std::uint64_t a,
                                     std::uint64_t b, std::uint64_t c) const {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const auto span = static_cast<unsigned __int128>(static_cast<std::uint64_t>(hi - lo)) + 1;
  const auto scaled = (static_cast<unsigned __int128>(bits(a, b, c)) * span) >> 64;
  return lo + static_cast<std::int64_t>(scaled);
}

}  // namespace mincon
