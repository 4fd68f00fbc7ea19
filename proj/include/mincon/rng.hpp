#pragma once

#include <cstdint>

namespace mincon {

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, substream, counters), so independent processes (graph
// placement, delays, schedule, noise, initial state) never share state and
// any single draw can be recomputed after the fact.
//
// Stream splitting: a key is derived from (seed, stream, substream) by
// chained SplitMix64 finalization; the counters are folded into the key the
// same way. Substream is typically the trial index or a retry attempt.
enum class Stream : std::uint64_t {
  kGraph = 1,
  kDelay = 2,
  kSchedule = 3,
  kNoise = 4,
  kInit = 5,
  kFuzz = 6,
};

std::uint64_t mix64(std::uint64_t x);

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0);

  std::uint64_t bits(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;
  // [0, 1)
  double uniform01(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;
  // (0, 1]
  double uniform_open0(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;
  // Inclusive range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi, std::uint64_t a,
                           std::uint64_t b = 0, std::uint64_t c = 0) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

// Sequential view over one counter stream, for code that draws many values in
// a loop.
class SequentialRng {
 public:
  SequentialRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0)
      : rng_(seed, stream, substream) {}

  std::uint64_t next_bits() { return rng_.bits(counter_++); }
  double uniform01() { return rng_.uniform01(counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return rng_.uniform_int(lo, hi, counter_++);
  }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace mincon
