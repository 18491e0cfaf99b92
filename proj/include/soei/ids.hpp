#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>

namespace soei {

// Wall clock in milliseconds since the Unix epoch.
std::int64_t now_ms();

// Produces time-ordered, collision-resistant identifiers:
// 12 hex digits of milliseconds, 4 hex digits of a per-millisecond counter,
// then 8 random hex digits. Lexicographic order equals creation order
// within one generator.
class IdGenerator {
 public:
  using Clock = std::function<std::int64_t()>;

  IdGenerator();
  explicit IdGenerator(Clock clock, std::uint64_t seed = std::random_device{}());

  std::string next();

 private:
  Clock clock_;
  std::mutex mu_;
  std::mt19937_64 rng_;
  std::int64_t last_ms_ = -1;
  std::uint32_t counter_ = 0;
};

}  // namespace soei
