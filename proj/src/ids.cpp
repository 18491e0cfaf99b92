#include "soei/ids.hpp"

#include <chrono>
#include <cstdio>

namespace soei {

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

IdGenerator::IdGenerator() : IdGenerator(now_ms) {}

IdGenerator::IdGenerator(Clock clock, std::uint64_t seed) : clock_(std::move(clock)), rng_(seed) {}

std::string IdGenerator::next() {
  std::lock_guard lock(mu_);
  auto ms = clock_();
  if (ms <= last_ms_) {
    // Clock stalled or went backwards: stay on the last timestamp and count up.
    ms = last_ms_;
    if (++counter_ > 0xFFFF) {
      ++ms;
      counter_ = 0;
    }
  } else {
    counter_ = 0;
  }
  last_ms_ = ms;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%012llx%04x%08x", static_cast<unsigned long long>(ms) & 0xFFFFFFFFFFFFULL,
                counter_, static_cast<unsigned>(rng_() & 0xFFFFFFFFu));
  return buf;
}

}  // namespace soei
