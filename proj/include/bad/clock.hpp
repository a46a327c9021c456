#pragma once

#include <atomic>
#include <chrono>

#include "bad/record.hpp"

namespace bad {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

// Manually advanced; used by tests and benchmarks so window boundaries are deterministic.
class VirtualClock : public Clock {
 public:
  explicit VirtualClock(Timestamp start = 0) : now_(start) {}
  Timestamp now() const override { return now_.load(std::memory_order_acquire); }
  void set(Timestamp ts) { now_.store(ts, std::memory_order_release); }
  void advance(std::chrono::microseconds d) { now_.fetch_add(d.count(), std::memory_order_acq_rel); }

 private:
  std::atomic<Timestamp> now_;
};

class WallClock : public Clock {
 public:
  Timestamp now() const override {
    using namespace std::chrono;
    return duration_cast<microseconds>(system_clock::now().time_since_epoch()).count();
  }
};

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace bad
