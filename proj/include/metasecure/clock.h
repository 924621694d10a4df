#ifndef METASECURE_CLOCK_H_
#define METASECURE_CLOCK_H_

#include <atomic>
#include <cstdint>
#include <memory>

namespace metasecure {

// Milliseconds since the Unix epoch.
using TimestampMs = int64_t;
using DurationMs = int64_t;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimestampMs NowMs() const = 0;
};

class SystemClock : public Clock {
 public:
  TimestampMs NowMs() const override;
};

// Manually advanced clock for deterministic expiry tests.
class ManualClock : public Clock {
 public:
  explicit ManualClock(TimestampMs start = 1'700'000'000'000) : now_(start) {}

  TimestampMs NowMs() const override { return now_.load(); }
  void Advance(DurationMs delta) { now_ += delta; }
  void Set(TimestampMs t) { now_ = t; }

 private:
  std::atomic<TimestampMs> now_;
};

std::shared_ptr<const Clock> DefaultClock();

}  // namespace metasecure

#endif  // METASECURE_CLOCK_H_
