#include "metasecure/clock.h"

#include <chrono>

namespace metasecure {

TimestampMs SystemClock::NowMs() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
      .count();
}

std::shared_ptr<const Clock> DefaultClock() {
  static const auto clock = std::make_shared<SystemClock>();
  return clock;
}

}  // namespace metasecure
