#ifndef METASECURE_BENCH_HARNESS_H_
#define METASECURE_BENCH_HARNESS_H_

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metasecure {

using Nanos = std::chrono::nanoseconds;

constexpr int kMinTrials = 5;
constexpr int kWarmupTrials = 3;
constexpr double kCalibrationTolerance = 0.15;
constexpr double kReferencePasswordMs = 1056.4;
// A 49-character password, the length used for the password baseline.
inline constexpr char kBenchPassword[] =
    "correct-horse-battery-staple-metaverse-login-2023";

enum class RowKind { kPassword, kFace, kPasswordless, kCombined, kOther };

// One measured authentication model. FIDO rows split each trial into
// challenge creation and verification; other rows only carry totals.
struct TimingRow {
  std::string label;
  RowKind kind = RowKind::kOther;
  std::string security;  // qualitative level shown in the comparison table
  bool split = false;
  std::vector<Nanos> create_trials;
  std::vector<Nanos> verify_trials;
  std::vector<Nanos> total_trials;

  double create_ms() const;
  double verify_ms() const;
  double total_ms() const;
  // Mean total rounded to whole nanoseconds; the unit the comparison table
  // adds up.
  int64_t total_ns() const;
};

// Iterated SHA-256 over salt || password: h0 = H(salt || pw), hi = H(h(i-1)).
std::array<uint8_t, 32> IteratedSha256(std::string_view password,
                                       std::string_view salt,
                                       uint64_t iterations);

// Wall time of one password check (hash + constant-time compare).
Nanos TimePasswordCheck(uint64_t iterations);

// Iteration count whose single check lands within +-15% of |target_ms| on this
// host. Throws CalibrationError when |target_ms| <= 0 or cannot be reached.
uint64_t CalibratePasswordCost(double target_ms);

// Challenge creation and assertion verification against an in-process
// relying party and authenticator. Throws ValidationError when trials < 5.
TimingRow TimeFidoAuth(int trials);
TimingRow TimePasswordAuth(int trials, uint64_t iterations);
// PAD + template match for a live probe, using the embedding matcher.
TimingRow TimeFaceAuth(int trials, uint64_t seed = 1);

struct ComparisonLine {
  std::string label;
  std::string security;
  int64_t total_ns = 0;
  // For the combined row: the two component totals it was summed from.
  std::optional<std::pair<int64_t, int64_t>> components;
};

struct TimingReport {
  std::vector<TimingRow> rows;
  std::vector<ComparisonLine> comparison;

  // password > combined > passwordless, when all three are present.
  bool OrderingHolds() const;
  const ComparisonLine* Find(RowKind kind) const;

  std::string RenderText() const;
  std::string RenderDelimited() const;

 private:
  friend TimingReport EmitReport(std::vector<TimingRow> rows);
  std::vector<RowKind> kinds_;
};

// Builds the comparison, adding "Metasecure" = face + passwordless when both
// rows are present. Throws ValidationError for an empty row set.
TimingReport EmitReport(std::vector<TimingRow> rows);

// The per-trial FIDO table: trial number, create, verify, total, plus an
// Average row.
std::string RenderFidoTable(const TimingRow& row);

std::string FormatMs(double ms, int digits);
std::string FormatNanosAsMs(int64_t ns);

}  // namespace metasecure

#endif  // METASECURE_BENCH_HARNESS_H_
