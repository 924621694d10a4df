#ifndef METASECURE_AUTH_SESSION_H_
#define METASECURE_AUTH_SESSION_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metasecure/bytes.h"
#include "metasecure/clock.h"

namespace metasecure {

constexpr DurationMs kDefaultSessionTtlMs = 300'000;
constexpr DurationMs kDefaultTokenTtlMs = 3'600'000;

enum class SessionState {
  kPending,
  kDeviceAttested,
  kKeyVerified,
  kFaceVerified,
  kComplete,
  kDenied,
  kExpired,
};

enum class AuthStep { kDeviceAttestation, kSecurityKey, kFace };

std::string_view ToString(SessionState state);
SessionState SessionStateFromString(std::string_view s);
std::string_view ToString(AuthStep step);
AuthStep AuthStepFromString(std::string_view s);

inline bool IsTerminal(SessionState s) {
  return s == SessionState::kComplete || s == SessionState::kDenied ||
         s == SessionState::kExpired;
}

// What was accepted for one layer of a login.
struct StepEvidenceRecord {
  AuthStep step = AuthStep::kDeviceAttestation;
  // Credential used for the two assertion layers; empty for the face layer.
  std::string credential_id;
  uint32_t counter = 0;
  // Match confidence for the face layer.
  double confidence = 0.0;
  TimestampMs accepted_at = 0;
};

struct SessionToken {
  std::string token;  // base64 of 32 random bytes
  std::string user_id;
  std::string session_id;
  TimestampMs issued_at = 0;
  TimestampMs expires_at = 0;
};

struct AuthSession {
  std::string session_id;
  std::string user_id;
  std::string service_provider;
  std::string origin_device_descriptor;
  SessionState state = SessionState::kPending;
  std::vector<StepEvidenceRecord> step_evidence;
  TimestampMs created_at = 0;
  DurationMs ttl = kDefaultSessionTtlMs;
  // Set once the session reaches Complete.
  std::optional<SessionToken> token;

  TimestampMs expires_at() const { return created_at + ttl; }
  bool HasEvidenceFor(AuthStep step) const {
    for (const auto& e : step_evidence) {
      if (e.step == step)
        return true;
    }
    return false;
  }
};

}  // namespace metasecure

#endif  // METASECURE_AUTH_SESSION_H_
