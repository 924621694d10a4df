#include "metasecure/auth_session.h"

#include <array>
#include <utility>

#include "metasecure/errors.h"

namespace metasecure {

namespace {

constexpr std::array<std::pair<SessionState, std::string_view>, 7> kStates = {{
    {SessionState::kPending, "pending"},
    {SessionState::kDeviceAttested, "device_attested"},
    {SessionState::kKeyVerified, "key_verified"},
    {SessionState::kFaceVerified, "face_verified"},
    {SessionState::kComplete, "complete"},
    {SessionState::kDenied, "denied"},
    {SessionState::kExpired, "expired"},
}};

constexpr std::array<std::pair<AuthStep, std::string_view>, 3> kSteps = {{
    {AuthStep::kDeviceAttestation, "device_attestation"},
    {AuthStep::kSecurityKey, "security_key"},
    {AuthStep::kFace, "face"},
}};

}  // namespace

std::string_view ToString(SessionState state) {
  for (const auto& [s, name] : kStates) {
    if (s == state)
      return name;
  }
  return "pending";
}

SessionState SessionStateFromString(std::string_view s) {
  for (const auto& [state, name] : kStates) {
    if (name == s)
      return state;
  }
  throw EncodingError("unknown session state: " + std::string(s));
}

std::string_view ToString(AuthStep step) {
  for (const auto& [s, name] : kSteps) {
    if (s == step)
      return name;
  }
  return "device_attestation";
}

AuthStep AuthStepFromString(std::string_view s) {
  for (const auto& [step, name] : kSteps) {
    if (name == s)
      return step;
  }
  throw EncodingError("unknown step: " + std::string(s));
}

}  // namespace metasecure
