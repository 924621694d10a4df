#ifndef METASECURE_ORCHESTRATOR_H_
#define METASECURE_ORCHESTRATOR_H_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metasecure/auth_session.h"
#include "metasecure/face_identity.h"
#include "metasecure/rp_server.h"

namespace metasecure {

// Evidence for the two assertion layers.
struct AssertionEvidence {
  AssertionResponse assertion;
  Nonce challenge_nonce{};
  // The user acknowledged the origin device shown in the approval UI.
  // Required for the SecurityKey layer.
  bool device_confirmed = false;
};

struct FaceEvidence {
  std::vector<double> probe_vector;
  std::vector<double> probe_features;
};

using StepEvidence = std::variant<AssertionEvidence, FaceEvidence>;

enum class StepFailure {
  kWrongEvidenceType,
  kCredentialMismatch,  // unknown, another user's, or the wrong device kind
  kDeviceNotConfirmed,
  kAssertionRejected,   // see |verification|
  kFaceRejected,        // see |face|
};

std::string_view ToString(StepFailure failure);

struct StepResult {
  AuthSession session;
  bool advanced = false;
  std::optional<StepFailure> failure;
  std::optional<VerificationFailure> verification;
  std::optional<FaceDecision> face;
};

struct PendingRequest {
  std::string session_id;
  std::string service_provider;
  std::string origin_device_descriptor;
  TimestampMs requested_at = 0;
  SessionState state = SessionState::kPending;
  // The step the approver must complete next.
  AuthStep next_step = AuthStep::kDeviceAttestation;
};

// Which step a non-terminal state expects next. nullopt for terminal states.
std::optional<AuthStep> NextStep(SessionState state);

// Drives a login through device attestation, then security key, then face.
// Transitions are strictly ordered; any non-terminal state may be denied or
// expire. Thread-safe: one lock serialises transitions, so racing advances on
// one session produce exactly one winner.
class Orchestrator {
 public:
  Orchestrator(std::shared_ptr<RelyingParty> rp,
               std::shared_ptr<FaceRegistry> faces,
               DurationMs session_ttl_ms = kDefaultSessionTtlMs);

  // Throws NoSuchUserError, PrerequisiteError naming the missing layer.
  AuthSession RequestLogin(const std::string& user_id,
                           const std::string& service_provider,
                           const std::string& origin_device_descriptor);

  // Throws NoSuchSessionError, SessionExpiredError, SessionTerminalError,
  // OutOfOrderError. Invalid evidence for the right step is a StepResult
  // failure and leaves the state unchanged.
  StepResult Advance(const std::string& session_id,
                     AuthStep step,
                     const StepEvidence& evidence);

  // Throws NoSuchSessionError, SessionExpiredError, SessionTerminalError.
  AuthSession Deny(const std::string& session_id);

  // Non-terminal sessions of |user_id|, newest first. Throws NoSuchUserError.
  std::vector<PendingRequest> ApprovalFeed(const std::string& user_id);

  // Current state, with timeout applied. Throws NoSuchSessionError.
  AuthSession Status(const std::string& session_id);

  RelyingParty& rp() { return *rp_; }
  FaceRegistry& faces() { return *faces_; }
  DurationMs session_ttl_ms() const { return session_ttl_ms_; }

 private:
  struct Entry {
    AuthSession session;
    uint64_t sequence = 0;
  };

  Entry& FindLocked(const std::string& session_id);
  // Moves a timed-out non-terminal session to Expired. Returns true when the
  // session is past its deadline.
  bool ApplyTimeoutLocked(AuthSession& session, TimestampMs now);

  StepResult AdvanceAssertionLocked(AuthSession& session,
                                    AuthStep step,
                                    const AssertionEvidence& evidence,
                                    TimestampMs now);
  StepResult AdvanceFaceLocked(AuthSession& session,
                               const FaceEvidence& evidence,
                               TimestampMs now);

  std::shared_ptr<RelyingParty> rp_;
  std::shared_ptr<FaceRegistry> faces_;
  const DurationMs session_ttl_ms_;

  std::mutex mu_;
  std::map<std::string, Entry> sessions_;
  uint64_t next_sequence_ = 0;
};

}  // namespace metasecure

#endif  // METASECURE_ORCHESTRATOR_H_
