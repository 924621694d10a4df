#include "metasecure/orchestrator.h"

#include <algorithm>

#include "metasecure/errors.h"

namespace metasecure {

std::string_view ToString(StepFailure failure) {
  switch (failure) {
    case StepFailure::kWrongEvidenceType:
      return "WrongEvidenceType";
    case StepFailure::kCredentialMismatch:
      return "CredentialMismatch";
    case StepFailure::kDeviceNotConfirmed:
      return "DeviceNotConfirmed";
    case StepFailure::kAssertionRejected:
      return "AssertionRejected";
    case StepFailure::kFaceRejected:
      return "FaceRejected";
  }
  return "AssertionRejected";
}

std::optional<AuthStep> NextStep(SessionState state) {
  switch (state) {
    case SessionState::kPending:
      return AuthStep::kDeviceAttestation;
    case SessionState::kDeviceAttested:
      return AuthStep::kSecurityKey;
    case SessionState::kKeyVerified:
      return AuthStep::kFace;
    default:
      return std::nullopt;
  }
}

Orchestrator::Orchestrator(std::shared_ptr<RelyingParty> rp,
                           std::shared_ptr<FaceRegistry> faces,
                           DurationMs session_ttl_ms)
    : rp_(std::move(rp)),
      faces_(std::move(faces)),
      session_ttl_ms_(session_ttl_ms) {
  if (session_ttl_ms_ <= 0)
    throw ValidationError("session ttl must be positive");
}

AuthSession Orchestrator::RequestLogin(
    const std::string& user_id,
    const std::string& service_provider,
    const std::string& origin_device_descriptor) {
  rp_->store().GetUser(user_id);
  if (service_provider.empty())
    throw ValidationError("service provider is required");

  bool phone = false;
  bool key = false;
  for (const auto& c : rp_->store().CredentialsForUser(user_id)) {
    if (!c.active() || c.rp_id != rp_->rp_id())
      continue;
    phone |= c.kind == DeviceKind::kSmartphone;
    key |= c.kind == DeviceKind::kSecurityKey;
  }
  if (!phone)
    throw PrerequisiteError("Smartphone: no active smartphone credential");
  if (!key)
    throw PrerequisiteError("SecurityKey: no active security key credential");
  if (!faces_->HasTemplate(user_id))
    throw PrerequisiteError("Face: no enrolled face template");

  AuthSession session;
  session.session_id = RandomId("sess-");
  session.user_id = user_id;
  session.service_provider = service_provider;
  session.origin_device_descriptor = origin_device_descriptor;
  session.state = SessionState::kPending;
  session.created_at = rp_->clock().NowMs();
  session.ttl = session_ttl_ms_;

  std::lock_guard lock(mu_);
  sessions_[session.session_id] = Entry{session, next_sequence_++};
  return session;
}

Orchestrator::Entry& Orchestrator::FindLocked(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end())
    throw NoSuchSessionError("no session " + session_id);
  return it->second;
}

bool Orchestrator::ApplyTimeoutLocked(AuthSession& session, TimestampMs now) {
  if (now < session.expires_at())
    return false;
  if (!IsTerminal(session.state))
    session.state = SessionState::kExpired;
  return true;
}

StepResult Orchestrator::Advance(const std::string& session_id,
                                 AuthStep step,
                                 const StepEvidence& evidence) {
  std::lock_guard lock(mu_);
  AuthSession& session = FindLocked(session_id).session;
  const TimestampMs now = rp_->clock().NowMs();

  if (ApplyTimeoutLocked(session, now) ||
      session.state == SessionState::kExpired) {
    throw SessionExpiredError("session " + session_id + " has expired");
  }
  if (IsTerminal(session.state)) {
    throw SessionTerminalError("session " + session_id + " is " +
                               std::string(ToString(session.state)));
  }
  const AuthStep expected = *NextStep(session.state);
  if (step != expected) {
    throw OutOfOrderError("session " + session_id + " expects " +
                          std::string(ToString(expected)) + ", got " +
                          std::string(ToString(step)));
  }

  if (step == AuthStep::kFace) {
    if (const auto* face = std::get_if<FaceEvidence>(&evidence))
      return AdvanceFaceLocked(session, *face, now);
  } else {
    if (const auto* a = std::get_if<AssertionEvidence>(&evidence))
      return AdvanceAssertionLocked(session, step, *a, now);
  }
  StepResult result;
  result.session = session;
  result.failure = StepFailure::kWrongEvidenceType;
  return result;
}

StepResult Orchestrator::AdvanceAssertionLocked(
    AuthSession& session,
    AuthStep step,
    const AssertionEvidence& evidence,
    TimestampMs now) {
  StepResult result;
  const DeviceKind required = step == AuthStep::kDeviceAttestation
                                  ? DeviceKind::kSmartphone
                                  : DeviceKind::kSecurityKey;
  auto credential =
      rp_->store().FindCredential(evidence.assertion.credential_id);
  if (!credential || credential->user_id != session.user_id ||
      credential->kind != required) {
    result.session = session;
    result.failure = StepFailure::kCredentialMismatch;
    return result;
  }
  if (step == AuthStep::kSecurityKey && !evidence.device_confirmed) {
    result.session = session;
    result.failure = StepFailure::kDeviceNotConfirmed;
    return result;
  }

  VerificationResult verdict =
      rp_->FinishAuthentication(evidence.assertion, evidence.challenge_nonce);
  if (!verdict.ok) {
    result.session = session;
    result.failure = StepFailure::kAssertionRejected;
    result.verification = verdict.failure;
    return result;
  }

  session.step_evidence.push_back(
      StepEvidenceRecord{step, verdict.credential_id, verdict.counter, 0.0, now});
  session.state = step == AuthStep::kDeviceAttestation
                      ? SessionState::kDeviceAttested
                      : SessionState::kKeyVerified;
  result.session = session;
  result.advanced = true;
  return result;
}

StepResult Orchestrator::AdvanceFaceLocked(AuthSession& session,
                                           const FaceEvidence& evidence,
                                           TimestampMs now) {
  StepResult result;
  FaceDecision decision = faces_->VerifyFace(
      session.user_id, evidence.probe_vector, evidence.probe_features);
  result.face = decision;
  if (!decision.accepted) {
    result.session = session;
    result.failure = StepFailure::kFaceRejected;
    return result;
  }

  session.step_evidence.push_back(
      StepEvidenceRecord{AuthStep::kFace, {}, 0, decision.confidence, now});
  session.state = SessionState::kComplete;
  session.token = rp_->IssueSession(session.user_id, session);
  result.session = session;
  result.advanced = true;
  return result;
}

AuthSession Orchestrator::Deny(const std::string& session_id) {
  std::lock_guard lock(mu_);
  AuthSession& session = FindLocked(session_id).session;
  if (ApplyTimeoutLocked(session, rp_->clock().NowMs()) ||
      session.state == SessionState::kExpired) {
    throw SessionExpiredError("session " + session_id + " has expired");
  }
  if (IsTerminal(session.state)) {
    throw SessionTerminalError("session " + session_id + " is " +
                               std::string(ToString(session.state)));
  }
  session.state = SessionState::kDenied;
  return session;
}

std::vector<PendingRequest> Orchestrator::ApprovalFeed(
    const std::string& user_id) {
  rp_->store().GetUser(user_id);
  const TimestampMs now = rp_->clock().NowMs();
  std::lock_guard lock(mu_);
  std::vector<const Entry*> live;
  for (auto& [id, entry] : sessions_) {
    if (entry.session.user_id != user_id)
      continue;
    ApplyTimeoutLocked(entry.session, now);
    if (!IsTerminal(entry.session.state))
      live.push_back(&entry);
  }
  std::sort(live.begin(), live.end(), [](const Entry* a, const Entry* b) {
    if (a->session.created_at != b->session.created_at)
      return a->session.created_at > b->session.created_at;
    return a->sequence > b->sequence;
  });
  std::vector<PendingRequest> feed;
  feed.reserve(live.size());
  for (const Entry* e : live) {
    const AuthSession& s = e->session;
    feed.push_back(PendingRequest{s.session_id, s.service_provider,
                                  s.origin_device_descriptor, s.created_at,
                                  s.state, *NextStep(s.state)});
  }
  return feed;
}

AuthSession Orchestrator::Status(const std::string& session_id) {
  std::lock_guard lock(mu_);
  AuthSession& session = FindLocked(session_id).session;
  ApplyTimeoutLocked(session, rp_->clock().NowMs());
  return session;
}

}  // namespace metasecure
