#include "metasecure/rp_server.h"

#include <algorithm>
#include <array>
#include <utility>

namespace metasecure {

namespace {

constexpr std::array<std::pair<VerificationFailure, std::string_view>, 7>
    kFailureNames = {{
        {VerificationFailure::kBadSignature, "BadSignature"},
        {VerificationFailure::kRpMismatch, "RpMismatch"},
        {VerificationFailure::kChallengeUnknown, "ChallengeUnknown"},
        {VerificationFailure::kChallengeExpired, "ChallengeExpired"},
        {VerificationFailure::kChallengeReused, "ChallengeReused"},
        {VerificationFailure::kCounterRegression, "CounterRegression"},
        {VerificationFailure::kCredentialInactive, "CredentialInactive"},
    }};

// Pending challenges are swept once the table grows past this size.
constexpr size_t kPruneThreshold = 4096;

}  // namespace

std::string_view ToString(VerificationFailure failure) {
  for (const auto& [f, name] : kFailureNames) {
    if (f == failure)
      return name;
  }
  return "BadSignature";
}

VerificationFailure VerificationFailureFromString(std::string_view s) {
  for (const auto& [f, name] : kFailureNames) {
    if (name == s)
      return f;
  }
  throw EncodingError("unknown verification failure: " + std::string(s));
}

RelyingParty::RelyingParty(RelyingPartyConfig config,
                           std::shared_ptr<CredentialStore> store,
                           std::shared_ptr<const Clock> clock)
    : config_(std::move(config)),
      rp_id_hash_(Sha256(config_.rp_id)),
      store_(std::move(store)),
      clock_(std::move(clock)) {
  if (config_.rp_id.empty())
    throw ValidationError("rp_id must not be empty");
  if (!store_)
    throw ValidationError("relying party needs a credential store");
}

UserIdentity RelyingParty::RegisterUser(std::string email,
                                        std::string display_name) {
  return store_->AddUser(std::move(email), std::move(display_name));
}

Challenge RelyingParty::IssueChallenge(const std::string& user_id,
                                       const std::string& rp_id,
                                       ChallengePurpose purpose) {
  const TimestampMs now = clock_->NowMs();
  Challenge challenge =
      NewChallenge(rp_id, user_id, purpose, now, config_.challenge_ttl_ms);
  std::lock_guard lock(mu_);
  PruneLocked(now);
  // A 256-bit collision is not a realistic event; refuse rather than overwrite.
  if (!challenges_.emplace(challenge.nonce, challenge).second)
    throw GenerationError("nonce collision");
  return challenge;
}

void RelyingParty::PruneLocked(TimestampMs now) {
  if (challenges_.size() < kPruneThreshold)
    return;
  // Keep recently expired entries around so late replays still report
  // ChallengeReused / ChallengeExpired rather than ChallengeUnknown.
  std::erase_if(challenges_, [&](const auto& entry) {
    const Challenge& c = entry.second;
    return now >= c.expires_at() + c.ttl;
  });
}

Challenge RelyingParty::BeginRegistration(const std::string& user_id,
                                          const std::string& rp_id) {
  store_->GetUser(user_id);
  return IssueChallenge(user_id, rp_id, ChallengePurpose::kRegistration);
}

Credential RelyingParty::FinishRegistration(
    const AttestationResponse& attestation,
    const Nonce& challenge_nonce) {
  const TimestampMs now = clock_->NowMs();
  std::lock_guard lock(mu_);

  auto it = challenges_.find(challenge_nonce);
  if (it == challenges_.end() ||
      it->second.purpose != ChallengePurpose::kRegistration) {
    throw RegistrationFailedError(VerificationFailure::kChallengeUnknown,
                                  "no pending registration challenge");
  }
  Challenge& challenge = it->second;
  if (challenge.consumed) {
    throw RegistrationFailedError(VerificationFailure::kChallengeReused,
                                  "registration challenge already used");
  }
  challenge.Consume();
  if (challenge.IsExpired(now)) {
    throw RegistrationFailedError(VerificationFailure::kChallengeExpired,
                                  "registration challenge expired");
  }

  const SignedPayload& payload = attestation.signed_payload;
  auto key = PublicKey::FromDer(attestation.public_key);
  if (!key || key->ModulusBits() != kRsaModulusBits ||
      payload.challenge_hash != Sha256(ByteSpan(challenge_nonce)) ||
      !VerifySignature(*key, payload, attestation.signature)) {
    throw RegistrationFailedError(VerificationFailure::kBadSignature,
                                  "attestation signature does not verify");
  }
  if (payload.rp_id_hash != rp_id_hash_) {
    throw RegistrationFailedError(VerificationFailure::kRpMismatch,
                                  "attestation is bound to another RP");
  }

  Credential credential;
  credential.credential_id = attestation.credential_id;
  credential.user_id = challenge.user_id;
  credential.rp_id = challenge.rp_id;
  credential.public_key = attestation.public_key;
  credential.kind = attestation.kind;
  credential.device_id = attestation.device_id;
  credential.counter_seen = 0;
  credential.state = CredentialState::kActive;
  credential.created_at = now;
  store_->AddCredential(credential);
  return credential;
}

Challenge RelyingParty::BeginAuthentication(const std::string& user_id,
                                            const std::string& rp_id) {
  store_->GetUser(user_id);
  auto credentials = store_->CredentialsForUser(user_id);
  bool any_active = std::any_of(
      credentials.begin(), credentials.end(),
      [&](const Credential& c) { return c.active() && c.rp_id == rp_id; });
  if (!any_active) {
    throw NoCredentialError("user " + user_id +
                            " has no active credential for " + rp_id);
  }
  return IssueChallenge(user_id, rp_id, ChallengePurpose::kAuthentication);
}

VerificationResult RelyingParty::FinishAuthentication(
    const AssertionResponse& assertion,
    const Nonce& challenge_nonce) {
  using F = VerificationFailure;
  const TimestampMs now = clock_->NowMs();
  std::lock_guard lock(mu_);

  auto credential = store_->FindCredential(assertion.credential_id);
  if (!credential || !credential->active())
    return VerificationResult::Fail(F::kCredentialInactive);

  auto it = challenges_.find(challenge_nonce);
  if (it == challenges_.end() ||
      it->second.purpose != ChallengePurpose::kAuthentication ||
      it->second.user_id != credential->user_id) {
    return VerificationResult::Fail(F::kChallengeUnknown);
  }
  Challenge& challenge = it->second;
  if (!challenge.Consume())
    return VerificationResult::Fail(F::kChallengeReused);
  if (challenge.IsExpired(now))
    return VerificationResult::Fail(F::kChallengeExpired);

  const SignedPayload& payload = assertion.signed_payload;
  if (payload.challenge_hash != Sha256(ByteSpan(challenge_nonce)) ||
      !VerifySignature(credential->public_key, payload, assertion.signature)) {
    return VerificationResult::Fail(F::kBadSignature);
  }
  if (payload.rp_id_hash != rp_id_hash_)
    return VerificationResult::Fail(F::kRpMismatch);

  switch (store_->AdvanceCounter(credential->credential_id, payload.counter)) {
    case CounterUpdate::kAccepted:
      break;
    case CounterUpdate::kRegression:
      return VerificationResult::Fail(F::kCounterRegression);
    case CounterUpdate::kInactive:
    case CounterUpdate::kUnknown:
      // Revoked or wiped between the first check and now.
      challenge.consumed = false;
      return VerificationResult::Fail(F::kCredentialInactive);
  }

  VerificationResult result;
  result.ok = true;
  result.credential_id = credential->credential_id;
  result.user_id = credential->user_id;
  result.counter = payload.counter;
  return result;
}

SessionToken RelyingParty::IssueSession(const std::string& user_id,
                                        const AuthSession& session) {
  if (session.state != SessionState::kComplete) {
    throw SessionNotReadyError("session " + session.session_id + " is " +
                               std::string(ToString(session.state)));
  }
  if (session.user_id != user_id) {
    throw SessionNotReadyError("session " + session.session_id +
                               " belongs to another user");
  }
  for (AuthStep step : {AuthStep::kDeviceAttestation, AuthStep::kSecurityKey,
                        AuthStep::kFace}) {
    if (!session.HasEvidenceFor(step)) {
      throw SessionNotReadyError("session lacks evidence for " +
                                 std::string(ToString(step)));
    }
  }

  std::array<uint8_t, 32> raw;
  SecureRandom(raw);
  SessionToken token;
  token.token = Base64Encode(raw);
  token.user_id = user_id;
  token.session_id = session.session_id;
  token.issued_at = clock_->NowMs();
  token.expires_at = token.issued_at + config_.token_ttl_ms;

  std::lock_guard lock(mu_);
  tokens_[token.token] = token;
  return token;
}

std::optional<SessionToken> RelyingParty::IntrospectToken(
    const std::string& token) const {
  const TimestampMs now = clock_->NowMs();
  std::lock_guard lock(mu_);
  auto it = tokens_.find(token);
  if (it == tokens_.end() || now >= it->second.expires_at)
    return std::nullopt;
  return it->second;
}

std::optional<Challenge> RelyingParty::FindChallenge(const Nonce& nonce) const {
  std::lock_guard lock(mu_);
  auto it = challenges_.find(nonce);
  if (it == challenges_.end())
    return std::nullopt;
  return it->second;
}

size_t RelyingParty::pending_challenge_count() const {
  const TimestampMs now = clock_->NowMs();
  std::lock_guard lock(mu_);
  return static_cast<size_t>(
      std::count_if(challenges_.begin(), challenges_.end(),
                    [&](const auto& e) { return e.second.IsValid(now); }));
}

}  // namespace metasecure
