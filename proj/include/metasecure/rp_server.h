#ifndef METASECURE_RP_SERVER_H_
#define METASECURE_RP_SERVER_H_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "metasecure/auth_session.h"
#include "metasecure/authenticator.h"
#include "metasecure/clock.h"
#include "metasecure/credential_store.h"
#include "metasecure/crypto_core.h"
#include "metasecure/errors.h"

namespace metasecure {

enum class VerificationFailure {
  kBadSignature,
  kRpMismatch,
  kChallengeUnknown,
  kChallengeExpired,
  kChallengeReused,
  kCounterRegression,
  kCredentialInactive,
};

std::string_view ToString(VerificationFailure failure);
VerificationFailure VerificationFailureFromString(std::string_view s);

struct VerificationResult {
  bool ok = false;
  std::optional<VerificationFailure> failure;
  // Populated on success.
  std::string credential_id;
  std::string user_id;
  uint32_t counter = 0;

  static VerificationResult Fail(VerificationFailure f) {
    return VerificationResult{false, f, {}, {}, 0};
  }
};

// Registration failures carry the same failure codes as authentication.
class RegistrationFailedError : public RegistrationError {
 public:
  RegistrationFailedError(VerificationFailure failure, const std::string& detail)
      : RegistrationError(std::string(ToString(failure)) + ": " + detail),
        failure_(failure) {}
  VerificationFailure failure() const { return failure_; }

 private:
  VerificationFailure failure_;
};

struct RelyingPartyConfig {
  std::string rp_id = "meta.example";
  DurationMs challenge_ttl_ms = kDefaultChallengeTtlMs;
  DurationMs token_ttl_ms = kDefaultTokenTtlMs;
};

// The SSO relying party: registration and authentication ceremonies over a
// (possibly shared) CredentialStore, plus session tokens.
//
// Thread-safe. Challenge consumption and the counter update happen under one
// lock, so racing finishes on the same challenge produce exactly one success.
class RelyingParty {
 public:
  RelyingParty(RelyingPartyConfig config,
               std::shared_ptr<CredentialStore> store,
               std::shared_ptr<const Clock> clock = DefaultClock());

  const std::string& rp_id() const { return config_.rp_id; }
  const RelyingPartyConfig& config() const { return config_; }
  CredentialStore& store() { return *store_; }
  const CredentialStore& store() const { return *store_; }
  const Clock& clock() const { return *clock_; }

  UserIdentity RegisterUser(std::string email, std::string display_name);

  // Throws NoSuchUserError.
  Challenge BeginRegistration(const std::string& user_id,
                              const std::string& rp_id);
  // Throws RegistrationFailedError (ChallengeUnknown, ChallengeReused,
  // ChallengeExpired, BadSignature, RpMismatch).
  Credential FinishRegistration(const AttestationResponse& attestation,
                                const Nonce& challenge_nonce);

  // Throws NoSuchUserError, NoCredentialError.
  Challenge BeginAuthentication(const std::string& user_id,
                                const std::string& rp_id);

  // Never throws for protocol failures. Checks, in order: credential exists and
  // is Active, challenge known, unconsumed, unexpired, signature, RP binding,
  // counter. The challenge stays unconsumed only for CredentialInactive and
  // ChallengeUnknown.
  VerificationResult FinishAuthentication(const AssertionResponse& assertion,
                                          const Nonce& challenge_nonce);

  // Throws SessionNotReadyError unless |session| is Complete and owned by
  // |user_id|.
  SessionToken IssueSession(const std::string& user_id,
                            const AuthSession& session);
  // nullopt for unknown or expired tokens.
  std::optional<SessionToken> IntrospectToken(const std::string& token) const;

  // Snapshot of a pending challenge, for tests and diagnostics.
  std::optional<Challenge> FindChallenge(const Nonce& nonce) const;
  size_t pending_challenge_count() const;

 private:
  Challenge IssueChallenge(const std::string& user_id,
                           const std::string& rp_id,
                           ChallengePurpose purpose);
  void PruneLocked(TimestampMs now);

  const RelyingPartyConfig config_;
  const Sha256Digest rp_id_hash_;
  std::shared_ptr<CredentialStore> store_;
  std::shared_ptr<const Clock> clock_;

  mutable std::mutex mu_;
  std::map<Nonce, Challenge> challenges_;
  std::map<std::string, SessionToken> tokens_;
};

}  // namespace metasecure

#endif  // METASECURE_RP_SERVER_H_
