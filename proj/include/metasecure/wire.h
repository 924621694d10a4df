#ifndef METASECURE_WIRE_H_
#define METASECURE_WIRE_H_

// JSON encodings of the protocol types. Byte fields are standard base64;
// field names are listed in docs/wire-schema.md and must stay stable.

#include "json.hpp"
#include "metasecure/auth_session.h"
#include "metasecure/authenticator.h"
#include "metasecure/credential_store.h"
#include "metasecure/crypto_core.h"
#include "metasecure/face_identity.h"
#include "metasecure/key_admin.h"
#include "metasecure/orchestrator.h"
#include "metasecure/rp_server.h"

namespace metasecure::wire {

using nlohmann::json;

json ToJson(const Challenge& c);
Challenge ChallengeFromJson(const json& j);

// SignedPayload travels as base64 of its 69-byte serialization.
std::string EncodePayload(const SignedPayload& p);
SignedPayload DecodePayload(const std::string& b64);

Nonce DecodeNonce(const std::string& b64);

json ToJson(const AttestationResponse& a);
AttestationResponse AttestationFromJson(const json& j);

json ToJson(const AssertionResponse& a);
AssertionResponse AssertionFromJson(const json& j);

json ToJson(const Credential& c);
Credential CredentialFromJson(const json& j);

json ToJson(const CredentialSummary& c);

json ToJson(const UserIdentity& u);
UserIdentity UserFromJson(const json& j);

json ToJson(const VerificationResult& r);
VerificationResult VerificationResultFromJson(const json& j);

json ToJson(const SessionToken& t);
SessionToken SessionTokenFromJson(const json& j);

json ToJson(const AuthSession& s);
AuthSession AuthSessionFromJson(const json& j);

json ToJson(const PendingRequest& p);
PendingRequest PendingRequestFromJson(const json& j);

json ToJson(const PadVerdict& v);
json ToJson(const FaceDecision& d);
FaceDecision FaceDecisionFromJson(const json& j);

json ToJson(const StepResult& r);
StepResult StepResultFromJson(const json& j);

json ToJson(const StepEvidence& e);
StepEvidence StepEvidenceFromJson(const json& j);

json ToJson(const AdminAction& a);

json ErrorBody(const Error& e);

}  // namespace metasecure::wire

#endif  // METASECURE_WIRE_H_
