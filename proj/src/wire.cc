#include "metasecure/wire.h"

#include <algorithm>

#include "metasecure/errors.h"

namespace metasecure::wire {

namespace {

template <size_t N>
std::array<uint8_t, N> FixedFromBase64(const std::string& b64,
                                       const char* what) {
  Bytes raw = Base64Decode(b64);
  if (raw.size() != N) {
    throw EncodingError(std::string(what) + " must be " + std::to_string(N) +
                        " bytes, got " + std::to_string(raw.size()));
  }
  std::array<uint8_t, N> out;
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

json OptionalString(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

}  // namespace

json ToJson(const Challenge& c) {
  return {{"nonce", Base64Encode(c.nonce)},
          {"rp_id", c.rp_id},
          {"user_id", c.user_id},
          {"purpose", ToString(c.purpose)},
          {"issued_at", c.issued_at},
          {"ttl_ms", c.ttl},
          {"consumed", c.consumed}};
}

Challenge ChallengeFromJson(const json& j) {
  Challenge c;
  c.nonce = DecodeNonce(j.at("nonce").get<std::string>());
  c.rp_id = j.at("rp_id").get<std::string>();
  c.user_id = j.at("user_id").get<std::string>();
  c.purpose = ChallengePurposeFromString(j.at("purpose").get<std::string>());
  c.issued_at = j.at("issued_at").get<TimestampMs>();
  c.ttl = j.at("ttl_ms").get<DurationMs>();
  c.consumed = j.value("consumed", false);
  return c;
}

std::string EncodePayload(const SignedPayload& p) {
  auto bytes = p.Serialize();
  return Base64Encode(bytes);
}

SignedPayload DecodePayload(const std::string& b64) {
  return SignedPayload::Deserialize(Base64Decode(b64));
}

Nonce DecodeNonce(const std::string& b64) {
  return FixedFromBase64<kNonceLength>(b64, "nonce");
}

json ToJson(const AttestationResponse& a) {
  return {{"credential_id", a.credential_id},
          {"public_key", Base64Encode(a.public_key)},
          {"device_id", a.device_id},
          {"kind", ToString(a.kind)},
          {"signed_payload", EncodePayload(a.signed_payload)},
          {"signature", Base64Encode(a.signature)}};
}

AttestationResponse AttestationFromJson(const json& j) {
  AttestationResponse a;
  a.credential_id = j.at("credential_id").get<std::string>();
  a.public_key = Base64Decode(j.at("public_key").get<std::string>());
  a.device_id = j.at("device_id").get<std::string>();
  a.kind = DeviceKindFromString(j.at("kind").get<std::string>());
  a.signed_payload = DecodePayload(j.at("signed_payload").get<std::string>());
  a.signature = Base64Decode(j.at("signature").get<std::string>());
  return a;
}

json ToJson(const AssertionResponse& a) {
  return {{"credential_id", a.credential_id},
          {"signed_payload", EncodePayload(a.signed_payload)},
          {"signature", Base64Encode(a.signature)}};
}

AssertionResponse AssertionFromJson(const json& j) {
  AssertionResponse a;
  a.credential_id = j.at("credential_id").get<std::string>();
  a.signed_payload = DecodePayload(j.at("signed_payload").get<std::string>());
  a.signature = Base64Decode(j.at("signature").get<std::string>());
  return a;
}

json ToJson(const Credential& c) {
  return {{"credential_id", c.credential_id},
          {"user_id", c.user_id},
          {"rp_id", c.rp_id},
          {"public_key", Base64Encode(c.public_key)},
          {"kind", ToString(c.kind)},
          {"device_id", c.device_id},
          {"counter_seen", c.counter_seen},
          {"state", ToString(c.state)},
          {"created_at", c.created_at}};
}

Credential CredentialFromJson(const json& j) {
  Credential c;
  c.credential_id = j.at("credential_id").get<std::string>();
  c.user_id = j.at("user_id").get<std::string>();
  c.rp_id = j.at("rp_id").get<std::string>();
  c.public_key = Base64Decode(j.at("public_key").get<std::string>());
  c.kind = DeviceKindFromString(j.at("kind").get<std::string>());
  c.device_id = j.at("device_id").get<std::string>();
  c.counter_seen = j.at("counter_seen").get<uint32_t>();
  c.state = CredentialStateFromString(j.at("state").get<std::string>());
  c.created_at = j.at("created_at").get<TimestampMs>();
  return c;
}

json ToJson(const CredentialSummary& c) {
  return {{"credential_id", c.credential_id},
          {"user_id", c.user_id},
          {"rp_id", c.rp_id},
          {"kind", ToString(c.kind)},
          {"device_id", c.device_id},
          {"state", ToString(c.state)},
          {"counter_seen", c.counter_seen},
          {"created_at", c.created_at},
          {"public_key", Base64Encode(c.public_key)}};
}

json ToJson(const UserIdentity& u) {
  return {{"user_id", u.user_id()},
          {"email", u.email()},
          {"display_name", u.display_name()},
          {"face_template_ref", OptionalString(u.face_template_ref())}};
}

UserIdentity UserFromJson(const json& j) {
  std::optional<std::string> face;
  if (j.contains("face_template_ref") && !j.at("face_template_ref").is_null())
    face = j.at("face_template_ref").get<std::string>();
  return UserIdentity(j.at("user_id").get<std::string>(),
                      j.at("email").get<std::string>(),
                      j.at("display_name").get<std::string>(), face);
}

json ToJson(const VerificationResult& r) {
  json j = {{"ok", r.ok}};
  j["failure"] = r.failure ? json(ToString(*r.failure)) : json(nullptr);
  if (r.ok) {
    j["credential_id"] = r.credential_id;
    j["user_id"] = r.user_id;
    j["counter"] = r.counter;
  }
  return j;
}

VerificationResult VerificationResultFromJson(const json& j) {
  VerificationResult r;
  r.ok = j.at("ok").get<bool>();
  if (!j.at("failure").is_null())
    r.failure = VerificationFailureFromString(j.at("failure").get<std::string>());
  r.credential_id = j.value("credential_id", "");
  r.user_id = j.value("user_id", "");
  r.counter = j.value("counter", 0u);
  return r;
}

json ToJson(const SessionToken& t) {
  return {{"token", t.token},
          {"user_id", t.user_id},
          {"session_id", t.session_id},
          {"issued_at", t.issued_at},
          {"expires_at", t.expires_at}};
}

SessionToken SessionTokenFromJson(const json& j) {
  SessionToken t;
  t.token = j.at("token").get<std::string>();
  t.user_id = j.at("user_id").get<std::string>();
  t.session_id = j.at("session_id").get<std::string>();
  t.issued_at = j.at("issued_at").get<TimestampMs>();
  t.expires_at = j.at("expires_at").get<TimestampMs>();
  return t;
}

json ToJson(const AuthSession& s) {
  json evidence = json::array();
  for (const auto& e : s.step_evidence) {
    evidence.push_back({{"step", ToString(e.step)},
                        {"credential_id", e.credential_id},
                        {"counter", e.counter},
                        {"confidence", e.confidence},
                        {"accepted_at", e.accepted_at}});
  }
  json j = {{"session_id", s.session_id},
            {"user_id", s.user_id},
            {"service_provider", s.service_provider},
            {"origin_device_descriptor", s.origin_device_descriptor},
            {"state", ToString(s.state)},
            {"step_evidence", std::move(evidence)},
            {"created_at", s.created_at},
            {"ttl_ms", s.ttl}};
  auto next = NextStep(s.state);
  j["next_step"] = next ? json(ToString(*next)) : json(nullptr);
  j["token"] = s.token ? ToJson(*s.token) : json(nullptr);
  return j;
}

AuthSession AuthSessionFromJson(const json& j) {
  AuthSession s;
  s.session_id = j.at("session_id").get<std::string>();
  s.user_id = j.at("user_id").get<std::string>();
  s.service_provider = j.at("service_provider").get<std::string>();
  s.origin_device_descriptor = j.at("origin_device_descriptor").get<std::string>();
  s.state = SessionStateFromString(j.at("state").get<std::string>());
  for (const auto& e : j.at("step_evidence")) {
    s.step_evidence.push_back(StepEvidenceRecord{
        AuthStepFromString(e.at("step").get<std::string>()),
        e.at("credential_id").get<std::string>(), e.at("counter").get<uint32_t>(),
        e.at("confidence").get<double>(), e.at("accepted_at").get<TimestampMs>()});
  }
  s.created_at = j.at("created_at").get<TimestampMs>();
  s.ttl = j.at("ttl_ms").get<DurationMs>();
  if (j.contains("token") && !j.at("token").is_null())
    s.token = SessionTokenFromJson(j.at("token"));
  return s;
}

json ToJson(const PendingRequest& p) {
  return {{"session_id", p.session_id},
          {"service_provider", p.service_provider},
          {"origin_device_descriptor", p.origin_device_descriptor},
          {"requested_at", p.requested_at},
          {"state", ToString(p.state)},
          {"next_step", ToString(p.next_step)}};
}

PendingRequest PendingRequestFromJson(const json& j) {
  return PendingRequest{j.at("session_id").get<std::string>(),
                        j.at("service_provider").get<std::string>(),
                        j.at("origin_device_descriptor").get<std::string>(),
                        j.at("requested_at").get<TimestampMs>(),
                        SessionStateFromString(j.at("state").get<std::string>()),
                        AuthStepFromString(j.at("next_step").get<std::string>())};
}

json ToJson(const PadVerdict& v) {
  return {{"class", ToString(v.verdict)}, {"spoof_score", v.spoof_score}};
}

json ToJson(const FaceDecision& d) {
  return {{"accepted", d.accepted},
          {"confidence", d.confidence},
          {"pad", ToJson(d.pad)}};
}

FaceDecision FaceDecisionFromJson(const json& j) {
  FaceDecision d;
  d.accepted = j.at("accepted").get<bool>();
  d.confidence = j.at("confidence").get<double>();
  d.pad.verdict = PadClassFromString(j.at("pad").at("class").get<std::string>());
  d.pad.spoof_score = j.at("pad").at("spoof_score").get<double>();
  return d;
}

json ToJson(const StepResult& r) {
  json j = {{"session", ToJson(r.session)}, {"advanced", r.advanced}};
  j["failure"] = r.failure ? json(ToString(*r.failure)) : json(nullptr);
  j["verification_failure"] =
      r.verification ? json(ToString(*r.verification)) : json(nullptr);
  j["face"] = r.face ? ToJson(*r.face) : json(nullptr);
  return j;
}

StepResult StepResultFromJson(const json& j) {
  static const std::pair<StepFailure, std::string_view> kNames[] = {
      {StepFailure::kWrongEvidenceType, "WrongEvidenceType"},
      {StepFailure::kCredentialMismatch, "CredentialMismatch"},
      {StepFailure::kDeviceNotConfirmed, "DeviceNotConfirmed"},
      {StepFailure::kAssertionRejected, "AssertionRejected"},
      {StepFailure::kFaceRejected, "FaceRejected"},
  };
  StepResult r;
  r.session = AuthSessionFromJson(j.at("session"));
  r.advanced = j.at("advanced").get<bool>();
  if (!j.at("failure").is_null()) {
    const std::string name = j.at("failure").get<std::string>();
    auto it = std::find_if(std::begin(kNames), std::end(kNames),
                           [&](const auto& p) { return p.second == name; });
    if (it == std::end(kNames))
      throw EncodingError("unknown step failure: " + name);
    r.failure = it->first;
  }
  if (!j.at("verification_failure").is_null()) {
    r.verification = VerificationFailureFromString(
        j.at("verification_failure").get<std::string>());
  }
  if (!j.at("face").is_null())
    r.face = FaceDecisionFromJson(j.at("face"));
  return r;
}

json ToJson(const StepEvidence& e) {
  if (const auto* a = std::get_if<AssertionEvidence>(&e)) {
    return {{"type", "assertion"},
            {"assertion", ToJson(a->assertion)},
            {"challenge_nonce", Base64Encode(a->challenge_nonce)},
            {"device_confirmed", a->device_confirmed}};
  }
  const auto& f = std::get<FaceEvidence>(e);
  return {{"type", "face"},
          {"probe_vector", f.probe_vector},
          {"probe_features", f.probe_features}};
}

StepEvidence StepEvidenceFromJson(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "assertion") {
    AssertionEvidence a;
    a.assertion = AssertionFromJson(j.at("assertion"));
    a.challenge_nonce = DecodeNonce(j.at("challenge_nonce").get<std::string>());
    a.device_confirmed = j.value("device_confirmed", false);
    return a;
  }
  if (type == "face") {
    FaceEvidence f;
    f.probe_vector = j.at("probe_vector").get<std::vector<double>>();
    f.probe_features = j.at("probe_features").get<std::vector<double>>();
    return f;
  }
  throw EncodingError("unknown evidence type: " + type);
}

json ToJson(const AdminAction& a) {
  return json::parse(AuditLog::FormatLine(a));
}

json ErrorBody(const Error& e) {
  json err = {{"kind", e.kind()}, {"message", e.what()}};
  if (const auto* reg = dynamic_cast<const RegistrationFailedError*>(&e))
    err["failure"] = ToString(reg->failure());
  return {{"error", std::move(err)}};
}

}  // namespace metasecure::wire
