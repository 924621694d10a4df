#include "metasecure/http_api.h"

#include <gtest/gtest.h>

#include "httplib.h"
#include "metasecure/clock.h"
#include "metasecure/errors.h"
#include "metasecure/simulation.h"
#include "metasecure/wire.h"

namespace metasecure {
namespace {

using nlohmann::json;

constexpr char kSecret[] = "s3cret";

class HttpApiTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ServicesOptions opts;
    opts.rp = RelyingPartyConfig{"meta.example"};
    opts.admin_secret = kSecret;
    server_ = new ApiServer(MakeServices(opts));
    server_->Start();
  }
  static void TearDownTestSuite() {
    server_->Stop();
    delete server_;
  }

  HttpApiTest()
      : client_(server_->base_url(), kSecret),
        raw_("127.0.0.1", server_->port()),
        rng_(++seed_) {}

  httplib::Result RawPost(const std::string& path, const std::string& body,
                          const std::string& bearer = "") {
    httplib::Headers h;
    if (!bearer.empty())
      h.emplace("Authorization", "Bearer " + bearer);
    return raw_.Post(path, h, body, "application/json");
  }

  static json ErrorOf(const httplib::Result& r) {
    return json::parse(r->body).at("error");
  }

  DemoUser Demo() { return EnrollDemoUser(client_, "meta.example", rng_); }

  static inline uint64_t seed_ = 0;
  static inline ApiServer* server_ = nullptr;
  ApiClient client_;
  httplib::Client raw_;
  Rng rng_;
};

TEST_F(HttpApiTest, InfoAndCors) {
  auto r = raw_.Get("/v1/info");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  json j = json::parse(r->body);
  EXPECT_EQ(j["rp_id"], "meta.example");
  EXPECT_EQ(j["session_ttl_ms"], kDefaultSessionTtlMs);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(client_.RpId(), "meta.example");
  auto pre = raw_.Options("/v1/login/advance");
  ASSERT_TRUE(pre);
  EXPECT_LT(pre->status, 300);
}

TEST_F(HttpApiTest, PasswordlessCeremonyAndReplay) {
  UserIdentity u = client_.CreateUser("http-a@example.com", "A");
  Authenticator key(DeviceKind::kSecurityKey);
  Credential c = RegisterDevice(client_, key, u.user_id(), "meta.example");
  EXPECT_EQ(c.user_id, u.user_id());
  EXPECT_EQ(c.counter_seen, 0u);

  Challenge ch = client_.BeginAuthentication(u.user_id());
  EXPECT_EQ(ch.rp_id, "meta.example");
  AssertionResponse a = key.GetAssertion(ch, "meta.example", c.credential_id);
  VerificationResult ok = client_.FinishAuthentication(a, ch.nonce);
  EXPECT_TRUE(ok.ok);
  EXPECT_EQ(ok.counter, 1u);
  VerificationResult replay = client_.FinishAuthentication(a, ch.nonce);
  EXPECT_FALSE(replay.ok);
  EXPECT_EQ(replay.failure, VerificationFailure::kChallengeReused);
}

TEST_F(HttpApiTest, TripleLayerLoginOverHttp) {
  DemoUser who = Demo();
  StepResult r = DriveLogin(client_, who, "meta.example",
                            LiveProbe(who.face, rng_));
  ASSERT_TRUE(r.advanced);
  EXPECT_EQ(r.session.state, SessionState::kComplete);
  ASSERT_TRUE(r.session.token.has_value());
  auto live = client_.Introspect(r.session.token->token);
  ASSERT_TRUE(live.has_value());
  EXPECT_EQ(live->user_id, who.user.user_id());
  EXPECT_FALSE(client_.Introspect("bogus").has_value());
  EXPECT_EQ(client_.Status(r.session.session_id).state,
            SessionState::kComplete);
  EXPECT_TRUE(client_.Feed(who.user.user_id()).empty());

  StepResult spoof = DriveLogin(client_, who, "meta.example",
                                SpoofProbe(who.face));
  EXPECT_FALSE(spoof.advanced);
  EXPECT_EQ(spoof.failure, StepFailure::kFaceRejected);
  ASSERT_TRUE(spoof.face.has_value());
  EXPECT_EQ(spoof.face->pad.verdict, PadClass::kSpoof);
  EXPECT_EQ(spoof.session.state, SessionState::kKeyVerified);
}

TEST_F(HttpApiTest, FeedAndDeny) {
  DemoUser who = Demo();
  AuthSession s = client_.RequestLogin(who.user.user_id(), "quest-store",
                                       "Quest Pro");
  auto feed = client_.Feed(who.user.user_id());
  ASSERT_EQ(feed.size(), 1u);
  EXPECT_EQ(feed[0].session_id, s.session_id);
  EXPECT_EQ(feed[0].origin_device_descriptor, "Quest Pro");
  EXPECT_EQ(feed[0].next_step, AuthStep::kDeviceAttestation);
  EXPECT_EQ(client_.Deny(s.session_id).state, SessionState::kDenied);
  EXPECT_THROW(client_.Deny(s.session_id), SessionTerminalError);
  EXPECT_TRUE(client_.Feed(who.user.user_id()).empty());
}

TEST_F(HttpApiTest, TypedErrorsCrossTheWire) {
  EXPECT_THROW(client_.Status("sess-none"), NoSuchSessionError);
  EXPECT_THROW(client_.BeginAuthentication("user-none"), NoSuchUserError);
  UserIdentity u = client_.CreateUser("http-b@example.com", "B");
  EXPECT_THROW(client_.CreateUser("http-b@example.com", "B"),
               DuplicateEmailError);
  EXPECT_THROW(client_.RequestLogin(u.user_id(), "sp", "x"),
               PrerequisiteError);

  DemoUser who = Demo();
  AuthSession s = client_.RequestLogin(who.user.user_id(), "sp", "x");
  EXPECT_THROW(client_.Advance(s.session_id, AuthStep::kFace,
                               LiveProbe(who.face, rng_)),
               OutOfOrderError);

  Authenticator key(DeviceKind::kSecurityKey);
  Challenge ch = client_.BeginRegistration(u.user_id());
  AttestationResponse att = key.MakeCredential(ch, "meta.example", u.user_id());
  att.public_key[10] ^= 1;
  try {
    client_.FinishRegistration(att, ch.nonce);
    ADD_FAILURE() << "registration with a damaged key succeeded";
  } catch (const RegistrationFailedError& e) {
    EXPECT_EQ(e.failure(), VerificationFailure::kBadSignature);
  }
}

TEST_F(HttpApiTest, StatusCodes) {
  auto bad_json = RawPost("/v1/users", "{not json");
  ASSERT_TRUE(bad_json);
  EXPECT_EQ(bad_json->status, 400);
  EXPECT_EQ(ErrorOf(bad_json)["kind"], "EncodingError");

  auto missing = RawPost("/v1/users", R"({"email":"x@example.com"})");
  EXPECT_EQ(missing->status, 400);

  RawPost("/v1/users", R"({"email":"dup@example.com","display_name":"D"})");
  auto dup =
      RawPost("/v1/users", R"({"email":"dup@example.com","display_name":"D"})");
  EXPECT_EQ(dup->status, 409);
  EXPECT_EQ(ErrorOf(dup)["kind"], "DuplicateEmailError");

  auto unknown = raw_.Get("/v1/login/status?session_id=sess-none");
  EXPECT_EQ(unknown->status, 404);

  json user = json::parse(RawPost("/v1/users",
                                  R"({"email":"nodev@example.com",)"
                                  R"("display_name":"N"})")
                              ->body);
  std::string uid = user["user"]["user_id"].get<std::string>();
  auto prereq = RawPost("/v1/login/request",
                        json{{"user_id", uid},
                             {"service_provider", "sp"},
                             {"origin_device_descriptor", "x"}}
                            .dump());
  EXPECT_EQ(prereq->status, 412);

  auto reg = RawPost("/v1/registration/finish",
                     R"({"attestation":{},"challenge_nonce":"AAAA"})");
  EXPECT_EQ(reg->status, 400);

  // A well-formed attestation for a challenge the server never issued.
  Authenticator key(DeviceKind::kSecurityKey);
  Challenge fake = client_.BeginRegistration(uid);
  AttestationResponse att = key.MakeCredential(fake, "meta.example", uid);
  fake.nonce[0] ^= 1;
  auto unissued = RawPost("/v1/registration/finish",
                          json{{"attestation", wire::ToJson(att)},
                               {"challenge_nonce",
                                Base64Encode(ByteSpan(fake.nonce.data(),
                                                      fake.nonce.size()))}}
                              .dump());
  EXPECT_EQ(unissued->status, 422);
  EXPECT_EQ(ErrorOf(unissued)["kind"], "RegistrationError");
  EXPECT_TRUE(ErrorOf(unissued).contains("failure"));
}

TEST_F(HttpApiTest, AdminRequiresBearer) {
  auto none = raw_.Get("/admin/audit");
  EXPECT_EQ(none->status, 401);
  auto wrong = RawPost("/admin/wipe", R"({"device_id":"d"})", "nope");
  EXPECT_EQ(wrong->status, 401);
  ApiClient anon(server_->base_url());
  EXPECT_THROW(anon.AdminList("user-none"), UnauthorizedError);
}

TEST_F(HttpApiTest, AdminRevokeAndWipe) {
  DemoUser who = Demo();
  auto list = client_.AdminList(who.user.user_id());
  ASSERT_EQ(list.size(), 2u);

  CredentialSummary revoked = client_.AdminRevoke(who.phone_credential);
  EXPECT_EQ(revoked.state, CredentialState::kRevoked);
  EXPECT_THROW(client_.AdminRevoke(who.phone_credential), AlreadyTerminalError);

  EXPECT_EQ(client_.AdminWipe(who.key.device_id()), 1u);
  auto directives = client_.Directives(who.key.device_id());
  ASSERT_EQ(directives.size(), 1u);
  EXPECT_EQ(directives[0], DeviceDirective::kWipe);
  EXPECT_TRUE(client_.Directives(who.key.device_id()).empty());
  EXPECT_THROW(client_.AdminWipe("dev-none"), NoSuchDeviceError);

  httplib::Headers h = {{"Authorization", std::string("Bearer ") + kSecret}};
  auto audit = raw_.Get("/admin/audit", h);
  ASSERT_EQ(audit->status, 200);
  json actions = json::parse(audit->body)["actions"];
  ASSERT_GE(actions.size(), 3u);
  EXPECT_EQ(actions.back()["kind"], "RemoteWipe");
  EXPECT_EQ(actions.back()["target"], who.key.device_id());
}

TEST(HttpApiEmptySecret, AdminAlwaysRejected) {
  ServicesOptions opts;
  opts.admin_secret = "";
  ApiServer server(MakeServices(opts));
  server.Start();
  httplib::Client raw("127.0.0.1", server.port());
  auto r = raw.Get("/admin/audit", {{"Authorization", "Bearer "}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 401);
  server.Stop();
}

TEST(HttpApiClient, DeadPortIsTransportError) {
  ApiServer probe(MakeServices(ServicesOptions{}));
  int port = probe.Start();
  probe.Stop();
  ApiClient client("http://127.0.0.1:" + std::to_string(port));
  EXPECT_THROW(client.RpId(), TransportError);
}

TEST(Wire, RoundTrips) {
  auto clock = std::make_shared<ManualClock>();
  auto store = std::make_shared<CredentialStore>();
  RelyingParty rp(RelyingPartyConfig{"meta.example"}, store, clock);
  UserIdentity u = rp.RegisterUser("wire@example.com", "W");
  Authenticator key(DeviceKind::kSecurityKey, clock);
  Challenge reg = rp.BeginRegistration(u.user_id(), "meta.example");
  AttestationResponse att = key.MakeCredential(reg, "meta.example", u.user_id());

  Challenge c2 = wire::ChallengeFromJson(wire::ToJson(reg));
  EXPECT_EQ(c2.nonce, reg.nonce);
  EXPECT_EQ(c2.expires_at(), reg.expires_at());
  EXPECT_EQ(wire::ToJson(wire::AttestationFromJson(wire::ToJson(att))),
            wire::ToJson(att));

  Credential cred = rp.FinishRegistration(att, reg.nonce);
  EXPECT_EQ(wire::ToJson(wire::CredentialFromJson(wire::ToJson(cred))),
            wire::ToJson(cred));
  Challenge auth = rp.BeginAuthentication(u.user_id(), "meta.example");
  AssertionResponse a = key.GetAssertion(auth, "meta.example",
                                         cred.credential_id);
  AssertionResponse a2 = wire::AssertionFromJson(wire::ToJson(a));
  EXPECT_EQ(a2.signature, a.signature);
  EXPECT_EQ(wire::EncodePayload(a2.signed_payload),
            wire::EncodePayload(a.signed_payload));
  EXPECT_TRUE(rp.FinishAuthentication(a2, auth.nonce).ok);

  StepEvidence ev = AssertionEvidence{a, auth.nonce, true};
  EXPECT_EQ(wire::ToJson(wire::StepEvidenceFromJson(wire::ToJson(ev))),
            wire::ToJson(ev));
  StepEvidence face = FaceEvidence{{0.5, 0.25}, {0.1, 0.2, 0.3, 0.4}};
  EXPECT_EQ(wire::ToJson(wire::StepEvidenceFromJson(wire::ToJson(face))),
            wire::ToJson(face));

  AuthSession s;
  s.session_id = "sess-1";
  s.user_id = u.user_id();
  s.service_provider = "sp";
  s.state = SessionState::kKeyVerified;
  s.step_evidence.push_back({AuthStep::kSecurityKey, "cred", 4, 0.0, 9});
  s.created_at = 5;
  s.token = SessionToken{"tok", u.user_id(), "sess-1", 1, 2};
  EXPECT_EQ(wire::ToJson(wire::AuthSessionFromJson(wire::ToJson(s))),
            wire::ToJson(s));

  EXPECT_THROW(wire::StepEvidenceFromJson(json{{"type", "retina"}}),
               EncodingError);
  EXPECT_THROW(wire::DecodeNonce("AAAA"), EncodingError);
}

}  // namespace
}  // namespace metasecure
