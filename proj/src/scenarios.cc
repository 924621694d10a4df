#include "metasecure/scenarios.h"

#include <sstream>

#include "metasecure/errors.h"

namespace metasecure {

namespace {

constexpr std::string_view kNames[] = {"HonestLogin", "Replay",    "PhishingRp",
                                       "ClonedKey",   "SpoofFace", "WipedKey"};

std::string Failure(const VerificationResult& r) {
  if (r.ok)
    return "ok";
  return std::string(ToString(*r.failure));
}

std::string Expected(Scenario s) {
  switch (s) {
    case Scenario::kHonestLogin:
      return "complete+token";
    case Scenario::kReplay:
      return "ChallengeReused";
    case Scenario::kPhishingRp:
      return "RpMismatch";
    case Scenario::kClonedKey:
      return "CounterRegression";
    case Scenario::kSpoofFace:
      return "accepted=false pad=Spoof";
    case Scenario::kWipedKey:
      return "CredentialInactive";
  }
  return "";
}

std::string Run(Scenario s,
                const ScenarioTargets& t,
                Rng& rng,
                std::vector<std::string>& steps) {
  ApiClient client(t.server_url, t.admin_secret);
  const std::string rp_id = client.RpId();
  steps.push_back("enroll user, phone, key and face at " + rp_id);
  DemoUser who = EnrollDemoUser(client, rp_id, rng);
  const std::string& uid = who.user.user_id();

  switch (s) {
    case Scenario::kHonestLogin: {
      StepResult r = DriveLogin(client, who, rp_id, LiveProbe(who.face, rng));
      steps.push_back("login ended in " + std::string(ToString(r.session.state)));
      if (r.session.state != SessionState::kComplete || !r.session.token)
        return std::string(ToString(r.session.state));
      auto token = client.Introspect(r.session.token->token);
      steps.push_back(std::string("token introspects ") +
                      (token ? "active" : "inactive"));
      return token && token->user_id == uid ? "complete+token"
                                            : "complete without live token";
    }
    case Scenario::kReplay: {
      AssertionEvidence e =
          SignChallenge(client, who.key, uid, rp_id, who.key_credential);
      VerificationResult first =
          client.FinishAuthentication(e.assertion, e.challenge_nonce);
      steps.push_back("first submission: " + Failure(first));
      if (!first.ok)
        return "first submission failed: " + Failure(first);
      VerificationResult again =
          client.FinishAuthentication(e.assertion, e.challenge_nonce);
      steps.push_back("resubmission: " + Failure(again));
      return Failure(again);
    }
    case Scenario::kPhishingRp: {
      if (t.phishing_url.empty())
        throw ValidationError("PhishingRp needs a second server");
      ApiClient evil(t.phishing_url);
      steps.push_back("look-alike server has rp id " + evil.RpId());
      // The look-alike relays a challenge scoped to the real rp id, the
      // device signs it, and the look-alike tries to accept the assertion.
      Challenge c = evil.BeginAuthentication(uid, rp_id);
      AssertionResponse a = who.key.GetAssertion(c, rp_id, who.key_credential);
      VerificationResult r = evil.FinishAuthentication(a, c.nonce);
      steps.push_back("look-alike verification: " + Failure(r));
      return Failure(r);
    }
    case Scenario::kClonedKey: {
      Authenticator clone = who.key.Fork();
      steps.push_back("cloned security key " + who.key.device_id());
      AssertionEvidence e =
          SignChallenge(client, who.key, uid, rp_id, who.key_credential);
      VerificationResult genuine =
          client.FinishAuthentication(e.assertion, e.challenge_nonce);
      steps.push_back("genuine key: " + Failure(genuine));
      AssertionEvidence c =
          SignChallenge(client, clone, uid, rp_id, who.key_credential);
      VerificationResult cloned =
          client.FinishAuthentication(c.assertion, c.challenge_nonce);
      steps.push_back("clone at counter " +
                      std::to_string(c.assertion.signed_payload.counter) +
                      ": " + Failure(cloned));
      return Failure(cloned);
    }
    case Scenario::kSpoofFace: {
      StepResult r = DriveLogin(client, who, rp_id, SpoofProbe(who.face));
      steps.push_back("login ended in " + std::string(ToString(r.session.state)));
      if (!r.face)
        return "no face decision";
      steps.push_back("pad score " + std::to_string(r.face->pad.spoof_score));
      return std::string("accepted=") + (r.face->accepted ? "true" : "false") +
             " pad=" + std::string(ToString(r.face->pad.verdict));
    }
    case Scenario::kWipedKey: {
      // A challenge taken out before the wipe is the last way in.
      Challenge c = client.BeginAuthentication(uid, rp_id);
      size_t n = client.AdminWipe(who.key.device_id());
      steps.push_back("admin wiped " + std::to_string(n) + " credential(s)");
      AssertionResponse a = who.key.GetAssertion(c, rp_id, who.key_credential);
      VerificationResult r = client.FinishAuthentication(a, c.nonce);
      steps.push_back("late assertion: " + Failure(r));
      size_t erased = who.key.ApplyDirectives(client.Directives(who.key.device_id()));
      steps.push_back("device applied wipe, erased " + std::to_string(erased) +
                      " key(s)");
      return Failure(r);
    }
  }
  return "unknown scenario";
}

}  // namespace

std::string_view ToString(Scenario s) {
  return kNames[static_cast<int>(s)];
}

Scenario ScenarioFromString(std::string_view s) {
  for (Scenario sc : AllScenarios()) {
    if (ToString(sc) == s)
      return sc;
  }
  throw ValidationError("unknown scenario '" + std::string(s) + "'");
}

const std::vector<Scenario>& AllScenarios() {
  static const std::vector<Scenario> all = {
      Scenario::kHonestLogin, Scenario::kReplay,    Scenario::kPhishingRp,
      Scenario::kClonedKey,   Scenario::kSpoofFace, Scenario::kWipedKey};
  return all;
}

ScenarioResult RunScenario(Scenario scenario,
                           const ScenarioTargets& targets,
                           Rng& rng) {
  ScenarioResult r;
  r.name = std::string(ToString(scenario));
  r.expected = Expected(scenario);
  try {
    r.observed = Run(scenario, targets, rng, r.steps);
  } catch (const TransportError&) {
    throw;
  } catch (const Error& e) {
    r.observed = e.kind() + ": " + e.what();
  }
  r.pass = r.observed == r.expected;
  return r;
}

ScenarioHarness::ScenarioHarness(std::string rp_id, std::string admin_secret)
    : admin_secret_(std::move(admin_secret)) {
  ServicesOptions main;
  main.rp.rp_id = std::move(rp_id);
  main.admin_secret = admin_secret_;
  Services real = MakeServices(main);

  ServicesOptions evil;
  evil.rp.rp_id = "evil.example";
  evil.admin_secret = admin_secret_;
  evil.store = std::shared_ptr<CredentialStore>(real.rp, &real.rp->store());
  server_ = std::make_unique<ApiServer>(std::move(real));
  phishing_ = std::make_unique<ApiServer>(MakeServices(evil));
  server_->Start();
  phishing_->Start();
}

ScenarioHarness::~ScenarioHarness() {
  phishing_->Stop();
  server_->Stop();
}

ScenarioTargets ScenarioHarness::targets() const {
  return ScenarioTargets{server_->base_url(), phishing_->base_url(),
                         admin_secret_};
}

std::string FormatScenarioResult(const ScenarioResult& r) {
  std::ostringstream out;
  out << (r.pass ? "PASS " : "FAIL ") << r.name << "  expected=" << r.expected
      << "  observed=" << r.observed << "\n";
  for (const auto& s : r.steps)
    out << "    - " << s << "\n";
  return out.str();
}

}  // namespace metasecure
