#include "metasecure/simulation.h"

#include <cmath>

#include "metasecure/errors.h"

namespace metasecure {

Embedding RandomEmbedding(Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Embedding v{};
  for (double& x : v)
    x = gauss(rng);
  return NormalizeEmbedding(v);
}

Embedding EmbeddingAtConfidence(const Embedding& base, double confidence,
                                Rng& rng) {
  if (!(confidence >= 0.0 && confidence <= 1.0))
    throw ValidationError("confidence must be in [0, 1]");
  const Embedding u = NormalizeEmbedding(base);
  // Gram-Schmidt: strip the |u| component from a random direction.
  Embedding w{};
  double norm = 0.0;
  do {
    w = RandomEmbedding(rng);
    double dot = 0.0;
    for (size_t i = 0; i < kEmbeddingDim; ++i)
      dot += w[i] * u[i];
    norm = 0.0;
    for (size_t i = 0; i < kEmbeddingDim; ++i) {
      w[i] -= dot * u[i];
      norm += w[i] * w[i];
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);

  const double cos = 2.0 * confidence - 1.0;
  const double sin = std::sqrt(std::max(0.0, 1.0 - cos * cos));
  Embedding out{};
  for (size_t i = 0; i < kEmbeddingDim; ++i)
    out[i] = cos * u[i] + sin * w[i] / norm;
  return out;
}

FaceEvidence LiveProbe(const Embedding& face, Rng& rng) {
  std::uniform_real_distribution<double> conf(0.95, 0.99);
  std::uniform_real_distribution<double> spoof(0.0, 0.2);
  Embedding v = EmbeddingAtConfidence(face, conf(rng), rng);
  auto f = ReferencePadClassifier::FeaturesForScore(spoof(rng));
  return FaceEvidence{{v.begin(), v.end()}, {f.begin(), f.end()}};
}

FaceEvidence SpoofProbe(const Embedding& face) {
  auto f = ReferencePadClassifier::FeaturesForScore(0.9);
  return FaceEvidence{{face.begin(), face.end()}, {f.begin(), f.end()}};
}

Credential RegisterDevice(ApiClient& client,
                          Authenticator& device,
                          const std::string& user_id,
                          const std::string& rp_id) {
  Challenge c = client.BeginRegistration(user_id, rp_id);
  AttestationResponse a = device.MakeCredential(c, rp_id, user_id);
  return client.FinishRegistration(a, c.nonce);
}

AssertionEvidence SignChallenge(ApiClient& client,
                                Authenticator& device,
                                const std::string& user_id,
                                const std::string& rp_id,
                                const std::string& credential_id,
                                bool device_confirmed) {
  Challenge c = client.BeginAuthentication(user_id, rp_id);
  AssertionEvidence e;
  e.assertion = device.GetAssertion(c, rp_id, credential_id);
  e.challenge_nonce = c.nonce;
  e.device_confirmed = device_confirmed;
  return e;
}

DemoUser EnrollDemoUser(ApiClient& client, const std::string& rp_id, Rng& rng) {
  std::uniform_int_distribution<uint64_t> tag;
  const std::string email = "user" + std::to_string(tag(rng)) + "@example.com";
  DemoUser u{client.CreateUser(email, "Demo User"),
             Authenticator(DeviceKind::kSmartphone),
             Authenticator(DeviceKind::kSecurityKey),
             {},
             {},
             RandomEmbedding(rng)};
  u.phone_credential =
      RegisterDevice(client, u.phone, u.user.user_id(), rp_id).credential_id;
  u.key_credential =
      RegisterDevice(client, u.key, u.user.user_id(), rp_id).credential_id;
  client.EnrollFace(u.user.user_id(), {u.face.begin(), u.face.end()});
  return u;
}

StepResult DriveLogin(ApiClient& client,
                      DemoUser& who,
                      const std::string& rp_id,
                      const FaceEvidence& face,
                      const std::string& service_provider) {
  const std::string& uid = who.user.user_id();
  AuthSession s = client.RequestLogin(uid, service_provider, "Quest 3 headset");

  StepResult r = client.Advance(
      s.session_id, AuthStep::kDeviceAttestation,
      SignChallenge(client, who.phone, uid, rp_id, who.phone_credential));
  if (!r.advanced)
    return r;
  r = client.Advance(
      s.session_id, AuthStep::kSecurityKey,
      SignChallenge(client, who.key, uid, rp_id, who.key_credential, true));
  if (!r.advanced)
    return r;
  return client.Advance(s.session_id, AuthStep::kFace, face);
}

}  // namespace metasecure
