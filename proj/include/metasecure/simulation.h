#ifndef METASECURE_SIMULATION_H_
#define METASECURE_SIMULATION_H_

// Client-side helpers that play the user's devices against an ApiServer:
// synthetic faces, device enrollment and the three login steps.

#include <random>
#include <string>

#include "metasecure/authenticator.h"
#include "metasecure/face_identity.h"
#include "metasecure/http_api.h"
#include "metasecure/orchestrator.h"

namespace metasecure {

using Rng = std::mt19937_64;

// Uniformly distributed unit vector.
Embedding RandomEmbedding(Rng& rng);

// Unit vector whose match confidence against |base| is exactly |confidence|
// (up to rounding). The orthogonal direction is random.
Embedding EmbeddingAtConfidence(const Embedding& base, double confidence,
                                Rng& rng);

// A live capture of |face|: confidence around 0.97 and a low spoof score.
FaceEvidence LiveProbe(const Embedding& face, Rng& rng);
// A photo of |face|: perfect match, high spoof score.
FaceEvidence SpoofProbe(const Embedding& face);

// Registers a new credential on |device| for |user_id| under the server's
// rp id. Returns the credential the server stored.
Credential RegisterDevice(ApiClient& client,
                          Authenticator& device,
                          const std::string& user_id,
                          const std::string& rp_id);

// Fetches an authentication challenge for |rp_id| and has |device| sign it.
AssertionEvidence SignChallenge(ApiClient& client,
                                Authenticator& device,
                                const std::string& user_id,
                                const std::string& rp_id,
                                const std::string& credential_id,
                                bool device_confirmed = true);

// A fully enrolled user: phone, security key and face.
struct DemoUser {
  UserIdentity user;
  Authenticator phone;
  Authenticator key;
  std::string phone_credential;
  std::string key_credential;
  Embedding face{};
};

DemoUser EnrollDemoUser(ApiClient& client, const std::string& rp_id, Rng& rng);

// Requests a login and drives the three steps in order, stopping at the
// first step that does not advance. |face| is the evidence for the last step.
StepResult DriveLogin(ApiClient& client,
                      DemoUser& who,
                      const std::string& rp_id,
                      const FaceEvidence& face,
                      const std::string& service_provider = "horizon-worlds");

}  // namespace metasecure

#endif  // METASECURE_SIMULATION_H_
