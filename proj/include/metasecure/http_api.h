#ifndef METASECURE_HTTP_API_H_
#define METASECURE_HTTP_API_H_

#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "metasecure/auth_session.h"
#include "metasecure/authenticator.h"
#include "metasecure/credential_store.h"
#include "metasecure/face_identity.h"
#include "metasecure/key_admin.h"
#include "metasecure/orchestrator.h"
#include "metasecure/rp_server.h"

namespace httplib {
class Server;
}

namespace metasecure {

// Everything one SSO deployment serves.
struct Services {
  std::shared_ptr<RelyingParty> rp;
  std::shared_ptr<FaceRegistry> faces;
  std::shared_ptr<KeyAdmin> admin;
  std::shared_ptr<Orchestrator> orchestrator;
  std::string admin_secret;
};

struct ServicesOptions {
  RelyingPartyConfig rp;
  DurationMs session_ttl_ms = kDefaultSessionTtlMs;
  std::string admin_secret = "change-me";
  std::shared_ptr<const Clock> clock = DefaultClock();
  // Shared with other deployments when set (multi-RP SSO).
  std::shared_ptr<CredentialStore> store;
  std::shared_ptr<AuditLog> audit;
};

Services MakeServices(ServicesOptions options);

// JSON-over-HTTP front end. Endpoints are listed in docs/wire-schema.md.
class ApiServer {
 public:
  explicit ApiServer(Services services);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds |host|:|port| (0 picks a free port) and serves on a background
  // thread. Returns the bound port. Throws TransportError if binding fails.
  int Start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until Stop().
  void Listen(const std::string& host, int port);
  void Stop();

  int port() const { return port_; }
  std::string base_url() const;
  Services& services() { return services_; }

 private:
  void Routes();

  Services services_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = 0;
};

// Typed client for ApiServer. Transport failures raise TransportError; server
// errors are rethrown as the same typed error the server raised.
class ApiClient {
 public:
  explicit ApiClient(std::string base_url, std::string admin_secret = "");

  UserIdentity CreateUser(const std::string& email,
                          const std::string& display_name);

  Challenge BeginRegistration(const std::string& user_id,
                              const std::string& rp_id = "");
  Credential FinishRegistration(const AttestationResponse& attestation,
                                const Nonce& nonce);
  Challenge BeginAuthentication(const std::string& user_id,
                                const std::string& rp_id = "");
  VerificationResult FinishAuthentication(const AssertionResponse& assertion,
                                          const Nonce& nonce);
  std::optional<SessionToken> Introspect(const std::string& token);

  void EnrollFace(const std::string& user_id, const std::vector<double>& vector);

  AuthSession RequestLogin(const std::string& user_id,
                           const std::string& service_provider,
                           const std::string& origin_device_descriptor);
  std::vector<PendingRequest> Feed(const std::string& user_id);
  StepResult Advance(const std::string& session_id,
                     AuthStep step,
                     const StepEvidence& evidence);
  AuthSession Deny(const std::string& session_id);
  AuthSession Status(const std::string& session_id);

  std::vector<DeviceDirective> Directives(const std::string& device_id);

  std::vector<CredentialSummary> AdminList(const std::string& user_id);
  CredentialSummary AdminRevoke(const std::string& credential_id);
  size_t AdminWipe(const std::string& device_id);

  // Server's configured relying-party id.
  std::string RpId();

 private:
  nlohmann::json Get(const std::string& path, bool admin = false);
  nlohmann::json Post(const std::string& path,
                      const nlohmann::json& body,
                      bool admin = false);

  std::string base_url_;
  std::string admin_secret_;
};

}  // namespace metasecure

#endif  // METASECURE_HTTP_API_H_
