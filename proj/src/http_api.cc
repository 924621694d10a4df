#include "metasecure/http_api.h"

#include <cstdio>
#include <functional>

#include "httplib.h"
#include "metasecure/errors.h"
#include "metasecure/wire.h"

namespace metasecure {

using nlohmann::json;

namespace {

constexpr char kJson[] = "application/json";

int StatusFor(const Error& e) {
  const std::string& k = e.kind();
  if (k == "ValidationError" || k == "EncodingError")
    return 400;
  if (k == "UnauthorizedError")
    return 401;
  if (k.rfind("NoSuch", 0) == 0 || k == "NoTemplateError" ||
      k == "NoCredentialError")
    return 404;
  if (k == "OutOfOrderError" || k == "SessionTerminalError" ||
      k == "SessionExpiredError" || k == "AlreadyTerminalError" ||
      k == "DuplicateEmailError" || k == "SessionNotReadyError")
    return 409;
  if (k == "PrerequisiteError")
    return 412;
  if (k == "RegistrationError")
    return 422;
  return 500;
}

using Handler = std::function<json(const httplib::Request&)>;

httplib::Server::Handler Wrap(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    try {
      res.set_content(h(req).dump(), kJson);
      res.status = 200;
    } catch (const Error& e) {
      res.status = StatusFor(e);
      res.set_content(wire::ErrorBody(e).dump(), kJson);
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(
          wire::ErrorBody(EncodingError(std::string("bad request body: ") +
                                        e.what()))
              .dump(),
          kJson);
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(wire::ErrorBody(Error("InternalError", e.what())).dump(),
                      kJson);
    }
  };
}

json Body(const httplib::Request& req) {
  if (req.body.empty())
    return json::object();
  return json::parse(req.body);
}

std::string Param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name))
    throw ValidationError(std::string("missing query parameter '") + name + "'");
  return req.get_param_value(name);
}

CredentialSummary SummaryFromJson(const json& j) {
  CredentialSummary c;
  c.credential_id = j.at("credential_id").get<std::string>();
  c.user_id = j.at("user_id").get<std::string>();
  c.rp_id = j.at("rp_id").get<std::string>();
  c.kind = DeviceKindFromString(j.at("kind").get<std::string>());
  c.device_id = j.at("device_id").get<std::string>();
  c.state = CredentialStateFromString(j.at("state").get<std::string>());
  c.counter_seen = j.at("counter_seen").get<uint32_t>();
  c.created_at = j.at("created_at").get<TimestampMs>();
  c.public_key = Base64Decode(j.at("public_key").get<std::string>());
  return c;
}

}  // namespace

Services MakeServices(ServicesOptions options) {
  Services s;
  auto store = options.store ? options.store : std::make_shared<CredentialStore>();
  auto audit = options.audit ? options.audit : std::make_shared<AuditLog>();
  s.rp = std::make_shared<RelyingParty>(options.rp, store, options.clock);
  s.faces = std::make_shared<FaceRegistry>(
      std::make_shared<ReferencePadClassifier>(), options.clock);
  s.admin = std::make_shared<KeyAdmin>(store, audit, options.clock);
  s.orchestrator =
      std::make_shared<Orchestrator>(s.rp, s.faces, options.session_ttl_ms);
  s.admin_secret = options.admin_secret;
  return s;
}

// Server ---------------------------------------------------------------------

ApiServer::ApiServer(Services services)
    : services_(std::move(services)),
      server_(std::make_unique<httplib::Server>()) {
  Routes();
}

ApiServer::~ApiServer() { Stop(); }

void ApiServer::Routes() {
  httplib::Server& srv = *server_;
  Services& s = services_;

  auto require_admin = [&s](const httplib::Request& req) {
    const std::string expected = "Bearer " + s.admin_secret;
    if (s.admin_secret.empty() ||
        req.get_header_value("Authorization") != expected) {
      throw UnauthorizedError("admin endpoints need the configured bearer secret");
    }
  };

  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });

  srv.Get("/v1/info", Wrap([&s](const httplib::Request&) {
            return json{{"rp_id", s.rp->rp_id()},
                        {"session_ttl_ms", s.orchestrator->session_ttl_ms()}};
          }));

  srv.Post("/v1/users", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             return json{{"user", wire::ToJson(s.rp->RegisterUser(
                                       b.at("email").get<std::string>(),
                                       b.at("display_name").get<std::string>()))}};
           }));

  srv.Post("/v1/registration/begin", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             std::string rp_id = b.value("rp_id", s.rp->rp_id());
             return json{{"challenge",
                          wire::ToJson(s.rp->BeginRegistration(
                              b.at("user_id").get<std::string>(), rp_id))}};
           }));

  srv.Post("/v1/registration/finish", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             Credential c = s.rp->FinishRegistration(
                 wire::AttestationFromJson(b.at("attestation")),
                 wire::DecodeNonce(b.at("challenge_nonce").get<std::string>()));
             return json{{"credential", wire::ToJson(c)}};
           }));

  srv.Post("/v1/authentication/begin", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             std::string rp_id = b.value("rp_id", s.rp->rp_id());
             return json{{"challenge",
                          wire::ToJson(s.rp->BeginAuthentication(
                              b.at("user_id").get<std::string>(), rp_id))}};
           }));

  srv.Post("/v1/authentication/finish", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             VerificationResult r = s.rp->FinishAuthentication(
                 wire::AssertionFromJson(b.at("assertion")),
                 wire::DecodeNonce(b.at("challenge_nonce").get<std::string>()));
             return json{{"result", wire::ToJson(r)}};
           }));

  srv.Get("/v1/session/introspect", Wrap([&s](const httplib::Request& req) {
            auto token = s.rp->IntrospectToken(Param(req, "token"));
            if (!token)
              return json{{"active", false}};
            json j = wire::ToJson(*token);
            j["active"] = true;
            return j;
          }));

  srv.Post("/v1/face/enroll", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             const std::string user_id = b.at("user_id").get<std::string>();
             s.rp->store().GetUser(user_id);
             FaceTemplate t = s.faces->EnrollTemplate(
                 user_id, b.at("vector").get<std::vector<double>>());
             s.rp->store().SetFaceTemplateRef(user_id, "face:" + user_id);
             return json{{"user_id", t.user_id}, {"enrolled_at", t.enrolled_at}};
           }));

  srv.Post("/v1/login/request", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             return wire::ToJson(s.orchestrator->RequestLogin(
                 b.at("user_id").get<std::string>(),
                 b.at("service_provider").get<std::string>(),
                 b.value("origin_device_descriptor", "")));
           }));

  srv.Get("/v1/login/feed", Wrap([&s](const httplib::Request& req) {
            json list = json::array();
            for (const auto& p : s.orchestrator->ApprovalFeed(Param(req, "user_id")))
              list.push_back(wire::ToJson(p));
            return json{{"requests", std::move(list)}};
          }));

  srv.Post("/v1/login/advance", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             StepResult r = s.orchestrator->Advance(
                 b.at("session_id").get<std::string>(),
                 AuthStepFromString(b.at("step").get<std::string>()),
                 wire::StepEvidenceFromJson(b.at("evidence")));
             return wire::ToJson(r);
           }));

  srv.Post("/v1/login/deny", Wrap([&s](const httplib::Request& req) {
             json b = Body(req);
             return wire::ToJson(
                 s.orchestrator->Deny(b.at("session_id").get<std::string>()));
           }));

  srv.Get("/v1/login/status", Wrap([&s](const httplib::Request& req) {
            return wire::ToJson(s.orchestrator->Status(Param(req, "session_id")));
          }));

  srv.Get("/v1/devices/directives", Wrap([&s](const httplib::Request& req) {
            json list = json::array();
            for (DeviceDirective d : s.admin->TakeDirectives(Param(req, "device_id")))
              list.push_back(ToString(d));
            return json{{"directives", std::move(list)}};
          }));

  srv.Get("/admin/credentials",
          Wrap([&s, require_admin](const httplib::Request& req) {
            require_admin(req);
            json list = json::array();
            for (const auto& c :
                 s.admin->ListCredentials("admin", Param(req, "user_id")))
              list.push_back(wire::ToJson(c));
            return json{{"credentials", std::move(list)}};
          }));

  srv.Post("/admin/revoke", Wrap([&s, require_admin](const httplib::Request& req) {
             require_admin(req);
             json b = Body(req);
             return json{{"credential",
                          wire::ToJson(s.admin->RevokeCredential(
                              "admin", b.at("credential_id").get<std::string>()))}};
           }));

  srv.Post("/admin/wipe", Wrap([&s, require_admin](const httplib::Request& req) {
             require_admin(req);
             json b = Body(req);
             size_t n =
                 s.admin->RemoteWipe("admin", b.at("device_id").get<std::string>());
             return json{{"wiped", n}};
           }));

  srv.Get("/admin/audit", Wrap([&s, require_admin](const httplib::Request& req) {
            require_admin(req);
            json list = json::array();
            for (const auto& a : s.admin->audit().records())
              list.push_back(wire::ToJson(a));
            return json{{"actions", std::move(list)}};
          }));
}

int ApiServer::Start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0)
    throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ApiServer::Listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port))
    throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
}

void ApiServer::Stop() {
  if (server_->is_running())
    server_->stop();
  if (thread_.joinable())
    thread_.join();
}

std::string ApiServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

// Client ---------------------------------------------------------------------

ApiClient::ApiClient(std::string base_url, std::string admin_secret)
    : base_url_(std::move(base_url)), admin_secret_(std::move(admin_secret)) {}

namespace {

json Decode(const httplib::Result& res, const std::string& what) {
  if (!res) {
    throw TransportError(what + ": " + httplib::to_string(res.error()));
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception&) {
    throw TransportError(what + ": HTTP " + std::to_string(res->status) +
                         " with a non-JSON body");
  }
  if (res->status == 200)
    return body;
  if (!body.contains("error"))
    throw TransportError(what + ": HTTP " + std::to_string(res->status));
  const json& err = body.at("error");
  const std::string kind = err.value("kind", "Error");
  const std::string message = err.value("message", "");
  if (kind == "RegistrationError" && err.contains("failure")) {
    throw RegistrationFailedError(
        VerificationFailureFromString(err.at("failure").get<std::string>()),
        message);
  }
  ThrowErrorOfKind(kind, message);
}

}  // namespace

json ApiClient::Get(const std::string& path, bool admin) {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(5);
  httplib::Headers headers;
  if (admin)
    headers.emplace("Authorization", "Bearer " + admin_secret_);
  return Decode(cli.Get(path, headers), "GET " + path);
}

json ApiClient::Post(const std::string& path, const json& body, bool admin) {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(5);
  httplib::Headers headers;
  if (admin)
    headers.emplace("Authorization", "Bearer " + admin_secret_);
  return Decode(cli.Post(path, headers, body.dump(), kJson), "POST " + path);
}

UserIdentity ApiClient::CreateUser(const std::string& email,
                                   const std::string& display_name) {
  return wire::UserFromJson(
      Post("/v1/users", {{"email", email}, {"display_name", display_name}})
          .at("user"));
}

Challenge ApiClient::BeginRegistration(const std::string& user_id,
                                       const std::string& rp_id) {
  json body = {{"user_id", user_id}};
  if (!rp_id.empty())
    body["rp_id"] = rp_id;
  return wire::ChallengeFromJson(
      Post("/v1/registration/begin", body).at("challenge"));
}

Credential ApiClient::FinishRegistration(const AttestationResponse& attestation,
                                         const Nonce& nonce) {
  json body = {{"attestation", wire::ToJson(attestation)},
               {"challenge_nonce", Base64Encode(nonce)}};
  return wire::CredentialFromJson(
      Post("/v1/registration/finish", body).at("credential"));
}

Challenge ApiClient::BeginAuthentication(const std::string& user_id,
                                         const std::string& rp_id) {
  json body = {{"user_id", user_id}};
  if (!rp_id.empty())
    body["rp_id"] = rp_id;
  return wire::ChallengeFromJson(
      Post("/v1/authentication/begin", body).at("challenge"));
}

VerificationResult ApiClient::FinishAuthentication(
    const AssertionResponse& assertion,
    const Nonce& nonce) {
  json body = {{"assertion", wire::ToJson(assertion)},
               {"challenge_nonce", Base64Encode(nonce)}};
  return wire::VerificationResultFromJson(
      Post("/v1/authentication/finish", body).at("result"));
}

std::optional<SessionToken> ApiClient::Introspect(const std::string& token) {
  json j = Get("/v1/session/introspect?token=" +
               httplib::detail::encode_query_param(token));
  if (!j.at("active").get<bool>())
    return std::nullopt;
  return wire::SessionTokenFromJson(j);
}

void ApiClient::EnrollFace(const std::string& user_id,
                           const std::vector<double>& vector) {
  Post("/v1/face/enroll", {{"user_id", user_id}, {"vector", vector}});
}

AuthSession ApiClient::RequestLogin(const std::string& user_id,
                                    const std::string& service_provider,
                                    const std::string& origin_device_descriptor) {
  return wire::AuthSessionFromJson(
      Post("/v1/login/request",
           {{"user_id", user_id},
            {"service_provider", service_provider},
            {"origin_device_descriptor", origin_device_descriptor}}));
}

std::vector<PendingRequest> ApiClient::Feed(const std::string& user_id) {
  std::vector<PendingRequest> out;
  json j = Get("/v1/login/feed?user_id=" +
               httplib::detail::encode_query_param(user_id));
  for (const auto& p : j.at("requests"))
    out.push_back(wire::PendingRequestFromJson(p));
  return out;
}

StepResult ApiClient::Advance(const std::string& session_id,
                              AuthStep step,
                              const StepEvidence& evidence) {
  return wire::StepResultFromJson(
      Post("/v1/login/advance", {{"session_id", session_id},
                                 {"step", ToString(step)},
                                 {"evidence", wire::ToJson(evidence)}}));
}

AuthSession ApiClient::Deny(const std::string& session_id) {
  return wire::AuthSessionFromJson(
      Post("/v1/login/deny", {{"session_id", session_id}}));
}

AuthSession ApiClient::Status(const std::string& session_id) {
  return wire::AuthSessionFromJson(
      Get("/v1/login/status?session_id=" +
          httplib::detail::encode_query_param(session_id)));
}

std::vector<DeviceDirective> ApiClient::Directives(const std::string& device_id) {
  std::vector<DeviceDirective> out;
  json j = Get("/v1/devices/directives?device_id=" +
               httplib::detail::encode_query_param(device_id));
  for (const auto& d : j.at("directives"))
    out.push_back(DeviceDirectiveFromString(d.get<std::string>()));
  return out;
}

std::vector<CredentialSummary> ApiClient::AdminList(const std::string& user_id) {
  std::vector<CredentialSummary> out;
  json j = Get("/admin/credentials?user_id=" +
                   httplib::detail::encode_query_param(user_id),
               true);
  for (const auto& c : j.at("credentials"))
    out.push_back(SummaryFromJson(c));
  return out;
}

CredentialSummary ApiClient::AdminRevoke(const std::string& credential_id) {
  return SummaryFromJson(
      Post("/admin/revoke", {{"credential_id", credential_id}}, true)
          .at("credential"));
}

size_t ApiClient::AdminWipe(const std::string& device_id) {
  return Post("/admin/wipe", {{"device_id", device_id}}, true)
      .at("wiped")
      .get<size_t>();
}

std::string ApiClient::RpId() {
  return Get("/v1/info").at("rp_id").get<std::string>();
}

}  // namespace metasecure
