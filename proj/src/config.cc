#include "metasecure/config.h"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metasecure/errors.h"

namespace metasecure {

using nlohmann::json;

namespace {

int64_t ParseInt(std::string_view key, std::string_view text) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError(std::string(key) + ": not an integer: " +
                          std::string(text));
  return v;
}

void CheckPositive(std::string_view key, int64_t v) {
  if (v <= 0)
    throw ValidationError(std::string(key) + " must be positive");
}

void CheckPort(int64_t v) {
  if (v < 0 || v > 65535)
    throw ValidationError("port out of range: " + std::to_string(v));
}

}  // namespace

std::string Config::ResolvedServerUrl() const {
  if (!server_url.empty())
    return server_url;
  return "http://" + host + ":" + std::to_string(port);
}

ServicesOptions Config::ToServicesOptions() const {
  ServicesOptions o;
  o.rp.rp_id = rp_id;
  o.rp.challenge_ttl_ms = challenge_ttl_ms;
  o.rp.token_ttl_ms = token_ttl_ms;
  o.session_ttl_ms = session_ttl_ms;
  o.admin_secret = admin_secret;
  if (!store_path.empty()) {
    o.store = std::make_shared<CredentialStore>();
    o.store->AttachFile(store_path);
  }
  if (!audit_path.empty())
    o.audit = std::make_shared<AuditLog>(std::filesystem::path(audit_path));
  return o;
}

std::optional<std::string> ProcessEnv(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr)
    return std::nullopt;
  return std::string(v);
}

Config ParseConfigJson(std::string_view text, Config c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ValidationError("config must be a JSON object");

  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "host") {
        c.host = value.get<std::string>();
      } else if (key == "port") {
        CheckPort(value.get<int64_t>());
        c.port = value.get<int>();
      } else if (key == "rp_id") {
        c.rp_id = value.get<std::string>();
      } else if (key == "admin_secret") {
        c.admin_secret = value.get<std::string>();
      } else if (key == "server_url") {
        c.server_url = value.get<std::string>();
      } else if (key == "store_path") {
        c.store_path = value.get<std::string>();
      } else if (key == "audit_path") {
        c.audit_path = value.get<std::string>();
      } else if (key == "device_secret") {
        c.device_secret = value.get<std::string>();
      } else if (key == "challenge_ttl_ms") {
        c.challenge_ttl_ms = value.get<int64_t>();
        CheckPositive(key, c.challenge_ttl_ms);
      } else if (key == "session_ttl_ms") {
        c.session_ttl_ms = value.get<int64_t>();
        CheckPositive(key, c.session_ttl_ms);
      } else if (key == "token_ttl_ms") {
        c.token_ttl_ms = value.get<int64_t>();
        CheckPositive(key, c.token_ttl_ms);
      } else {
        throw ValidationError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::type_error& e) {
    throw ValidationError(std::string("config value has the wrong type: ") +
                          e.what());
  }
  if (c.rp_id.empty())
    throw ValidationError("rp_id must not be empty");
  return c;
}

void ApplyEnvOverrides(Config& c, const EnvLookup& env) {
  auto str = [&](const char* name, std::string& field) {
    if (auto v = env(name))
      field = *v;
  };
  auto ms = [&](const char* name, DurationMs& field) {
    if (auto v = env(name)) {
      field = ParseInt(name, *v);
      CheckPositive(name, field);
    }
  };
  str("METASECURE_HOST", c.host);
  if (auto v = env("METASECURE_PORT")) {
    int64_t p = ParseInt("METASECURE_PORT", *v);
    CheckPort(p);
    c.port = static_cast<int>(p);
  }
  str("METASECURE_RP_ID", c.rp_id);
  str("METASECURE_ADMIN_SECRET", c.admin_secret);
  str("METASECURE_SERVER_URL", c.server_url);
  str("METASECURE_STORE_PATH", c.store_path);
  str("METASECURE_AUDIT_PATH", c.audit_path);
  str("METASECURE_DEVICE_SECRET", c.device_secret);
  ms("METASECURE_CHALLENGE_TTL_MS", c.challenge_ttl_ms);
  ms("METASECURE_SESSION_TTL_MS", c.session_ttl_ms);
  ms("METASECURE_TOKEN_TTL_MS", c.token_ttl_ms);
  if (c.rp_id.empty())
    throw ValidationError("rp_id must not be empty");
}

Config LoadConfig(const std::optional<std::filesystem::path>& file,
                  const EnvLookup& env) {
  Config c;
  if (file) {
    std::ifstream in(*file);
    if (!in)
      throw ValidationError("cannot read config file " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    c = ParseConfigJson(ss.str(), c);
  }
  ApplyEnvOverrides(c, env);
  return c;
}

}  // namespace metasecure
