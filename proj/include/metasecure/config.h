#ifndef METASECURE_CONFIG_H_
#define METASECURE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "metasecure/clock.h"
#include "metasecure/http_api.h"

namespace metasecure {

// Runtime settings shared by the server and the client-side commands.
struct Config {
  std::string host = "127.0.0.1";
  int port = 8443;
  std::string rp_id = "meta.example";
  std::string admin_secret = "change-me";
  // Where clients find the server. Empty means http://host:port.
  std::string server_url;
  // Optional persistence; empty keeps everything in memory.
  std::string store_path;
  std::string audit_path;
  // Passphrase used to seal simulated device files.
  std::string device_secret = "metasecure-device";
  DurationMs challenge_ttl_ms = 120'000;
  DurationMs session_ttl_ms = 300'000;
  DurationMs token_ttl_ms = 3'600'000;

  std::string ResolvedServerUrl() const;
  ServicesOptions ToServicesOptions() const;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

// Reads the process environment.
std::optional<std::string> ProcessEnv(const char* name);

// Defaults, then the JSON file (if any), then METASECURE_* variables.
// Unknown keys and malformed values raise ValidationError.
Config LoadConfig(const std::optional<std::filesystem::path>& file,
                  const EnvLookup& env = ProcessEnv);

Config ParseConfigJson(std::string_view text, Config base = {});
void ApplyEnvOverrides(Config& config, const EnvLookup& env);

}  // namespace metasecure

#endif  // METASECURE_CONFIG_H_
