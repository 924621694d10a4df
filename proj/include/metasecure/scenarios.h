#ifndef METASECURE_SCENARIOS_H_
#define METASECURE_SCENARIOS_H_

// Named end-to-end runs: one honest login and five attacks, each with the
// outcome the server must produce.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metasecure/http_api.h"
#include "metasecure/simulation.h"

namespace metasecure {

enum class Scenario {
  kHonestLogin,
  kReplay,
  kPhishingRp,
  kClonedKey,
  kSpoofFace,
  kWipedKey,
};

std::string_view ToString(Scenario s);
Scenario ScenarioFromString(std::string_view s);
const std::vector<Scenario>& AllScenarios();

struct ScenarioResult {
  std::string name;
  std::vector<std::string> steps;
  std::string expected;
  std::string observed;
  bool pass = false;
};

struct ScenarioTargets {
  std::string server_url;
  // A second front end with a different rp id over the same credential
  // store. Only PhishingRp needs it.
  std::string phishing_url;
  std::string admin_secret;
};

// Runs one scenario against live servers. TransportError propagates when a
// server cannot be reached; any other error is reported as the observed
// outcome.
ScenarioResult RunScenario(Scenario scenario,
                           const ScenarioTargets& targets,
                           Rng& rng);

// Two loopback servers over one store: the real one and a look-alike with
// rp id "evil.example". Both stop on destruction.
class ScenarioHarness {
 public:
  explicit ScenarioHarness(std::string rp_id = "meta.example",
                           std::string admin_secret = "scenario-admin");
  ~ScenarioHarness();

  ScenarioTargets targets() const;
  ApiServer& server() { return *server_; }

 private:
  std::string admin_secret_;
  std::unique_ptr<ApiServer> server_;
  std::unique_ptr<ApiServer> phishing_;
};

std::string FormatScenarioResult(const ScenarioResult& r);

}  // namespace metasecure

#endif  // METASECURE_SCENARIOS_H_
