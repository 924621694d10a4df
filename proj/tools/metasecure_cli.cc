// metasecure: run the server, enroll simulated devices, log in, run attack
// scenarios and benchmarks.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "metasecure/bench_harness.h"
#include "metasecure/config.h"
#include "metasecure/errors.h"
#include "metasecure/face_identity.h"
#include "metasecure/http_api.h"
#include "metasecure/scenarios.h"
#include "metasecure/simulation.h"
#include "metasecure/wire.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metasecure;

namespace {

struct Globals {
  std::string config_file;
  std::string server_url;
  std::optional<uint64_t> seed;
};

Config Load(const Globals& g) {
  std::optional<fs::path> file;
  if (!g.config_file.empty())
    file = g.config_file;
  Config c = LoadConfig(file);
  if (!g.server_url.empty())
    c.server_url = g.server_url;
  return c;
}

Rng MakeRng(const Globals& g) {
  if (g.seed)
    return Rng(*g.seed);
  std::random_device rd;
  return Rng((uint64_t{rd()} << 32) ^ rd());
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw StorageError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& p, const std::string& text) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw StorageError("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, p);
}

Authenticator LoadDevice(const fs::path& file, const Config& c) {
  return Authenticator::Unseal(ReadFile(file), c.device_secret);
}

void SaveDevice(const fs::path& file, const Authenticator& d, const Config& c) {
  WriteFile(file, d.Seal(c.device_secret));
}

// Applies queued admin directives before the device is used.
void SyncOverHttp(ApiClient& client, Authenticator& d) {
  size_t erased = d.ApplyDirectives(client.Directives(d.device_id()));
  if (erased > 0)
    std::cerr << "device " << d.device_id() << " was remotely wiped, erased "
              << erased << " key(s)\n";
}

std::string PickCredential(const Authenticator& d, const std::string& wanted) {
  if (!wanted.empty())
    return wanted;
  auto ids = d.credential_ids();
  if (ids.empty())
    throw NoCredentialError("device " + d.device_id() + " holds no credentials");
  return ids.front();
}

Embedding LoadFace(const fs::path& file) {
  json j = json::parse(ReadFile(file));
  return NormalizeEmbedding(j.at("vector").get<std::vector<double>>());
}

int CmdServe(const Config& c) {
  Services services = MakeServices(c.ToServicesOptions());
  ApiServer server(std::move(services));
  std::cout << "serving rp " << c.rp_id << " on http://" << c.host << ":"
            << c.port << std::endl;
  server.Listen(c.host, c.port);
  return 0;
}

int CmdEnrollUser(const Config& c, const std::string& email,
                  const std::string& name) {
  ApiClient client(c.ResolvedServerUrl());
  std::cout << wire::ToJson(client.CreateUser(email, name)).dump(2) << "\n";
  return 0;
}

int CmdEnrollDevice(const Config& c, const std::string& user,
                    const std::string& kind, const std::string& file) {
  ApiClient client(c.ResolvedServerUrl());
  Authenticator device = fs::exists(file)
                             ? LoadDevice(file, c)
                             : Authenticator(DeviceKindFromString(kind));
  if (ToString(device.kind()) != kind)
    throw ValidationError(file + " is a " + std::string(ToString(device.kind())));
  SyncOverHttp(client, device);
  Credential cred = RegisterDevice(client, device, user, client.RpId());
  SaveDevice(file, device, c);
  std::cout << wire::ToJson(cred).dump(2) << "\n";
  return 0;
}

int CmdEnrollFace(const Config& c, const Globals& g, const std::string& user,
                  const std::string& file) {
  ApiClient client(c.ResolvedServerUrl());
  Embedding face{};
  if (fs::exists(file)) {
    face = LoadFace(file);
  } else {
    Rng rng = MakeRng(g);
    face = RandomEmbedding(rng);
    WriteFile(file, json{{"user_id", user}, {"vector", face}}.dump() + "\n");
  }
  client.EnrollFace(user, {face.begin(), face.end()});
  std::cout << "enrolled face template for " << user << "\n";
  return 0;
}

void PrintStep(const char* name, const StepResult& r) {
  std::cout << name << ": "
            << (r.advanced ? "ok" : std::string(ToString(*r.failure)));
  if (r.verification)
    std::cout << " (" << ToString(*r.verification) << ")";
  if (r.face) {
    char conf[16];
    std::snprintf(conf, sizeof(conf), "%.3f", r.face->confidence);
    std::cout << " confidence=" << conf << " pad=" << ToString(r.face->pad.verdict);
  }
  std::cout << " -> " << ToString(r.session.state) << "\n";
}

int CmdLogin(const Config& c, const Globals& g, const std::string& user,
             const std::string& phone_file, const std::string& key_file,
             const std::string& face_file, const std::string& provider,
             const std::string& origin, bool spoof) {
  ApiClient client(c.ResolvedServerUrl());
  const std::string rp_id = client.RpId();
  Rng rng = MakeRng(g);
  Authenticator phone = LoadDevice(phone_file, c);
  Authenticator key = LoadDevice(key_file, c);
  SyncOverHttp(client, phone);
  SyncOverHttp(client, key);
  // Counters move on every assertion, so the files are rewritten even when
  // the login fails part way.
  struct Resealer {
    const Config& c;
    const std::string& pf;
    const std::string& kf;
    Authenticator& p;
    Authenticator& k;
    ~Resealer() {
      try {
        SaveDevice(pf, p, c);
        SaveDevice(kf, k, c);
      } catch (const std::exception& e) {
        std::cerr << "warning: " << e.what() << "\n";
      }
    }
  } reseal{c, phone_file, key_file, phone, key};

  const Embedding face = LoadFace(face_file);
  AuthSession s = client.RequestLogin(user, provider, origin);
  std::cout << "session " << s.session_id << " for " << provider << "\n";

  StepResult r = client.Advance(
      s.session_id, AuthStep::kDeviceAttestation,
      SignChallenge(client, phone, user, rp_id, PickCredential(phone, "")));
  PrintStep("device attestation", r);
  if (!r.advanced)
    return 1;
  r = client.Advance(
      s.session_id, AuthStep::kSecurityKey,
      SignChallenge(client, key, user, rp_id, PickCredential(key, ""), true));
  PrintStep("security key", r);
  if (!r.advanced)
    return 1;
  r = client.Advance(s.session_id, AuthStep::kFace,
                     spoof ? SpoofProbe(face) : LiveProbe(face, rng));
  PrintStep("face", r);
  if (!r.advanced || !r.session.token)
    return 1;
  std::cout << "token " << r.session.token->token << " expires_at "
            << r.session.token->expires_at << "\n";
  return 0;
}

int CmdScenario(const Config& c, const Globals& g, const std::string& name,
                const std::string& phishing_url) {
  std::vector<Scenario> which;
  if (name == "all")
    which = AllScenarios();
  else
    which.push_back(ScenarioFromString(name));

  std::unique_ptr<ScenarioHarness> harness;
  ScenarioTargets targets;
  if (g.server_url.empty() && c.server_url.empty()) {
    harness = std::make_unique<ScenarioHarness>(c.rp_id);
    targets = harness->targets();
  } else {
    targets = ScenarioTargets{c.ResolvedServerUrl(), phishing_url,
                              c.admin_secret};
  }
  Rng rng = MakeRng(g);
  int failed = 0;
  for (Scenario s : which) {
    ScenarioResult r = RunScenario(s, targets, rng);
    std::cout << FormatScenarioResult(r);
    failed += r.pass ? 0 : 1;
  }
  std::cout << which.size() - failed << "/" << which.size()
            << " scenarios passed\n";
  return failed == 0 ? 0 : 1;
}

int CmdBench(const Globals& g, int trials, double target_ms,
             const std::string& output) {
  const uint64_t seed = g.seed.value_or(1);
  std::cerr << "calibrating password cost to " << target_ms << " ms...\n";
  const uint64_t iterations = CalibratePasswordCost(target_ms);
  std::cerr << "using " << iterations << " SHA-256 iterations\n";
  std::vector<TimingRow> rows;
  rows.push_back(TimePasswordAuth(trials, iterations));
  rows.push_back(TimeFaceAuth(trials, seed));
  rows.push_back(TimeFidoAuth(trials));
  TimingReport report = EmitReport(std::move(rows));
  std::cout << (output == "delimited" ? report.RenderDelimited()
                                      : report.RenderText());
  if (!report.OrderingHolds())
    std::cerr << "warning: password > combined > passwordless does not hold\n";
  return 0;
}

int CmdPadEval(const std::string& dataset, bool as_json) {
  ConfusionMatrix m =
      EvaluatePad(LoadLabeledDataset(dataset), ReferencePadClassifier());
  std::cout << (as_json ? RenderConfusionJson(m) : RenderConfusionText(m));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passwordless triple-layer login server and tools"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_file, "JSON config file")
      ->check(CLI::ExistingFile);
  app.add_option("--server", g.server_url,
                 "Server base URL (overrides config and environment)");
  app.add_option("--seed", g.seed,
                 "Seed for synthetic data (keys and nonces stay random)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP server");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* enroll_user = app.add_subcommand("enroll-user", "Create a user");
  std::string email, name;
  enroll_user->add_option("--email", email)->required();
  enroll_user->add_option("--name", name)->required();

  auto* enroll_device =
      app.add_subcommand("enroll-device", "Register a simulated authenticator");
  std::string user, kind = "security_key", device_file;
  enroll_device->add_option("--user", user)->required();
  enroll_device->add_option("--kind", kind)
      ->check(CLI::IsMember({"security_key", "smartphone"}));
  enroll_device->add_option("--device-file", device_file, "Sealed device state")
      ->required();

  auto* enroll_face =
      app.add_subcommand("enroll-face", "Enroll a synthetic face template");
  std::string face_file;
  enroll_face->add_option("--user", user)->required();
  enroll_face->add_option("--face-file", face_file)->required();

  auto* login = app.add_subcommand("login", "Run the three login steps");
  std::string phone_file, key_file, provider = "horizon-worlds",
                                    origin = "cli";
  bool spoof = false;
  login->add_option("--user", user)->required();
  login->add_option("--phone-file", phone_file)->required()->check(
      CLI::ExistingFile);
  login->add_option("--key-file", key_file)->required()->check(
      CLI::ExistingFile);
  login->add_option("--face-file", face_file)->required()->check(
      CLI::ExistingFile);
  login->add_option("--provider", provider);
  login->add_option("--origin", origin, "Origin device description");
  login->add_flag("--spoof", spoof, "Present a photo instead of a live face");

  auto* scenario = app.add_subcommand("scenario", "Run an attack scenario");
  std::string scenario_name, phishing_url;
  scenario
      ->add_option("name", scenario_name,
                   "HonestLogin, Replay, PhishingRp, ClonedKey, SpoofFace, "
                   "WipedKey or all")
      ->required();
  scenario->add_option("--phishing-server", phishing_url,
                       "Look-alike server sharing the store (remote mode)");

  auto* bench = app.add_subcommand("bench", "Time the authentication models");
  int trials = kMinTrials;
  double target_ms = kReferencePasswordMs;
  std::string output = "text";
  bench->add_option("--trials", trials)->check(CLI::Range(kMinTrials, 1000));
  bench->add_option("--target-password-ms", target_ms);
  bench->add_option("--output", output)
      ->check(CLI::IsMember({"text", "delimited"}));

  auto* admin = app.add_subcommand("admin", "Manage credentials");
  admin->require_subcommand(1);
  auto* revoke = admin->add_subcommand("revoke", "Revoke a credential");
  std::string credential, device;
  revoke->add_option("--credential", credential)->required();
  auto* wipe = admin->add_subcommand("wipe", "Remotely wipe a device");
  wipe->add_option("--device", device)->required();
  auto* list = admin->add_subcommand("list", "List a user's credentials");
  list->add_option("--user", user)->required();

  auto* pad_eval =
      app.add_subcommand("pad-eval", "Score a labeled PAD dataset");
  std::string dataset;
  bool as_json = false;
  pad_eval->add_option("dataset", dataset)->required()->check(
      CLI::ExistingFile);
  pad_eval->add_flag("--json", as_json);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench)
      return CmdBench(g, trials, target_ms, output);
    if (*pad_eval)
      return CmdPadEval(dataset, as_json);

    Config c = Load(g);
    if (*serve) {
      if (host)
        c.host = *host;
      if (port)
        c.port = *port;
      return CmdServe(c);
    }
    if (*enroll_user)
      return CmdEnrollUser(c, email, name);
    if (*enroll_device)
      return CmdEnrollDevice(c, user, kind, device_file);
    if (*enroll_face)
      return CmdEnrollFace(c, g, user, face_file);
    if (*login) {
      return CmdLogin(c, g, user, phone_file, key_file, face_file, provider,
                      origin, spoof);
    }
    if (*scenario)
      return CmdScenario(c, g, scenario_name, phishing_url);
    if (*admin) {
      ApiClient client(c.ResolvedServerUrl(), c.admin_secret);
      if (*revoke) {
        std::cout << wire::ToJson(client.AdminRevoke(credential)).dump(2)
                  << "\n";
      } else if (*wipe) {
        std::cout << "wiped " << client.AdminWipe(device)
                  << " credential(s) on " << device << "\n";
      } else {
        json out = json::array();
        for (const auto& s : client.AdminList(user))
          out.push_back(wire::ToJson(s));
        std::cout << out.dump(2) << "\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
