#include "metasecure/credential_store.h"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metasecure/crypto_core.h"
#include "metasecure/errors.h"

namespace metasecure {

using nlohmann::json;

std::string_view ToString(CredentialState state) {
  switch (state) {
    case CredentialState::kActive:
      return "active";
    case CredentialState::kRevoked:
      return "revoked";
    case CredentialState::kWiped:
      return "wiped";
  }
  return "active";
}

CredentialState CredentialStateFromString(std::string_view s) {
  if (s == "active")
    return CredentialState::kActive;
  if (s == "revoked")
    return CredentialState::kRevoked;
  if (s == "wiped")
    return CredentialState::kWiped;
  throw EncodingError("unknown credential state: " + std::string(s));
}

UserIdentity CredentialStore::AddUser(std::string email,
                                      std::string display_name) {
  if (email.empty() || display_name.empty())
    throw ValidationError("email and display name are required");
  std::lock_guard lock(mu_);
  if (user_by_email_.count(email))
    throw DuplicateEmailError("email already registered: " + email);
  std::string id = RandomId("user-");
  while (users_.count(id))
    id = RandomId("user-");
  UserIdentity user(id, email, std::move(display_name));
  users_.emplace(id, user);
  user_by_email_.emplace(std::move(email), id);
  PersistLocked();
  return user;
}

std::optional<UserIdentity> CredentialStore::FindUser(
    const std::string& user_id) const {
  std::lock_guard lock(mu_);
  auto it = users_.find(user_id);
  if (it == users_.end())
    return std::nullopt;
  return it->second;
}

std::optional<UserIdentity> CredentialStore::FindUserByEmail(
    const std::string& email) const {
  std::lock_guard lock(mu_);
  auto it = user_by_email_.find(email);
  if (it == user_by_email_.end())
    return std::nullopt;
  return users_.at(it->second);
}

UserIdentity CredentialStore::GetUser(const std::string& user_id) const {
  auto user = FindUser(user_id);
  if (!user)
    throw NoSuchUserError("no user " + user_id);
  return *user;
}

void CredentialStore::SetFaceTemplateRef(const std::string& user_id,
                                         std::string ref) {
  std::lock_guard lock(mu_);
  auto it = users_.find(user_id);
  if (it == users_.end())
    throw NoSuchUserError("no user " + user_id);
  it->second = it->second.WithFaceTemplate(std::move(ref));
  PersistLocked();
}

void CredentialStore::AddCredential(const Credential& credential) {
  std::lock_guard lock(mu_);
  if (!users_.count(credential.user_id))
    throw NoSuchUserError("no user " + credential.user_id);
  if (credentials_.count(credential.credential_id))
    throw ValidationError("credential already registered: " +
                          credential.credential_id);
  credentials_.emplace(credential.credential_id, credential);
  devices_.insert(credential.device_id);
  PersistLocked();
}

std::optional<Credential> CredentialStore::FindCredential(
    const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = credentials_.find(id);
  if (it == credentials_.end())
    return std::nullopt;
  return it->second;
}

std::vector<Credential> CredentialStore::CredentialsForUser(
    const std::string& user_id) const {
  std::lock_guard lock(mu_);
  std::vector<Credential> out;
  for (const auto& [id, c] : credentials_) {
    if (c.user_id == user_id)
      out.push_back(c);
  }
  return out;
}

std::vector<Credential> CredentialStore::CredentialsForDevice(
    const std::string& device_id) const {
  std::lock_guard lock(mu_);
  std::vector<Credential> out;
  for (const auto& [id, c] : credentials_) {
    if (c.device_id == device_id)
      out.push_back(c);
  }
  return out;
}

CounterUpdate CredentialStore::AdvanceCounter(const std::string& credential_id,
                                              uint32_t counter) {
  std::lock_guard lock(mu_);
  auto it = credentials_.find(credential_id);
  if (it == credentials_.end())
    return CounterUpdate::kUnknown;
  Credential& c = it->second;
  if (!c.active())
    return CounterUpdate::kInactive;
  if (counter <= c.counter_seen)
    return CounterUpdate::kRegression;
  c.counter_seen = counter;
  PersistLocked();
  return CounterUpdate::kAccepted;
}

Credential CredentialStore::Revoke(const std::string& credential_id) {
  std::lock_guard lock(mu_);
  auto it = credentials_.find(credential_id);
  if (it == credentials_.end())
    throw NoSuchCredentialError("no credential " + credential_id);
  if (!it->second.active()) {
    throw AlreadyTerminalError("credential " + credential_id + " is " +
                               std::string(ToString(it->second.state)));
  }
  it->second.state = CredentialState::kRevoked;
  PersistLocked();
  return it->second;
}

size_t CredentialStore::MarkDeviceWiped(const std::string& device_id) {
  std::lock_guard lock(mu_);
  if (!devices_.count(device_id))
    throw NoSuchDeviceError("no device " + device_id);
  size_t marked = 0;
  for (auto& [id, c] : credentials_) {
    if (c.device_id == device_id && c.active()) {
      c.state = CredentialState::kWiped;
      ++marked;
    }
  }
  PersistLocked();
  return marked;
}

void CredentialStore::NoteDevice(const std::string& device_id) {
  std::lock_guard lock(mu_);
  if (devices_.insert(device_id).second)
    PersistLocked();
}

bool CredentialStore::KnowsDevice(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  return devices_.count(device_id) > 0;
}

// Persistence ----------------------------------------------------------------

std::string CredentialStore::Serialize() const {
  std::lock_guard lock(mu_);
  return SerializeLocked();
}

std::string CredentialStore::SerializeLocked() const {
  std::ostringstream out;
  for (const auto& [id, u] : users_) {
    json j = {{"record", "user"},
              {"user_id", u.user_id()},
              {"email", u.email()},
              {"display_name", u.display_name()}};
    j["face_template_ref"] =
        u.face_template_ref() ? json(*u.face_template_ref()) : json(nullptr);
    out << j.dump() << '\n';
  }
  for (const auto& d : devices_)
    out << json{{"record", "device"}, {"device_id", d}}.dump() << '\n';
  for (const auto& [id, c] : credentials_) {
    json j = {{"record", "credential"},
              {"credential_id", c.credential_id},
              {"user_id", c.user_id},
              {"rp_id", c.rp_id},
              {"public_key", Base64Encode(c.public_key)},
              {"kind", ToString(c.kind)},
              {"device_id", c.device_id},
              {"counter_seen", c.counter_seen},
              {"state", ToString(c.state)},
              {"created_at", c.created_at}};
    out << j.dump() << '\n';
  }
  return out.str();
}

void CredentialStore::Deserialize(std::string_view text) {
  std::map<std::string, UserIdentity> users;
  std::map<std::string, std::string> by_email;
  std::map<std::string, Credential> credentials;
  std::set<std::string> devices;

  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty())
        continue;
      json j = json::parse(line);
      const std::string record = j.at("record").get<std::string>();
      if (record == "user") {
        std::optional<std::string> face;
        if (!j.at("face_template_ref").is_null())
          face = j.at("face_template_ref").get<std::string>();
        UserIdentity u(j.at("user_id").get<std::string>(),
                       j.at("email").get<std::string>(),
                       j.at("display_name").get<std::string>(), face);
        by_email.emplace(u.email(), u.user_id());
        users.emplace(u.user_id(), std::move(u));
      } else if (record == "device") {
        devices.insert(j.at("device_id").get<std::string>());
      } else if (record == "credential") {
        Credential c;
        c.credential_id = j.at("credential_id").get<std::string>();
        c.user_id = j.at("user_id").get<std::string>();
        c.rp_id = j.at("rp_id").get<std::string>();
        c.public_key = Base64Decode(j.at("public_key").get<std::string>());
        c.kind = DeviceKindFromString(j.at("kind").get<std::string>());
        c.device_id = j.at("device_id").get<std::string>();
        c.counter_seen = j.at("counter_seen").get<uint32_t>();
        c.state = CredentialStateFromString(j.at("state").get<std::string>());
        c.created_at = j.at("created_at").get<TimestampMs>();
        devices.insert(c.device_id);
        credentials.emplace(c.credential_id, std::move(c));
      } else {
        throw StorageError("unknown record type '" + record + "'");
      }
    }
  } catch (const json::exception& e) {
    throw StorageError("line " + std::to_string(line_no) + ": " + e.what());
  } catch (const EncodingError& e) {
    throw StorageError("line " + std::to_string(line_no) + ": " + e.what());
  }

  std::lock_guard lock(mu_);
  users_ = std::move(users);
  user_by_email_ = std::move(by_email);
  credentials_ = std::move(credentials);
  devices_ = std::move(devices);
}

void CredentialStore::AttachFile(std::filesystem::path path) {
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    Deserialize(buf.str());
  }
  std::lock_guard lock(mu_);
  file_ = std::move(path);
  PersistLocked();
}

void CredentialStore::SaveTo(const std::filesystem::path& path) const {
  std::string text = Serialize();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw StorageError("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

void CredentialStore::PersistLocked() const {
  if (!file_)
    return;
  auto tmp = *file_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw StorageError("cannot write " + tmp.string());
    out << SerializeLocked();
  }
  std::filesystem::rename(tmp, *file_);
}

}  // namespace metasecure
