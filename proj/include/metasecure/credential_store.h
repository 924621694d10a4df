#ifndef METASECURE_CREDENTIAL_STORE_H_
#define METASECURE_CREDENTIAL_STORE_H_

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "metasecure/authenticator.h"
#include "metasecure/bytes.h"
#include "metasecure/clock.h"

namespace metasecure {

enum class CredentialState { kActive, kRevoked, kWiped };

std::string_view ToString(CredentialState state);
CredentialState CredentialStateFromString(std::string_view s);

struct Credential {
  std::string credential_id;
  std::string user_id;
  std::string rp_id;
  Bytes public_key;  // DER SubjectPublicKeyInfo
  DeviceKind kind = DeviceKind::kSecurityKey;
  std::string device_id;
  uint32_t counter_seen = 0;
  CredentialState state = CredentialState::kActive;
  TimestampMs created_at = 0;

  bool active() const { return state == CredentialState::kActive; }

  friend bool operator==(const Credential&, const Credential&) = default;
};

// A registered person. The display name is fixed at registration; nothing in
// the library renames a user.
class UserIdentity {
 public:
  UserIdentity(std::string user_id,
               std::string email,
               std::string display_name,
               std::optional<std::string> face_template_ref = std::nullopt)
      : user_id_(std::move(user_id)),
        email_(std::move(email)),
        display_name_(std::move(display_name)),
        face_template_ref_(std::move(face_template_ref)) {}

  const std::string& user_id() const { return user_id_; }
  const std::string& email() const { return email_; }
  const std::string& display_name() const { return display_name_; }
  const std::optional<std::string>& face_template_ref() const {
    return face_template_ref_;
  }

  UserIdentity WithFaceTemplate(std::string ref) const {
    return UserIdentity(user_id_, email_, display_name_, std::move(ref));
  }

  friend bool operator==(const UserIdentity&, const UserIdentity&) = default;

 private:
  std::string user_id_;
  std::string email_;
  std::string display_name_;
  std::optional<std::string> face_template_ref_;
};

enum class CounterUpdate { kAccepted, kRegression, kInactive, kUnknown };

// Users, credentials and known devices. Several relying-party front ends may
// share one store (the SSO deployment). All mutations are atomic under one
// lock; when a backing file is attached, every mutation rewrites it.
class CredentialStore {
 public:
  CredentialStore() = default;
  CredentialStore(const CredentialStore&) = delete;
  CredentialStore& operator=(const CredentialStore&) = delete;

  // Throws ValidationError on empty fields, DuplicateEmailError on reuse.
  UserIdentity AddUser(std::string email, std::string display_name);
  std::optional<UserIdentity> FindUser(const std::string& user_id) const;
  std::optional<UserIdentity> FindUserByEmail(const std::string& email) const;
  // Throws NoSuchUserError.
  UserIdentity GetUser(const std::string& user_id) const;
  void SetFaceTemplateRef(const std::string& user_id, std::string ref);

  // Throws ValidationError if the id is already present.
  void AddCredential(const Credential& credential);
  std::optional<Credential> FindCredential(const std::string& id) const;
  std::vector<Credential> CredentialsForUser(const std::string& user_id) const;
  std::vector<Credential> CredentialsForDevice(const std::string& device_id) const;

  // Atomic check-and-set: accepts only when the credential is Active and
  // |counter| > counter_seen.
  CounterUpdate AdvanceCounter(const std::string& credential_id,
                               uint32_t counter);

  // Throws NoSuchCredentialError or AlreadyTerminalError.
  Credential Revoke(const std::string& credential_id);
  // Marks every Active credential of the device Wiped; returns how many.
  // Throws NoSuchDeviceError for a device never seen.
  size_t MarkDeviceWiped(const std::string& device_id);

  void NoteDevice(const std::string& device_id);
  bool KnowsDevice(const std::string& device_id) const;

  // One JSON object per line: users first, then devices, then credentials.
  std::string Serialize() const;
  // Replaces the current contents. Throws StorageError on malformed input.
  void Deserialize(std::string_view text);

  // Loads |path| if it exists, then rewrites it after every mutation.
  void AttachFile(std::filesystem::path path);
  void SaveTo(const std::filesystem::path& path) const;

 private:
  void PersistLocked() const;
  std::string SerializeLocked() const;

  mutable std::mutex mu_;
  std::map<std::string, UserIdentity> users_;
  std::map<std::string, std::string> user_by_email_;
  std::map<std::string, Credential> credentials_;
  std::set<std::string> devices_;
  std::optional<std::filesystem::path> file_;
};

}  // namespace metasecure

#endif  // METASECURE_CREDENTIAL_STORE_H_
