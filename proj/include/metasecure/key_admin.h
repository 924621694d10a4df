#ifndef METASECURE_KEY_ADMIN_H_
#define METASECURE_KEY_ADMIN_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "metasecure/authenticator.h"
#include "metasecure/clock.h"
#include "metasecure/credential_store.h"

namespace metasecure {

enum class AdminActionKind { kRevoke, kRemoteWipe, kListKeys };

std::string_view ToString(AdminActionKind kind);

struct AdminAction {
  std::string action_id;
  std::string actor;
  AdminActionKind kind = AdminActionKind::kListKeys;
  std::string target;  // credential id, device id, or user id for listings
  TimestampMs timestamp = 0;
  // Credentials affected by the action.
  size_t affected = 0;
};

// Append-only audit trail; optionally mirrored to a JSON-lines file.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(std::filesystem::path file) : file_(std::move(file)) {}

  void Append(const AdminAction& action);
  std::vector<AdminAction> records() const;
  size_t size() const;

  static std::string FormatLine(const AdminAction& action);

 private:
  mutable std::mutex mu_;
  std::vector<AdminAction> records_;
  std::optional<std::filesystem::path> file_;
};

// What the portal shows for one credential: state, kind and public key only.
struct CredentialSummary {
  std::string credential_id;
  std::string user_id;
  std::string rp_id;
  DeviceKind kind = DeviceKind::kSecurityKey;
  std::string device_id;
  CredentialState state = CredentialState::kActive;
  uint32_t counter_seen = 0;
  TimestampMs created_at = 0;
  Bytes public_key;
};

// Administrator surface over the credential store. Wipes are applied
// server-side first, then queued for the device to pick up on its next
// contact.
class KeyAdmin {
 public:
  KeyAdmin(std::shared_ptr<CredentialStore> store,
           std::shared_ptr<AuditLog> audit,
           std::shared_ptr<const Clock> clock = DefaultClock());

  // Throws NoSuchUserError.
  std::vector<CredentialSummary> ListCredentials(const std::string& actor,
                                                 const std::string& user_id);
  // Throws NoSuchCredentialError, AlreadyTerminalError.
  CredentialSummary RevokeCredential(const std::string& actor,
                                     const std::string& credential_id);
  // Returns the number of credentials newly marked Wiped.
  // Throws NoSuchDeviceError.
  size_t RemoteWipe(const std::string& actor, const std::string& device_id);

  // Called when a device makes contact: records the device as known and
  // drains its queued directives.
  std::vector<DeviceDirective> TakeDirectives(const std::string& device_id);
  size_t pending_directive_count(const std::string& device_id) const;

  AuditLog& audit() { return *audit_; }

 private:
  void Record(const std::string& actor,
              AdminActionKind kind,
              const std::string& target,
              size_t affected);

  std::shared_ptr<CredentialStore> store_;
  std::shared_ptr<AuditLog> audit_;
  std::shared_ptr<const Clock> clock_;

  mutable std::mutex mu_;
  std::map<std::string, std::vector<DeviceDirective>> directives_;
};

CredentialSummary Summarize(const Credential& c);

// Delivers any queued directives to |device|. Returns credentials destroyed.
size_t SyncDevice(KeyAdmin& admin, Authenticator& device);

}  // namespace metasecure

#endif  // METASECURE_KEY_ADMIN_H_
