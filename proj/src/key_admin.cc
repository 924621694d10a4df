#include "metasecure/key_admin.h"

#include <fstream>

#include "json.hpp"
#include "metasecure/crypto_core.h"
#include "metasecure/errors.h"

namespace metasecure {

std::string_view ToString(AdminActionKind kind) {
  switch (kind) {
    case AdminActionKind::kRevoke:
      return "Revoke";
    case AdminActionKind::kRemoteWipe:
      return "RemoteWipe";
    case AdminActionKind::kListKeys:
      return "ListKeys";
  }
  return "ListKeys";
}

void AuditLog::Append(const AdminAction& action) {
  std::lock_guard lock(mu_);
  records_.push_back(action);
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    if (!out)
      throw StorageError("cannot append to audit log " + file_->string());
    out << FormatLine(action) << '\n';
  }
}

std::vector<AdminAction> AuditLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

size_t AuditLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::string AuditLog::FormatLine(const AdminAction& action) {
  return nlohmann::json{{"action_id", action.action_id},
                        {"actor", action.actor},
                        {"kind", ToString(action.kind)},
                        {"target", action.target},
                        {"timestamp", action.timestamp},
                        {"affected", action.affected}}
      .dump();
}

CredentialSummary Summarize(const Credential& c) {
  return CredentialSummary{c.credential_id, c.user_id,      c.rp_id,
                           c.kind,          c.device_id,    c.state,
                           c.counter_seen,  c.created_at,   c.public_key};
}

KeyAdmin::KeyAdmin(std::shared_ptr<CredentialStore> store,
                   std::shared_ptr<AuditLog> audit,
                   std::shared_ptr<const Clock> clock)
    : store_(std::move(store)),
      audit_(std::move(audit)),
      clock_(std::move(clock)) {}

void KeyAdmin::Record(const std::string& actor,
                      AdminActionKind kind,
                      const std::string& target,
                      size_t affected) {
  audit_->Append(AdminAction{RandomId("act-"), actor, kind, target,
                             clock_->NowMs(), affected});
}

std::vector<CredentialSummary> KeyAdmin::ListCredentials(
    const std::string& actor,
    const std::string& user_id) {
  store_->GetUser(user_id);
  std::vector<CredentialSummary> out;
  for (const auto& c : store_->CredentialsForUser(user_id))
    out.push_back(Summarize(c));
  Record(actor, AdminActionKind::kListKeys, user_id, 0);
  return out;
}

CredentialSummary KeyAdmin::RevokeCredential(const std::string& actor,
                                             const std::string& credential_id) {
  Credential revoked = store_->Revoke(credential_id);
  Record(actor, AdminActionKind::kRevoke, credential_id, 1);
  return Summarize(revoked);
}

size_t KeyAdmin::RemoteWipe(const std::string& actor,
                            const std::string& device_id) {
  size_t marked = store_->MarkDeviceWiped(device_id);
  {
    std::lock_guard lock(mu_);
    auto& queue = directives_[device_id];
    if (queue.empty())
      queue.push_back(DeviceDirective::kWipe);
  }
  Record(actor, AdminActionKind::kRemoteWipe, device_id, marked);
  return marked;
}

std::vector<DeviceDirective> KeyAdmin::TakeDirectives(
    const std::string& device_id) {
  store_->NoteDevice(device_id);
  std::lock_guard lock(mu_);
  auto it = directives_.find(device_id);
  if (it == directives_.end())
    return {};
  std::vector<DeviceDirective> out = std::move(it->second);
  directives_.erase(it);
  return out;
}

size_t KeyAdmin::pending_directive_count(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = directives_.find(device_id);
  return it == directives_.end() ? 0 : it->second.size();
}

size_t SyncDevice(KeyAdmin& admin, Authenticator& device) {
  return device.ApplyDirectives(admin.TakeDirectives(device.device_id()));
}

}  // namespace metasecure
