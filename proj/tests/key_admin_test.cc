#include "metasecure/key_admin.h"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"
#include "metasecure/errors.h"
#include "testing.h"

namespace metasecure {
namespace {

using testing::World;

class KeyAdminTest : public ::testing::Test {
 protected:
  KeyAdminTest()
      : audit_(std::make_shared<AuditLog>()),
        admin_(w_.store, audit_, w_.clock) {}

  World w_;
  std::shared_ptr<AuditLog> audit_;
  KeyAdmin admin_;
};

TEST_F(KeyAdminTest, ListShowsBothDeviceKinds) {
  std::string u = w_.NewUser();
  Authenticator phone = w_.Device(DeviceKind::kSmartphone);
  Authenticator key = w_.Device(DeviceKind::kSecurityKey);
  w_.Register(phone, u);
  w_.Register(key, u);
  auto list = admin_.ListCredentials("root", u);
  ASSERT_EQ(list.size(), 2u);
  std::set<DeviceKind> kinds = {list[0].kind, list[1].kind};
  EXPECT_EQ(kinds, (std::set<DeviceKind>{DeviceKind::kSmartphone,
                                         DeviceKind::kSecurityKey}));
  for (const auto& s : list) {
    EXPECT_EQ(s.state, CredentialState::kActive);
    EXPECT_TRUE(PublicKey::FromDer(s.public_key).has_value());
  }
  EXPECT_TRUE(admin_.ListCredentials("root", w_.NewUser()).empty());
  EXPECT_THROW(admin_.ListCredentials("root", "user-none"), NoSuchUserError);
}

TEST_F(KeyAdminTest, RevokeOneOfTwo) {
  std::string u = w_.NewUser();
  Authenticator a = w_.Device();
  Authenticator b = w_.Device();
  Credential ca = w_.Register(a, u);
  Credential cb = w_.Register(b, u);

  auto [assertion, nonce] = w_.Assert(a, u, ca.credential_id);
  EXPECT_EQ(admin_.RevokeCredential("root", ca.credential_id).state,
            CredentialState::kRevoked);
  EXPECT_EQ(w_.rp->FinishAuthentication(assertion, nonce).failure,
            VerificationFailure::kCredentialInactive);
  EXPECT_TRUE(w_.Login(b, u, cb.credential_id).ok);
  EXPECT_THROW(admin_.RevokeCredential("root", ca.credential_id),
               AlreadyTerminalError);

  auto list = admin_.ListCredentials("root", u);
  for (const auto& s : list) {
    EXPECT_EQ(s.state, s.credential_id == ca.credential_id
                           ? CredentialState::kRevoked
                           : CredentialState::kActive);
  }
}

TEST_F(KeyAdminTest, RemoteWipeMarksThenSyncs) {
  std::string u1 = w_.NewUser();
  std::string u2 = w_.NewUser();
  Authenticator key = w_.Device();
  Credential c1 = w_.Register(key, u1);
  Credential c2 = w_.Register(key, u2);
  auto [pending, nonce] = w_.Assert(key, u1, c1.credential_id);

  EXPECT_EQ(admin_.RemoteWipe("root", key.device_id()), 2u);
  EXPECT_EQ(w_.store->FindCredential(c1.credential_id)->state,
            CredentialState::kWiped);
  EXPECT_EQ(w_.rp->FinishAuthentication(pending, nonce).failure,
            VerificationFailure::kCredentialInactive);
  EXPECT_THROW(w_.rp->BeginAuthentication(u2, "meta.example"),
               NoCredentialError);

  EXPECT_FALSE(key.wiped());
  EXPECT_EQ(admin_.pending_directive_count(key.device_id()), 1u);
  EXPECT_EQ(SyncDevice(admin_, key), 2u);
  EXPECT_TRUE(key.wiped());
  EXPECT_EQ(admin_.pending_directive_count(key.device_id()), 0u);
  EXPECT_EQ(SyncDevice(admin_, key), 0u);
}

TEST_F(KeyAdminTest, WipeEdgeCases) {
  EXPECT_THROW(admin_.RemoteWipe("root", "dev-unknown"), NoSuchDeviceError);
  Authenticator empty = w_.Device();
  EXPECT_TRUE(admin_.TakeDirectives(empty.device_id()).empty());
  EXPECT_EQ(admin_.RemoteWipe("root", empty.device_id()), 0u);
  EXPECT_EQ(SyncDevice(admin_, empty), 0u);
  EXPECT_TRUE(empty.wiped());
}

TEST_F(KeyAdminTest, AuditCountsEveryStateChange) {
  std::mt19937_64 rng(8);
  std::string u = w_.NewUser();
  std::vector<Authenticator> devices;
  std::vector<std::string> creds;
  for (int i = 0; i < 3; ++i) {
    devices.push_back(w_.Device());
    creds.push_back(w_.Register(devices.back(), u).credential_id);
  }
  size_t changes = 0, listings = 0;
  for (int i = 0; i < 40; ++i) {
    switch (rng() % 3) {
      case 0:
        try {
          admin_.RevokeCredential("root", creds[rng() % creds.size()]);
          ++changes;
        } catch (const AlreadyTerminalError&) {
        }
        break;
      case 1:
        admin_.RemoteWipe("root", devices[rng() % devices.size()].device_id());
        ++changes;
        break;
      case 2:
        admin_.ListCredentials("root", u);
        ++listings;
        break;
    }
  }
  auto records = audit_->records();
  size_t state_changing = 0;
  for (const auto& r : records) {
    if (r.kind != AdminActionKind::kListKeys)
      ++state_changing;
    EXPECT_EQ(r.actor, "root");
  }
  EXPECT_EQ(state_changing, changes);
  EXPECT_EQ(records.size(), changes + listings);
  std::set<std::string> ids;
  for (const auto& r : records)
    ids.insert(r.action_id);
  EXPECT_EQ(ids.size(), records.size());
}

TEST_F(KeyAdminTest, AuditFileIsAppendOnlyJsonLines) {
  auto path = std::filesystem::temp_directory_path() /
              ("metasecure-audit-" + std::to_string(::getpid()));
  std::filesystem::remove(path);
  auto file_log = std::make_shared<AuditLog>(path);
  KeyAdmin admin(w_.store, file_log, w_.clock);
  std::string u = w_.NewUser();
  Authenticator d = w_.Device();
  Credential c = w_.Register(d, u);
  admin.RevokeCredential("alice", c.credential_id);
  admin.RemoteWipe("bob", d.device_id());

  std::ifstream in(path);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line))
    lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0]["kind"], "Revoke");
  EXPECT_EQ(lines[0]["actor"], "alice");
  EXPECT_EQ(lines[0]["target"], c.credential_id);
  EXPECT_EQ(lines[1]["kind"], "RemoteWipe");
  EXPECT_EQ(lines[1]["timestamp"], w_.clock->NowMs());
  std::filesystem::remove(path);
}

// After a wipe, nothing the old device or its clones send gets through:
// challenges issued before or after, assertions signed before or after.
TEST_F(KeyAdminTest, WipedCredentialsNeverVerify) {
  std::mt19937_64 rng(12);
  std::string u = w_.NewUser();
  Authenticator key = w_.Device();
  Credential c = w_.Register(key, u);
  Authenticator clone = key.Fork();

  std::vector<std::pair<AssertionResponse, Nonce>> before;
  for (int i = 0; i < 5; ++i)
    before.push_back(w_.Assert(i % 2 ? key : clone, u, c.credential_id));
  std::vector<Challenge> open;
  for (int i = 0; i < 5; ++i)
    open.push_back(w_.rp->BeginAuthentication(u, "meta.example"));

  admin_.RemoteWipe("root", key.device_id());
  int ok = 0;
  for (int i = 0; i < 60; ++i) {
    VerificationResult r;
    if (rng() % 2) {
      auto& [a, n] = before[rng() % before.size()];
      r = w_.rp->FinishAuthentication(a, n);
    } else {
      const Challenge& ch = open[rng() % open.size()];
      r = w_.rp->FinishAuthentication(
          clone.GetAssertion(ch, "meta.example", c.credential_id), ch.nonce);
    }
    ok += r.ok;
    ASSERT_EQ(r.failure, VerificationFailure::kCredentialInactive);
  }
  EXPECT_EQ(ok, 0);
  EXPECT_THROW(w_.rp->BeginAuthentication(u, "meta.example"), NoCredentialError);
}

// A revoke racing authentications: once revoke has returned, no later
// finish succeeds.
TEST_F(KeyAdminTest, RevokeRacingAuthentication) {
  std::string u = w_.NewUser();
  Authenticator d = w_.Device();
  Credential c = w_.Register(d, u);
  std::vector<std::pair<AssertionResponse, Nonce>> ready;
  for (int i = 0; i < 60; ++i)
    ready.push_back(w_.Assert(d, u, c.credential_id));

  std::atomic<bool> revoked{false};
  std::atomic<int> late_success{0};
  std::thread revoker([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    admin_.RevokeCredential("root", c.credential_id);
    revoked = true;
  });
  for (auto& [a, n] : ready) {
    bool after = revoked.load();
    auto r = w_.rp->FinishAuthentication(a, n);
    if (after && r.ok)
      ++late_success;
  }
  revoker.join();
  EXPECT_EQ(late_success.load(), 0);
  EXPECT_FALSE(w_.rp->FinishAuthentication(ready.back().first,
                                           ready.back().second)
                   .ok);
}

TEST(AdminActionKind, Names) {
  EXPECT_EQ(ToString(AdminActionKind::kRevoke), "Revoke");
  EXPECT_EQ(ToString(AdminActionKind::kRemoteWipe), "RemoteWipe");
  EXPECT_EQ(ToString(AdminActionKind::kListKeys), "ListKeys");
}

}  // namespace
}  // namespace metasecure
