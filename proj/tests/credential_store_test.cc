#include "metasecure/credential_store.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "metasecure/errors.h"

namespace metasecure {
namespace {

namespace fs = std::filesystem;

std::string RandomText(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "a", "Z", "7", " ", "\"", "\\", "\n", "\t", ",", "{", "}", "é", "日本", "😀"};
  std::string s;
  const size_t n = 1 + rng() % 12;
  for (size_t i = 0; i < n; ++i)
    s += pieces[rng() % pieces.size()];
  return s;
}

Credential RandomCredential(std::mt19937_64& rng, const std::string& user_id) {
  Credential c;
  c.credential_id = "cred-" + std::to_string(rng());
  c.user_id = user_id;
  c.rp_id = RandomText(rng);
  c.public_key.resize(rng() % 300);
  for (auto& b : c.public_key)
    b = static_cast<uint8_t>(rng());
  c.kind = rng() % 2 ? DeviceKind::kSmartphone : DeviceKind::kSecurityKey;
  c.device_id = "dev-" + RandomText(rng);
  c.counter_seen = static_cast<uint32_t>(rng());
  c.state = static_cast<CredentialState>(rng() % 3);
  c.created_at = static_cast<TimestampMs>(rng() >> 1);
  return c;
}

fs::path TempPath(const std::string& name) {
  fs::path p = fs::temp_directory_path() /
               ("metasecure-" + name + "-" + std::to_string(::getpid()));
  fs::remove(p);
  return p;
}

TEST(CredentialStore, Users) {
  CredentialStore s;
  UserIdentity a = s.AddUser("a@x", "A");
  EXPECT_EQ(a.user_id().rfind("user-", 0), 0u);
  EXPECT_EQ(s.GetUser(a.user_id()), a);
  EXPECT_EQ(s.FindUserByEmail("a@x"), a);
  EXPECT_FALSE(s.FindUser("user-none"));
  EXPECT_THROW(s.GetUser("user-none"), NoSuchUserError);
  EXPECT_THROW(s.AddUser("a@x", "B"), DuplicateEmailError);
  EXPECT_THROW(s.AddUser("b@x", ""), ValidationError);
  EXPECT_THROW(s.SetFaceTemplateRef("user-none", "f"), NoSuchUserError);
}

TEST(CredentialStore, CredentialLifecycle) {
  CredentialStore s;
  std::string u = s.AddUser("a@x", "A").user_id();
  std::mt19937_64 rng(1);
  Credential c = RandomCredential(rng, u);
  c.state = CredentialState::kActive;
  c.counter_seen = 0;
  c.device_id = "dev-1";
  s.AddCredential(c);
  EXPECT_THROW(s.AddCredential(c), ValidationError);
  Credential orphan = c;
  orphan.credential_id = "cred-orphan";
  orphan.user_id = "user-none";
  EXPECT_THROW(s.AddCredential(orphan), NoSuchUserError);

  EXPECT_TRUE(s.KnowsDevice("dev-1"));
  EXPECT_EQ(s.CredentialsForUser(u).size(), 1u);
  EXPECT_EQ(s.CredentialsForDevice("dev-1").size(), 1u);

  EXPECT_EQ(s.AdvanceCounter(c.credential_id, 3), CounterUpdate::kAccepted);
  EXPECT_EQ(s.AdvanceCounter(c.credential_id, 3), CounterUpdate::kRegression);
  EXPECT_EQ(s.AdvanceCounter(c.credential_id, 2), CounterUpdate::kRegression);
  EXPECT_EQ(s.AdvanceCounter("cred-none", 9), CounterUpdate::kUnknown);
  EXPECT_EQ(s.FindCredential(c.credential_id)->counter_seen, 3u);

  EXPECT_EQ(s.Revoke(c.credential_id).state, CredentialState::kRevoked);
  EXPECT_THROW(s.Revoke(c.credential_id), AlreadyTerminalError);
  EXPECT_THROW(s.Revoke("cred-none"), NoSuchCredentialError);
  EXPECT_EQ(s.AdvanceCounter(c.credential_id, 10), CounterUpdate::kInactive);
  EXPECT_EQ(s.FindCredential(c.credential_id)->counter_seen, 3u);
  // Terminal states stay terminal.
  EXPECT_EQ(s.MarkDeviceWiped("dev-1"), 0u);
  EXPECT_EQ(s.FindCredential(c.credential_id)->state, CredentialState::kRevoked);
  EXPECT_THROW(s.MarkDeviceWiped("dev-unknown"), NoSuchDeviceError);
}

TEST(CredentialStore, SerializationRoundTripIsExact) {
  std::mt19937_64 rng(17);
  for (int run = 0; run < 50; ++run) {
    CredentialStore s;
    std::vector<std::string> users;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 4); ++i) {
      auto u = s.AddUser(std::to_string(i) + RandomText(rng), RandomText(rng));
      if (rng() % 2)
        s.SetFaceTemplateRef(u.user_id(), RandomText(rng));
      users.push_back(u.user_id());
    }
    std::vector<Credential> creds;
    for (int i = 0; i < static_cast<int>(rng() % 6); ++i) {
      creds.push_back(RandomCredential(rng, users[rng() % users.size()]));
      s.AddCredential(creds.back());
    }
    s.NoteDevice("dev-lonely");

    CredentialStore t;
    t.Deserialize(s.Serialize());
    ASSERT_EQ(t.Serialize(), s.Serialize());
    for (const auto& u : users)
      ASSERT_EQ(t.GetUser(u), s.GetUser(u));
    for (const auto& c : creds)
      ASSERT_EQ(t.FindCredential(c.credential_id), c);
    ASSERT_TRUE(t.KnowsDevice("dev-lonely"));
  }
}

TEST(CredentialStore, RejectsCorruptRecords) {
  CredentialStore s;
  EXPECT_THROW(s.Deserialize("{not json}\n"), StorageError);
  EXPECT_THROW(s.Deserialize(R"({"record":"mystery"})"), StorageError);
  EXPECT_THROW(s.Deserialize(R"({"record":"user","user_id":"u"})"),
               StorageError);
}

TEST(CredentialStore, AttachedFileFollowsEveryMutation) {
  fs::path p = TempPath("store");
  std::string u, cred_id;
  {
    CredentialStore s;
    s.AttachFile(p);
    u = s.AddUser("a@x", "A").user_id();
    std::mt19937_64 rng(2);
    Credential c = RandomCredential(rng, u);
    c.state = CredentialState::kActive;
    c.counter_seen = 0;
    cred_id = c.credential_id;
    s.AddCredential(c);
    s.AdvanceCounter(cred_id, 7);
  }
  CredentialStore back;
  back.AttachFile(p);
  EXPECT_EQ(back.GetUser(u).display_name(), "A");
  EXPECT_EQ(back.FindCredential(cred_id)->counter_seen, 7u);
  back.Revoke(cred_id);

  CredentialStore again;
  again.AttachFile(p);
  EXPECT_EQ(again.FindCredential(cred_id)->state, CredentialState::kRevoked);
  fs::remove(p);
}

TEST(CredentialState, Names) {
  EXPECT_EQ(ToString(CredentialState::kWiped), "wiped");
  EXPECT_EQ(CredentialStateFromString("revoked"), CredentialState::kRevoked);
  EXPECT_THROW(CredentialStateFromString("gone"), EncodingError);
}

}  // namespace
}  // namespace metasecure
