#ifndef METASECURE_CRYPTO_CORE_H_
#define METASECURE_CRYPTO_CORE_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "metasecure/bytes.h"
#include "metasecure/clock.h"

// OpenSSL's key handle; kept opaque so callers never touch raw key material.
struct evp_pkey_st;

namespace metasecure {

constexpr size_t kRsaModulusBits = 2048;
constexpr size_t kSignatureLength = kRsaModulusBits / 8;
constexpr size_t kNonceLength = 32;
constexpr size_t kSha256Length = 32;
constexpr size_t kSignedPayloadLength = 69;
constexpr DurationMs kDefaultChallengeTtlMs = 120'000;

using Sha256Digest = std::array<uint8_t, kSha256Length>;
using Nonce = std::array<uint8_t, kNonceLength>;

Sha256Digest Sha256(ByteSpan data);
inline Sha256Digest Sha256(std::string_view s) { return Sha256(AsBytes(s)); }

// Fills |out| from the OpenSSL CSPRNG. Safe to call concurrently.
// Throws GenerationError when the entropy source fails.
void SecureRandom(std::span<uint8_t> out);
// Random opaque identifier, |prefix| followed by 16 hex characters.
std::string RandomId(std::string_view prefix);

class PublicKey {
 public:
  // Parses a DER SubjectPublicKeyInfo. Returns nullopt for anything that is
  // not an RSA public key.
  static std::optional<PublicKey> FromDer(ByteSpan der);

  Bytes ToDer() const;
  size_t ModulusBits() const;
  // Big-endian modulus, for distinctness checks.
  Bytes Modulus() const;

 private:
  friend class PrivateKey;
  friend bool VerifySignature(const PublicKey&, ByteSpan, ByteSpan);
  explicit PublicKey(std::shared_ptr<evp_pkey_st> key) : key_(std::move(key)) {}

  std::shared_ptr<evp_pkey_st> key_;
};

// Signing half of a key pair. There is no accessor returning the key bytes;
// the only export is the password-sealed PKCS#8 form used by device files.
class PrivateKey {
 public:
  PublicKey public_key() const;

  // RSA-PSS over SHA-256 of |message|; 256-byte output.
  Bytes Sign(ByteSpan message) const;

  // PKCS#8 PEM encrypted with AES-256-CBC under |passphrase|.
  std::string SealPem(std::string_view passphrase) const;
  static PrivateKey UnsealPem(std::string_view pem, std::string_view passphrase);

 private:
  friend struct KeyPair;
  friend struct KeyPair GenerateKeyPair();
  explicit PrivateKey(std::shared_ptr<evp_pkey_st> key) : key_(std::move(key)) {}

  std::shared_ptr<evp_pkey_st> key_;
};

struct KeyPair {
  std::string key_id;
  PublicKey public_key;
  PrivateKey private_key;
};

// Fresh RSA-2048 pair. Throws GenerationError on entropy or keygen failure.
KeyPair GenerateKeyPair();

enum class ChallengePurpose { kRegistration, kAuthentication };

std::string_view ToString(ChallengePurpose purpose);
ChallengePurpose ChallengePurposeFromString(std::string_view s);

struct Challenge {
  Nonce nonce{};
  std::string rp_id;
  std::string user_id;
  ChallengePurpose purpose = ChallengePurpose::kAuthentication;
  TimestampMs issued_at = 0;
  DurationMs ttl = kDefaultChallengeTtlMs;
  bool consumed = false;

  TimestampMs expires_at() const { return issued_at + ttl; }
  bool IsExpired(TimestampMs now) const { return now >= expires_at(); }
  bool IsValid(TimestampMs now) const { return !consumed && !IsExpired(now); }

  // false -> true exactly once. Returns false if already consumed.
  bool Consume() {
    if (consumed)
      return false;
    consumed = true;
    return true;
  }
};

// Throws ValidationError for an empty |rp_id| or non-positive |ttl|.
Challenge NewChallenge(std::string rp_id,
                       std::string user_id,
                       ChallengePurpose purpose,
                       TimestampMs now,
                       DurationMs ttl = kDefaultChallengeTtlMs);

constexpr uint8_t kFlagUserPresent = 0x01;

// The 69-byte structure an authenticator signs:
//   rp_id_hash(32) | flags(1) | counter(4, big-endian) | challenge_hash(32)
struct SignedPayload {
  Sha256Digest rp_id_hash{};
  uint8_t flags = 0;
  uint32_t counter = 0;
  Sha256Digest challenge_hash{};

  bool user_present() const { return flags & kFlagUserPresent; }

  std::array<uint8_t, kSignedPayloadLength> Serialize() const;
  // Throws EncodingError unless |bytes| is exactly 69 bytes.
  static SignedPayload Deserialize(ByteSpan bytes);

  friend bool operator==(const SignedPayload&, const SignedPayload&) = default;
};

SignedPayload MakePayload(std::string_view rp_id,
                          const Nonce& nonce,
                          uint32_t counter,
                          bool user_present);

Bytes SignPayload(const PrivateKey& key, const SignedPayload& payload);
// Raw form; throws EncodingError unless |serialized| is 69 bytes.
Bytes SignPayload(const PrivateKey& key, ByteSpan serialized);

// Never throws; any malformed input yields false.
bool VerifySignature(const PublicKey& key, ByteSpan message, ByteSpan signature);
bool VerifySignature(const PublicKey& key,
                     const SignedPayload& payload,
                     ByteSpan signature);
bool VerifySignature(ByteSpan public_key_der,
                     const SignedPayload& payload,
                     ByteSpan signature);

}  // namespace metasecure

#endif  // METASECURE_CRYPTO_CORE_H_
