#include "metasecure/crypto_core.h"

#include <openssl/bio.h>
#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include <cstring>

#include "metasecure/errors.h"

namespace metasecure {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct BioDeleter {
  void operator()(BIO* p) const { BIO_free(p); }
};

using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using BioPtr = std::unique_ptr<BIO, BioDeleter>;

std::shared_ptr<EVP_PKEY> WrapKey(EVP_PKEY* key) {
  return std::shared_ptr<EVP_PKEY>(key, PkeyDeleter());
}

bool ConfigurePss(EVP_PKEY_CTX* ctx) {
  return EVP_PKEY_CTX_set_rsa_padding(ctx, RSA_PKCS1_PSS_PADDING) > 0 &&
         EVP_PKEY_CTX_set_rsa_pss_saltlen(ctx, RSA_PSS_SALTLEN_DIGEST) > 0 &&
         EVP_PKEY_CTX_set_rsa_mgf1_md(ctx, EVP_sha256()) > 0;
}

}  // namespace

Sha256Digest Sha256(ByteSpan data) {
  Sha256Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw GenerationError("SHA-256 digest failed");
  }
  return out;
}

void SecureRandom(std::span<uint8_t> out) {
  if (out.empty())
    return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
    throw GenerationError("entropy source failure");
}

std::string RandomId(std::string_view prefix) {
  std::array<uint8_t, 8> raw;
  SecureRandom(raw);
  return std::string(prefix) + HexEncode(raw);
}

// PublicKey ------------------------------------------------------------------

std::optional<PublicKey> PublicKey::FromDer(ByteSpan der) {
  const unsigned char* p = der.data();
  EVP_PKEY* key = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
  if (!key) {
    ERR_clear_error();
    return std::nullopt;
  }
  auto wrapped = WrapKey(key);
  if (EVP_PKEY_get_base_id(key) != EVP_PKEY_RSA ||
      p != der.data() + der.size()) {
    return std::nullopt;
  }
  return PublicKey(std::move(wrapped));
}

Bytes PublicKey::ToDer() const {
  unsigned char* buf = nullptr;
  int len = i2d_PUBKEY(key_.get(), &buf);
  if (len <= 0)
    throw EncodingError("cannot encode public key");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

size_t PublicKey::ModulusBits() const {
  return static_cast<size_t>(EVP_PKEY_get_bits(key_.get()));
}

Bytes PublicKey::Modulus() const {
  BIGNUM* n = nullptr;
  if (EVP_PKEY_get_bn_param(key_.get(), OSSL_PKEY_PARAM_RSA_N, &n) != 1)
    throw EncodingError("cannot read modulus");
  Bytes out(BN_num_bytes(n));
  BN_bn2bin(n, out.data());
  BN_free(n);
  return out;
}

// PrivateKey -----------------------------------------------------------------

PublicKey PrivateKey::public_key() const {
  // Round-trip through DER so the public handle carries no private parts.
  unsigned char* buf = nullptr;
  int len = i2d_PUBKEY(key_.get(), &buf);
  if (len <= 0)
    throw EncodingError("cannot derive public key");
  Bytes der(buf, buf + len);
  OPENSSL_free(buf);
  auto pub = PublicKey::FromDer(der);
  if (!pub)
    throw EncodingError("cannot derive public key");
  return *pub;
}

Bytes PrivateKey::Sign(ByteSpan message) const {
  MdCtxPtr md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  if (!md ||
      EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, key_.get()) !=
          1 ||
      !ConfigurePss(pctx)) {
    throw GenerationError("cannot initialise signer");
  }
  size_t sig_len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &sig_len, message.data(),
                     message.size()) != 1) {
    throw GenerationError("cannot size signature");
  }
  Bytes sig(sig_len);
  if (EVP_DigestSign(md.get(), sig.data(), &sig_len, message.data(),
                     message.size()) != 1) {
    throw GenerationError("signing failed");
  }
  sig.resize(sig_len);
  return sig;
}

std::string PrivateKey::SealPem(std::string_view passphrase) const {
  BioPtr bio(BIO_new(BIO_s_mem()));
  std::string pass(passphrase);
  if (!bio || PEM_write_bio_PKCS8PrivateKey(
                  bio.get(), key_.get(), EVP_aes_256_cbc(), pass.data(),
                  static_cast<int>(pass.size()), nullptr, nullptr) != 1) {
    throw EncodingError("cannot seal private key");
  }
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<size_t>(len));
}

PrivateKey PrivateKey::UnsealPem(std::string_view pem,
                                 std::string_view passphrase) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  std::string pass(passphrase);
  EVP_PKEY* key = bio ? PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr,
                                                pass.data())
                      : nullptr;
  if (!key)
    throw EncodingError("cannot unseal private key (wrong secret?)");
  auto wrapped = WrapKey(key);
  if (EVP_PKEY_get_base_id(key) != EVP_PKEY_RSA)
    throw EncodingError("sealed key is not RSA");
  return PrivateKey(std::move(wrapped));
}

KeyPair GenerateKeyPair() {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_RSA, nullptr));
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), kRsaModulusBits) != 1) {
    throw GenerationError("cannot initialise RSA keygen");
  }
  EVP_PKEY* raw = nullptr;
  if (EVP_PKEY_keygen(ctx.get(), &raw) != 1 || !raw)
    throw GenerationError("RSA keygen failed");
  PrivateKey priv(WrapKey(raw));
  PublicKey pub = priv.public_key();
  return KeyPair{RandomId("key-"), std::move(pub), std::move(priv)};
}

// Challenges -----------------------------------------------------------------

std::string_view ToString(ChallengePurpose purpose) {
  switch (purpose) {
    case ChallengePurpose::kRegistration:
      return "registration";
    case ChallengePurpose::kAuthentication:
      return "authentication";
  }
  return "authentication";
}

ChallengePurpose ChallengePurposeFromString(std::string_view s) {
  if (s == "registration")
    return ChallengePurpose::kRegistration;
  if (s == "authentication")
    return ChallengePurpose::kAuthentication;
  throw EncodingError("unknown challenge purpose: " + std::string(s));
}

Challenge NewChallenge(std::string rp_id,
                       std::string user_id,
                       ChallengePurpose purpose,
                       TimestampMs now,
                       DurationMs ttl) {
  if (rp_id.empty())
    throw ValidationError("rp_id must not be empty");
  if (ttl <= 0)
    throw ValidationError("challenge ttl must be positive");
  Challenge c;
  SecureRandom(c.nonce);
  c.rp_id = std::move(rp_id);
  c.user_id = std::move(user_id);
  c.purpose = purpose;
  c.issued_at = now;
  c.ttl = ttl;
  return c;
}

// SignedPayload --------------------------------------------------------------

std::array<uint8_t, kSignedPayloadLength> SignedPayload::Serialize() const {
  std::array<uint8_t, kSignedPayloadLength> out{};
  auto it = std::copy(rp_id_hash.begin(), rp_id_hash.end(), out.begin());
  *it++ = flags;
  *it++ = static_cast<uint8_t>(counter >> 24);
  *it++ = static_cast<uint8_t>(counter >> 16);
  *it++ = static_cast<uint8_t>(counter >> 8);
  *it++ = static_cast<uint8_t>(counter);
  std::copy(challenge_hash.begin(), challenge_hash.end(), it);
  return out;
}

SignedPayload SignedPayload::Deserialize(ByteSpan bytes) {
  if (bytes.size() != kSignedPayloadLength) {
    throw EncodingError("signed payload must be 69 bytes, got " +
                        std::to_string(bytes.size()));
  }
  SignedPayload p;
  std::memcpy(p.rp_id_hash.data(), bytes.data(), kSha256Length);
  p.flags = bytes[32];
  p.counter = (uint32_t{bytes[33]} << 24) | (uint32_t{bytes[34]} << 16) |
              (uint32_t{bytes[35]} << 8) | uint32_t{bytes[36]};
  std::memcpy(p.challenge_hash.data(), bytes.data() + 37, kSha256Length);
  return p;
}

SignedPayload MakePayload(std::string_view rp_id,
                          const Nonce& nonce,
                          uint32_t counter,
                          bool user_present) {
  SignedPayload p;
  p.rp_id_hash = Sha256(rp_id);
  p.flags = user_present ? kFlagUserPresent : 0;
  p.counter = counter;
  p.challenge_hash = Sha256(ByteSpan(nonce));
  return p;
}

Bytes SignPayload(const PrivateKey& key, const SignedPayload& payload) {
  auto bytes = payload.Serialize();
  return key.Sign(bytes);
}

Bytes SignPayload(const PrivateKey& key, ByteSpan serialized) {
  if (serialized.size() != kSignedPayloadLength)
    throw EncodingError("payload to sign must be 69 bytes");
  return key.Sign(serialized);
}

bool VerifySignature(const PublicKey& key, ByteSpan message, ByteSpan signature) {
  if (!key.key_ || signature.size() != kSignatureLength)
    return false;
  MdCtxPtr md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  if (!md ||
      EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr,
                           key.key_.get()) != 1 ||
      !ConfigurePss(pctx)) {
    return false;
  }
  bool ok = EVP_DigestVerify(md.get(), signature.data(), signature.size(),
                             message.data(), message.size()) == 1;
  if (!ok)
    ERR_clear_error();
  return ok;
}

bool VerifySignature(const PublicKey& key,
                     const SignedPayload& payload,
                     ByteSpan signature) {
  auto bytes = payload.Serialize();
  return VerifySignature(key, ByteSpan(bytes), signature);
}

bool VerifySignature(ByteSpan public_key_der,
                     const SignedPayload& payload,
                     ByteSpan signature) {
  auto key = PublicKey::FromDer(public_key_der);
  return key && VerifySignature(*key, payload, signature);
}

}  // namespace metasecure
