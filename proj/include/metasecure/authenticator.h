#ifndef METASECURE_AUTHENTICATOR_H_
#define METASECURE_AUTHENTICATOR_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metasecure/clock.h"
#include "metasecure/crypto_core.h"

namespace metasecure {

enum class DeviceKind { kSecurityKey, kSmartphone };

std::string_view ToString(DeviceKind kind);
// Accepts "security_key" / "smartphone". Throws EncodingError otherwise.
DeviceKind DeviceKindFromString(std::string_view s);

struct AttestationResponse {
  std::string credential_id;
  Bytes public_key;  // DER SubjectPublicKeyInfo
  std::string device_id;
  DeviceKind kind = DeviceKind::kSecurityKey;
  SignedPayload signed_payload;
  Bytes signature;
};

struct AssertionResponse {
  std::string credential_id;
  SignedPayload signed_payload;
  Bytes signature;
};

// Instructions the server queues for a device until it next makes contact.
enum class DeviceDirective { kWipe };

std::string_view ToString(DeviceDirective directive);
DeviceDirective DeviceDirectiveFromString(std::string_view s);

// Software stand-in for a FIDO2 security key or a phone acting as one. Private
// keys are created inside the device and no method hands them out; the only
// persistence path seals them under a caller-supplied secret.
//
// A device is single-owner: callers serialise access to one instance.
class Authenticator {
 public:
  explicit Authenticator(DeviceKind kind,
                         std::shared_ptr<const Clock> clock = DefaultClock());
  Authenticator(std::string device_id,
                DeviceKind kind,
                std::shared_ptr<const Clock> clock = DefaultClock());

  Authenticator(Authenticator&&) = default;
  Authenticator& operator=(Authenticator&&) = default;
  Authenticator(const Authenticator&) = delete;
  Authenticator& operator=(const Authenticator&) = delete;

  const std::string& device_id() const { return device_id_; }
  DeviceKind kind() const { return kind_; }
  bool wiped() const { return wiped_; }
  size_t credential_count() const { return slots_.size(); }
  std::vector<std::string> credential_ids() const;
  std::optional<uint32_t> counter(const std::string& credential_id) const;

  // Creates a new slot (counter 0) bound to |rp_id| and |user_id| and returns
  // a self-attested registration response.
  // Throws DeviceWipedError, ChallengeExpiredError, or ValidationError when
  // the challenge is not a registration challenge.
  AttestationResponse MakeCredential(const Challenge& challenge,
                                     std::string_view rp_id,
                                     std::string_view user_id);

  // Increments the slot counter, then signs the payload carrying it.
  // Throws DeviceWipedError, NoSuchCredentialError, RpMismatchError or
  // ChallengeExpiredError.
  AssertionResponse GetAssertion(const Challenge& challenge,
                                 std::string_view rp_id,
                                 const std::string& credential_id,
                                 bool user_present = true);

  // Destroys every slot and kills the device. Returns the number destroyed;
  // a second call returns 0.
  size_t Wipe();

  // Applies server directives. Returns the number of credentials destroyed.
  size_t ApplyDirectives(const std::vector<DeviceDirective>& directives);

  // A byte-for-byte copy of this device's state, sharing key material. Models
  // a cloned authenticator for counter-regression checks.
  Authenticator Fork() const;

  // Device file: public metadata in clear, each private key as an encrypted
  // PKCS#8 PEM under |secret|.
  std::string Seal(std::string_view secret) const;
  // Throws EncodingError on a malformed file or wrong secret.
  static Authenticator Unseal(std::string_view sealed,
                              std::string_view secret,
                              std::shared_ptr<const Clock> clock = DefaultClock());

 private:
  struct Slot {
    PrivateKey key;
    Bytes public_key_der;
    std::string rp_id;
    std::string user_id;
    uint32_t counter = 0;
  };

  void CheckAlive() const;

  std::string device_id_;
  DeviceKind kind_;
  std::shared_ptr<const Clock> clock_;
  std::map<std::string, Slot> slots_;
  bool wiped_ = false;
};

}  // namespace metasecure

#endif  // METASECURE_AUTHENTICATOR_H_
