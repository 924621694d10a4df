#include "metasecure/authenticator.h"

#include <limits>

#include "json.hpp"
#include "metasecure/errors.h"

namespace metasecure {

using nlohmann::json;

std::string_view ToString(DeviceKind kind) {
  return kind == DeviceKind::kSmartphone ? "smartphone" : "security_key";
}

DeviceKind DeviceKindFromString(std::string_view s) {
  if (s == "smartphone")
    return DeviceKind::kSmartphone;
  if (s == "security_key")
    return DeviceKind::kSecurityKey;
  throw EncodingError("unknown device kind: " + std::string(s));
}

std::string_view ToString(DeviceDirective directive) {
  switch (directive) {
    case DeviceDirective::kWipe:
      return "wipe";
  }
  return "wipe";
}

DeviceDirective DeviceDirectiveFromString(std::string_view s) {
  if (s == "wipe")
    return DeviceDirective::kWipe;
  throw EncodingError("unknown device directive: " + std::string(s));
}

Authenticator::Authenticator(DeviceKind kind,
                             std::shared_ptr<const Clock> clock)
    : Authenticator(RandomId("dev-"), kind, std::move(clock)) {}

Authenticator::Authenticator(std::string device_id,
                             DeviceKind kind,
                             std::shared_ptr<const Clock> clock)
    : device_id_(std::move(device_id)), kind_(kind), clock_(std::move(clock)) {}

std::vector<std::string> Authenticator::credential_ids() const {
  std::vector<std::string> ids;
  ids.reserve(slots_.size());
  for (const auto& [id, slot] : slots_)
    ids.push_back(id);
  return ids;
}

std::optional<uint32_t> Authenticator::counter(
    const std::string& credential_id) const {
  auto it = slots_.find(credential_id);
  if (it == slots_.end())
    return std::nullopt;
  return it->second.counter;
}

void Authenticator::CheckAlive() const {
  if (wiped_)
    throw DeviceWipedError("device " + device_id_ + " has been wiped");
}

AttestationResponse Authenticator::MakeCredential(const Challenge& challenge,
                                                  std::string_view rp_id,
                                                  std::string_view user_id) {
  CheckAlive();
  if (challenge.purpose != ChallengePurpose::kRegistration)
    throw ValidationError("make_credential needs a registration challenge");
  if (challenge.IsExpired(clock_->NowMs()))
    throw ChallengeExpiredError("registration challenge expired");
  if (rp_id.empty())
    throw ValidationError("rp_id must not be empty");

  KeyPair pair = GenerateKeyPair();
  std::string credential_id = RandomId("cred-");
  while (slots_.count(credential_id))
    credential_id = RandomId("cred-");

  Slot slot{pair.private_key, pair.public_key.ToDer(), std::string(rp_id),
            std::string(user_id), 0};

  AttestationResponse response;
  response.credential_id = credential_id;
  response.public_key = slot.public_key_der;
  response.device_id = device_id_;
  response.kind = kind_;
  response.signed_payload = MakePayload(rp_id, challenge.nonce, 0, true);
  response.signature = SignPayload(slot.key, response.signed_payload);

  slots_.emplace(std::move(credential_id), std::move(slot));
  return response;
}

AssertionResponse Authenticator::GetAssertion(const Challenge& challenge,
                                              std::string_view rp_id,
                                              const std::string& credential_id,
                                              bool user_present) {
  CheckAlive();
  auto it = slots_.find(credential_id);
  if (it == slots_.end())
    throw NoSuchCredentialError("no credential " + credential_id);
  Slot& slot = it->second;
  if (slot.rp_id != rp_id) {
    throw RpMismatchError("credential is bound to " + slot.rp_id +
                          ", not " + std::string(rp_id));
  }
  if (challenge.IsExpired(clock_->NowMs()))
    throw ChallengeExpiredError("authentication challenge expired");
  if (slot.counter == std::numeric_limits<uint32_t>::max())
    throw GenerationError("signature counter exhausted");

  ++slot.counter;
  AssertionResponse response;
  response.credential_id = credential_id;
  response.signed_payload =
      MakePayload(slot.rp_id, challenge.nonce, slot.counter, user_present);
  response.signature = SignPayload(slot.key, response.signed_payload);
  return response;
}

size_t Authenticator::Wipe() {
  size_t destroyed = slots_.size();
  slots_.clear();
  wiped_ = true;
  return destroyed;
}

size_t Authenticator::ApplyDirectives(
    const std::vector<DeviceDirective>& directives) {
  size_t destroyed = 0;
  for (DeviceDirective d : directives) {
    if (d == DeviceDirective::kWipe)
      destroyed += Wipe();
  }
  return destroyed;
}

Authenticator Authenticator::Fork() const {
  Authenticator copy(device_id_, kind_, clock_);
  copy.slots_ = slots_;
  copy.wiped_ = wiped_;
  return copy;
}

std::string Authenticator::Seal(std::string_view secret) const {
  if (secret.empty())
    throw ValidationError("device secret must not be empty");
  json slots = json::array();
  for (const auto& [id, slot] : slots_) {
    slots.push_back({{"credential_id", id},
                     {"rp_id", slot.rp_id},
                     {"user_id", slot.user_id},
                     {"counter", slot.counter},
                     {"public_key", Base64Encode(slot.public_key_der)},
                     {"sealed_private_key", slot.key.SealPem(secret)}});
  }
  json doc = {{"format", "metasecure-device/1"},
              {"device_id", device_id_},
              {"kind", ToString(kind_)},
              {"wiped", wiped_},
              {"slots", std::move(slots)}};
  return doc.dump(2) + "\n";
}

Authenticator Authenticator::Unseal(std::string_view sealed,
                                    std::string_view secret,
                                    std::shared_ptr<const Clock> clock) {
  try {
    json doc = json::parse(sealed);
    if (doc.at("format") != "metasecure-device/1")
      throw EncodingError("unsupported device file format");
    Authenticator device(doc.at("device_id").get<std::string>(),
                         DeviceKindFromString(doc.at("kind").get<std::string>()),
                         std::move(clock));
    device.wiped_ = doc.at("wiped").get<bool>();
    for (const auto& s : doc.at("slots")) {
      Slot slot{PrivateKey::UnsealPem(s.at("sealed_private_key").get<std::string>(),
                                      secret),
                Base64Decode(s.at("public_key").get<std::string>()),
                s.at("rp_id").get<std::string>(),
                s.at("user_id").get<std::string>(),
                s.at("counter").get<uint32_t>()};
      device.slots_.emplace(s.at("credential_id").get<std::string>(),
                            std::move(slot));
    }
    if (device.wiped_ && !device.slots_.empty())
      throw EncodingError("wiped device file still lists credentials");
    return device;
  } catch (const json::exception& e) {
    throw EncodingError(std::string("malformed device file: ") + e.what());
  }
}

}  // namespace metasecure
