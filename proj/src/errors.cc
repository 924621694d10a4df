#include "metasecure/errors.h"

#include <map>

namespace metasecure {

namespace {

template <typename E>
[[noreturn]] void Raise(const std::string& message) {
  throw E(message);
}

}  // namespace

void ThrowErrorOfKind(const std::string& kind, const std::string& message) {
  using Thrower = void (*)(const std::string&);
  static const std::map<std::string, Thrower> kThrowers = {
#define ENTRY(Name) {#Name, &Raise<Name>}
      ENTRY(ValidationError),       ENTRY(EncodingError),
      ENTRY(GenerationError),       ENTRY(DeviceWipedError),
      ENTRY(ChallengeExpiredError), ENTRY(NoSuchCredentialError),
      ENTRY(RpMismatchError),       ENTRY(NoSuchUserError),
      ENTRY(DuplicateEmailError),   ENTRY(NoCredentialError),
      ENTRY(RegistrationError),     ENTRY(SessionNotReadyError),
      ENTRY(NoTemplateError),       ENTRY(AlreadyTerminalError),
      ENTRY(NoSuchDeviceError),     ENTRY(NoSuchSessionError),
      ENTRY(PrerequisiteError),     ENTRY(OutOfOrderError),
      ENTRY(SessionExpiredError),   ENTRY(SessionTerminalError),
      ENTRY(CalibrationError),      ENTRY(TransportError),
      ENTRY(UnauthorizedError),     ENTRY(StorageError),
#undef ENTRY
  };
  auto it = kThrowers.find(kind);
  if (it != kThrowers.end())
    it->second(message);
  throw Error(kind, message);
}

}  // namespace metasecure
