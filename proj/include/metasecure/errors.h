#ifndef METASECURE_ERRORS_H_
#define METASECURE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace metasecure {

// Base for every error raised by the library. |kind()| is a stable name that
// survives the wire (see http_api.h) so clients can rethrow the same type.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define METASECURE_DEFINE_ERROR(Name)                                \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

METASECURE_DEFINE_ERROR(ValidationError);
METASECURE_DEFINE_ERROR(EncodingError);
METASECURE_DEFINE_ERROR(GenerationError);
METASECURE_DEFINE_ERROR(DeviceWipedError);
METASECURE_DEFINE_ERROR(ChallengeExpiredError);
METASECURE_DEFINE_ERROR(NoSuchCredentialError);
METASECURE_DEFINE_ERROR(RpMismatchError);
METASECURE_DEFINE_ERROR(NoSuchUserError);
METASECURE_DEFINE_ERROR(DuplicateEmailError);
METASECURE_DEFINE_ERROR(NoCredentialError);
METASECURE_DEFINE_ERROR(RegistrationError);
METASECURE_DEFINE_ERROR(SessionNotReadyError);
METASECURE_DEFINE_ERROR(NoTemplateError);
METASECURE_DEFINE_ERROR(AlreadyTerminalError);
METASECURE_DEFINE_ERROR(NoSuchDeviceError);
METASECURE_DEFINE_ERROR(NoSuchSessionError);
METASECURE_DEFINE_ERROR(PrerequisiteError);
METASECURE_DEFINE_ERROR(OutOfOrderError);
METASECURE_DEFINE_ERROR(SessionExpiredError);
METASECURE_DEFINE_ERROR(SessionTerminalError);
METASECURE_DEFINE_ERROR(CalibrationError);
METASECURE_DEFINE_ERROR(TransportError);
METASECURE_DEFINE_ERROR(UnauthorizedError);
METASECURE_DEFINE_ERROR(StorageError);

#undef METASECURE_DEFINE_ERROR

// Throws the typed error named by |kind|; unknown kinds become a plain Error.
[[noreturn]] void ThrowErrorOfKind(const std::string& kind,
                                   const std::string& message);

}  // namespace metasecure

#endif  // METASECURE_ERRORS_H_
