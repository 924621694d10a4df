#ifndef METASECURE_BYTES_H_
#define METASECURE_BYTES_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metasecure {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

std::string Base64Encode(ByteSpan data);
// Throws EncodingError on malformed input.
Bytes Base64Decode(std::string_view text);

std::string HexEncode(ByteSpan data);

inline ByteSpan AsBytes(std::string_view s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

}  // namespace metasecure

#endif  // METASECURE_BYTES_H_
