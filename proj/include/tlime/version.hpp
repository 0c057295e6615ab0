#ifndef TLIME_VERSION_HPP
#define TLIME_VERSION_HPP

namespace tlime {

inline constexpr const char* kVersion = "1.0.0";

/// Version stamp written into every serialized document.
inline constexpr int kSchemaVersion = 1;

}  // namespace tlime

#endif  // TLIME_VERSION_HPP
