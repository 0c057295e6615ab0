#ifndef TLIME_ERRORS_HPP
#define TLIME_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tlime {

/// Base class for all library-specific failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distinct failure classes for file/stream ingestion, so callers (and the
/// fuzz suite) can assert which rule a malformed input tripped.
enum class IngestCode {
  io,                 // file missing / unreadable
  bad_magic,          // IDX magic bytes not [0,0,dtype,ndims]
  unsupported_dtype,  // IDX dtype other than unsigned byte
  bad_dims,           // dimension count or values out of range
  truncated,          // payload shorter than the header implies
  payload_mismatch,   // payload longer than the header implies
  unsupported_magic,  // PNM magic other than P5/P6
  bad_header,         // malformed PNM header tokens
  unsupported_maxval, // PNM maxval other than 255
  bad_gzip,           // gzip stream does not inflate
};

class IngestError : public Error {
 public:
  IngestError(IngestCode code, const std::string& what)
      : Error(what), code_(code) {}
  IngestCode code() const noexcept { return code_; }

 private:
  IngestCode code_;
};

/// External-predictor wire protocol violations (malformed response, bad
/// probability vector, timeout). The offending payload is in what().
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A documented invariant failed at runtime.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace tlime

#endif  // TLIME_ERRORS_HPP
