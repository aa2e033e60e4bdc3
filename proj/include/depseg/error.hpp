#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace depseg {

enum class Errc {
  io,
  bad_magic,
  truncated,
  unknown_dtype,
  dimension_overflow,
  corrupt,
  invalid_argument,
  degenerate_input,
  shape_mismatch,
  dimension_mismatch,
  missing_frame,
  cache_miss,
  empty_support,
  empty_bank,
  parse_error,
  missing_palette_entry,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::io: return "io";
    case Errc::bad_magic: return "bad_magic";
    case Errc::truncated: return "truncated";
    case Errc::unknown_dtype: return "unknown_dtype";
    case Errc::dimension_overflow: return "dimension_overflow";
    case Errc::corrupt: return "corrupt";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::missing_frame: return "missing_frame";
    case Errc::cache_miss: return "cache_miss";
    case Errc::empty_support: return "empty_support";
    case Errc::empty_bank: return "empty_bank";
    case Errc::parse_error: return "parse_error";
    case Errc::missing_palette_entry: return "missing_palette_entry";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind of failure without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by file-backed score lookups; names the point hash so the
/// exporter can be re-run for exactly the missing prompt set.
class CacheMiss : public Error {
 public:
  CacheMiss(std::string frame_id, std::string hash)
      : Error(Errc::cache_miss, "no score map for frame '" + frame_id + "' point-hash " + hash),
        frame_id_(std::move(frame_id)),
        hash_(std::move(hash)) {}

  const std::string& frame_id() const noexcept { return frame_id_; }
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::string frame_id_;
  std::string hash_;
};

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace depseg
