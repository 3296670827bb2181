#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pbfd {

/// Selection mask over one vertex's children. Bit k is the k-th declared child.
using Bitmap = std::uint64_t;

/// Widest sibling domain. Bit 63 stays clear so every mask fits a signed BIGINT column.
inline constexpr std::size_t kMaxChildren = 63;

/// Slash-joined vertex names from a top-level vertex downward; "" is the root.
using VertexPath = std::string;

/// Upward-closed set of checked vertex paths, the canonical form of a selection.
using PathSet = std::set<VertexPath>;

enum class PersonId : std::int64_t {};

constexpr std::int64_t to_int(PersonId id) { return static_cast<std::int64_t>(id); }

enum class BackendKind { pbfd, traditional };

inline BackendKind parse_backend(std::string_view name) {
  if (name == "pbfd") return BackendKind::pbfd;
  if (name == "traditional") return BackendKind::traditional;
  throw std::invalid_argument("unknown backend '" + std::string{name} + "'");
}

constexpr std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::pbfd ? "pbfd" : "traditional";
}

constexpr Bitmap mask_of_width(std::size_t n) {
  return n >= 64 ? ~Bitmap{0} : (Bitmap{1} << n) - 1;
}

constexpr bool is_single_bit(Bitmap b) { return std::has_single_bit(b); }

constexpr bool is_subset(Bitmap b, Bitmap mask) { return (b & ~mask) == 0; }

// Error hierarchy. The service maps each type onto an HTTP status.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid hierarchy document.
class HierarchyError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A wizard step was addressed whose parent vertex is not checked.
class OrphanStepError : public Error {
 public:
  using Error::Error;
};

/// Bits or ids outside a vertex's (or the reasons') domain.
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

class InvalidRecordError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

}  // namespace pbfd
