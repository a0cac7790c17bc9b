#pragma once

#include <cstdint>
#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace veracity {

using Timestamp = std::int64_t;

inline constexpr Timestamp kHour = 3600;
inline constexpr Timestamp kDay = 24 * kHour;

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration (CLI exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label { True, False, Unknown };

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::True: return "true";
    case Label::False: return "false";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

inline Label label_from_string(std::string_view s) {
  if (s == "true") return Label::True;
  if (s == "false") return Label::False;
  if (s == "unknown") return Label::Unknown;
  throw DataError("invalid label '" + std::string(s) + "'");
}

enum class Intent { Malicious, Benign, Unknown };

inline std::string_view to_string(Intent i) {
  switch (i) {
    case Intent::Malicious: return "malicious";
    case Intent::Benign: return "benign";
    case Intent::Unknown: return "unknown";
  }
  return "unknown";
}

inline Intent intent_from_string(std::string_view s) {
  if (s == "malicious") return Intent::Malicious;
  if (s == "benign") return Intent::Benign;
  if (s == "unknown") return Intent::Unknown;
  throw DataError("invalid intent '" + std::string(s) + "'");
}

/// Actors are unique per platform, so identity is the (platform, actor_id) pair.
struct ActorKey {
  std::string platform;
  std::string actor_id;

  auto operator<=>(const ActorKey&) const = default;
  bool operator==(const ActorKey&) const = default;

  std::string str() const { return platform + ":" + actor_id; }
};

/// 64-bit FNV-1a. Stable across runs and platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace veracity
