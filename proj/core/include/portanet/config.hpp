#pragma once

// Line-oriented config text:
//
//   # comment
//   [layer]
//   name = conv1
//   num_output = 20
//
// Sections start with `[kind]`; every other non-blank line is `key = value`.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace portanet {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string kind;
  int line = 0;
  std::vector<ConfigEntry> entries;
};

/// Throws ConfigError with the offending line on malformed input or duplicate keys.
std::vector<ConfigSection> parse_config(std::string_view text);
std::vector<ConfigSection> read_config_file(const std::filesystem::path& path);

/// Typed, consuming access to one section. finish() rejects any key that
/// was never taken, which is how unknown keys fail fast.
class KeyReader {
 public:
  explicit KeyReader(const ConfigSection& section);

  bool has(std::string_view key) const;
  std::optional<std::string> take(std::string_view key);
  std::string require(std::string_view key);

  std::size_t take_count(std::string_view key, std::size_t fallback);
  std::size_t require_count(std::string_view key);
  std::int64_t take_integer(std::string_view key, std::int64_t fallback);
  double take_real(std::string_view key, double fallback);
  bool take_bool(std::string_view key, bool fallback);
  /// Comma- or whitespace-separated list.
  std::vector<std::string> take_list(std::string_view key);

  void finish() const;

 private:
  const ConfigEntry* find(std::string_view key) const;
  [[noreturn]] void fail(const ConfigEntry& e, const std::string& why) const;

  const ConfigSection& section_;
  std::vector<bool> used_;
};

}  // namespace portanet
