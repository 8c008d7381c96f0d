#include "portanet/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "portanet/error.hpp"

namespace portanet {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

std::vector<ConfigSection> parse_config(std::string_view text) {
  std::vector<ConfigSection> sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(at_line(line_no) + "malformed section header");
      sections.push_back({std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(at_line(line_no) + "expected 'key = value'");
    if (sections.empty()) throw ConfigError(at_line(line_no) + "entry outside of any [section]");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(at_line(line_no) + "empty key");
    for (const auto& e : sections.back().entries) {
      if (e.key == key) throw ConfigError(at_line(line_no) + "duplicate key '" + key + "'");
    }
    sections.back().entries.push_back({key, value, line_no});
  }
  return sections;
}

std::vector<ConfigSection> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

KeyReader::KeyReader(const ConfigSection& section) : section_(section), used_(section.entries.size(), false) {}

const ConfigEntry* KeyReader::find(std::string_view key) const {
  for (const auto& e : section_.entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void KeyReader::fail(const ConfigEntry& e, const std::string& why) const {
  throw ConfigError(at_line(e.line) + "[" + section_.kind + "] " + e.key + ": " + why);
}

bool KeyReader::has(std::string_view key) const { return find(key) != nullptr; }

std::optional<std::string> KeyReader::take(std::string_view key) {
  const ConfigEntry* e = find(key);
  if (e == nullptr) return std::nullopt;
  used_[static_cast<std::size_t>(e - section_.entries.data())] = true;
  return e->value;
}

std::string KeyReader::require(std::string_view key) {
  auto v = take(key);
  if (!v) {
    throw ConfigError(at_line(section_.line) + "[" + section_.kind + "] missing required key '" + std::string(key) +
                      "'");
  }
  return *v;
}

std::int64_t KeyReader::take_integer(std::string_view key, std::int64_t fallback) {
  const ConfigEntry* e = find(key);
  if (e == nullptr) return fallback;
  take(key);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(e->value.c_str(), &end, 10);
  if (e->value.empty() || *end != '\0' || errno == ERANGE) fail(*e, "expected an integer, got '" + e->value + "'");
  return v;
}

std::size_t KeyReader::take_count(std::string_view key, std::size_t fallback) {
  const ConfigEntry* e = find(key);
  if (e == nullptr) return fallback;
  const std::int64_t v = take_integer(key, 0);
  if (v < 0) fail(*e, "must not be negative");
  return static_cast<std::size_t>(v);
}

std::size_t KeyReader::require_count(std::string_view key) {
  if (!has(key)) require(key);
  return take_count(key, 0);
}

double KeyReader::take_real(std::string_view key, double fallback) {
  const ConfigEntry* e = find(key);
  if (e == nullptr) return fallback;
  take(key);
  char* end = nullptr;
  const double v = std::strtod(e->value.c_str(), &end);
  if (e->value.empty() || *end != '\0' || !std::isfinite(v)) fail(*e, "expected a number, got '" + e->value + "'");
  return v;
}

bool KeyReader::take_bool(std::string_view key, bool fallback) {
  const ConfigEntry* e = find(key);
  if (e == nullptr) return fallback;
  take(key);
  if (e->value == "true" || e->value == "1") return true;
  if (e->value == "false" || e->value == "0") return false;
  fail(*e, "expected true or false, got '" + e->value + "'");
}

std::vector<std::string> KeyReader::take_list(std::string_view key) {
  std::vector<std::string> items;
  const auto v = take(key);
  if (!v) return items;
  std::string current;
  for (char ch : *v) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!current.empty()) items.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) items.push_back(std::move(current));
  return items;
}

void KeyReader::finish() const {
  for (std::size_t i = 0; i < used_.size(); ++i) {
    if (!used_[i]) fail(section_.entries[i], "unknown key");
  }
}

}  // namespace portanet
