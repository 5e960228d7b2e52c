#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "e2rank/error.hpp"

namespace e2rank {

// Plain-text "key = value" file. '#' starts a comment line. Every key must be
// read by the consumer; finish() rejects leftovers so typos do not pass silently.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view trimmed = trim(line);
      if (trimmed.empty() || trimmed.front() == '#') continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
      const std::string key(trim(trimmed.substr(0, eq)));
      if (key.empty()) throw ParseError(source, line_no, "empty key");
      if (!cfg.values_.emplace(key, Entry{std::string(trim(trimmed.substr(eq + 1))), line_no}).second) {
        throw ParseError(source, line_no, "duplicate key \"" + key + "\"");
      }
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto* e = take(key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& key, double fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    double v = 0.0;
    const auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (res.ec != std::errc() || res.ptr != e->value.data() + e->value.size()) {
      throw ParseError(source_, e->line, "\"" + key + "\" is not a number");
    }
    return v;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (res.ec != std::errc() || res.ptr != e->value.data() + e->value.size()) {
      throw ParseError(source_, e->line, "\"" + key + "\" is not a non-negative integer");
    }
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "on") return true;
    if (e->value == "false" || e->value == "0" || e->value == "off") return false;
    throw ParseError(source_, e->line, "\"" + key + "\" is not a boolean");
  }

  void finish() const {
    for (const auto& [key, entry] : values_) {
      if (!used_.count(key)) throw ParseError(source_, entry.line, "unknown key \"" + key + "\"");
    }
  }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  const Entry* take(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  std::string source_;
  std::map<std::string, Entry> values_;
  std::set<std::string> used_;
};

}  // namespace e2rank
