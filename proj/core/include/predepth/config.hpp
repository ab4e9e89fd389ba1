#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace predepth {

// Plain-text `key = value` configuration, one file per command. Lines
// starting with '#' are comments. Later assignments win, which is how
// command-line overrides are layered on top of the file.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& fallback) const;

  // Typo guard: every key must have been named in `allowed`.
  void require_known_keys(const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace predepth
