#include "predepth/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace predepth {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

Config Config::parse_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: empty key on line " + std::to_string(lineno));
    c.entries_[key] = value;
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::size_t pos = 0;
  std::int64_t v = std::stoll(it->second, &pos);
  if (pos != it->second.size())
    throw std::runtime_error("config: '" + key + "' is not an integer");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::size_t pos = 0;
  double v = std::stod(it->second, &pos);
  if (pos != it->second.size())
    throw std::runtime_error("config: '" + key + "' is not a number");
  return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::size_t pos = 0;
  std::uint64_t v = std::stoull(it->second, &pos);
  if (pos != it->second.size())
    throw std::runtime_error("config: '" + key + "' is not an unsigned integer");
  return v;
}

std::vector<std::int64_t> Config::get_int_list(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::int64_t> out;
  std::string item;
  std::istringstream ss(it->second);
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(),
                              [](char c) { return c == ' ' || c == '\t'; }),
               item.end());
    if (item.empty()) continue;
    out.push_back(std::stoll(item));
  }
  return out;
}

void Config::require_known_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::runtime_error("config: unknown key '" + key + "'");
  }
}

}  // namespace predepth
