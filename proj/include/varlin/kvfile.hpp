#ifndef VARLIN_KVFILE_HPP
#define VARLIN_KVFILE_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "varlin/errors.hpp"

namespace varlin {

// Plain-text `key = value` files.  '#' starts a comment, keys may repeat,
// order is preserved.  All numerics are kept as decimal strings until the
// consumer parses them.
struct KvFile {
  std::vector<std::pair<std::string, std::string>> entries;

  static std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static KvFile read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    KvFile kv;
    std::string line;
    while (std::getline(in, line)) {
      size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("malformed line (missing '='): " + line);
      kv.entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
  }

  bool has(const std::string& key) const {
    for (auto& e : entries)
      if (e.first == key) return true;
    return false;
  }

  std::string get(const std::string& key) const {
    for (auto& e : entries)
      if (e.first == key) return e.second;
    throw ConfigError("missing required key: " + key);
  }

  std::string get_or(const std::string& key, const std::string& dflt) const {
    for (auto& e : entries)
      if (e.first == key) return e.second;
    return dflt;
  }

  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (auto& e : entries)
      if (e.first == key) out.push_back(e.second);
    return out;
  }

  static std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
  }
};

}  // namespace varlin

#endif
