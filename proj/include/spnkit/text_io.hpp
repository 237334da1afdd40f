#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spnkit/error.hpp"

namespace spnkit {

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ParseError(context + ": bad number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ParseError(context + ": bad integer '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || s.front() == '-')
    throw ParseError(context + ": bad unsigned integer '" + s + "'");
  return v;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << content;
  if (!out) throw ParseError("write failed for " + path.string());
}

/// "key value" lines; '#' starts a comment, blank lines ignored.
inline std::map<std::string, std::string> read_key_value(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find(' ');
    if (pos == std::string::npos) throw ParseError(path.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, pos)] = line.substr(pos + 1);
  }
  return kv;
}

inline const std::string& kv_get(const std::map<std::string, std::string>& kv,
                                 const std::string& key, const std::string& context) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(context + ": missing key '" + key + "'");
  return it->second;
}

/// FNV-1a, used for content fingerprints in manifests.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace spnkit
