#include "bicl/kvconfig.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "bicl/errors.hpp"

namespace bicl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw DataError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

}  // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw DataError(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::pair<std::string, std::string> parse_kv_pair(const std::string& arg) {
  const std::size_t eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) throw DataError("expected key=value, got '" + arg + "'");
  return {trim(arg.substr(0, eq)), trim(arg.substr(eq + 1))};
}

int kv_int(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "an integer");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, it->second, "an integer");
  }
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "a real number");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, it->second, "a real number");
  }
}

bool kv_bool(const std::map<std::string, std::string>& kv, const std::string& key, bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, it->second, "a boolean");
}

std::uint64_t kv_uint64(const std::map<std::string, std::string>& kv, const std::string& key, std::uint64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "an unsigned integer");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, it->second, "an unsigned integer");
  }
}

std::string kv_string(const std::map<std::string, std::string>& kv, const std::string& key,
                      const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::vector<int> kv_int_list(const std::map<std::string, std::string>& kv, const std::string& key,
                             const std::vector<int>& fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<int> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) bad_value(key, it->second, "a comma-separated integer list");
      out.push_back(v);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      bad_value(key, it->second, "a comma-separated integer list");
    }
  }
  if (out.empty()) bad_value(key, it->second, "a comma-separated integer list");
  return out;
}

}  // namespace bicl
