#pragma once

#include <map>
#include <string>
#include <vector>

namespace bicl {

/// Line-oriented `key = value` config files. Blank lines and lines starting
/// with '#' are ignored. Duplicate keys: last one wins.
std::map<std::string, std::string> parse_kv_file(const std::string& path);

/// Parses "key=value" as passed on a command line.
std::pair<std::string, std::string> parse_kv_pair(const std::string& arg);

// Typed readers; throw DataError naming the key on bad values.
int kv_int(const std::map<std::string, std::string>& kv, const std::string& key, int fallback);
double kv_double(const std::map<std::string, std::string>& kv, const std::string& key, double fallback);
bool kv_bool(const std::map<std::string, std::string>& kv, const std::string& key, bool fallback);
std::uint64_t kv_uint64(const std::map<std::string, std::string>& kv, const std::string& key, std::uint64_t fallback);
std::string kv_string(const std::map<std::string, std::string>& kv, const std::string& key, const std::string& fallback);
std::vector<int> kv_int_list(const std::map<std::string, std::string>& kv, const std::string& key,
                             const std::vector<int>& fallback);

}  // namespace bicl
