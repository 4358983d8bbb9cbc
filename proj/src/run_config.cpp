// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>

#include "tailtag/cli.hpp"
#include "tailtag/common.hpp"

namespace tailtag {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, const std::string& value,
                            std::string_view expected) {
  throw ConfigError(std::string(key) + ": expected " + std::string(expected) +
                    ", got '" + value + "'");
}

}  // namespace

std::string RunConfig::normalize_key(std::string_view key) {
  std::string out(key);
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

RunConfig RunConfig::from_args(std::span<const std::string> args) {
  std::vector<std::pair<std::string, std::string>> parsed;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
      throw ConfigError("unexpected argument '" + arg + "' (use --key=value)");
    }
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      parsed.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) {
      parsed.emplace_back(body, args[i + 1]);
      ++i;
    } else {
      parsed.emplace_back(body, "true");
    }
  }

  RunConfig cfg;
  for (const auto& [key, value] : parsed) {
    if (normalize_key(key) == "config") cfg.load_file(value);
  }
  for (auto& [key, value] : parsed) cfg.set(key, value);
  return cfg;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path.string() + " line " +
                        std::to_string(line_no) + " is not key=value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(std::string_view key, std::string value) {
  const std::string k = normalize_key(key);
  if (k.empty()) throw ConfigError("config: empty key");
  values_[k] = std::move(value);
}

bool RunConfig::has(std::string_view key) const {
  return values_.count(normalize_key(key)) != 0;
}

std::string RunConfig::get_string(std::string_view key) const {
  const auto it = values_.find(normalize_key(key));
  if (it == values_.end()) {
    throw ConfigError(normalize_key(key) + ": required but not set");
  }
  return it->second;
}

std::string RunConfig::get_string(std::string_view key,
                                  std::string fallback) const {
  const auto it = values_.find(normalize_key(key));
  return it == values_.end() ? std::move(fallback) : it->second;
}

std::filesystem::path RunConfig::get_path(std::string_view key) const {
  const std::string value = get_string(key);
  if (value.empty()) throw ConfigError(normalize_key(key) + ": empty path");
  return value;
}

std::optional<std::filesystem::path> RunConfig::get_optional_path(
    std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return get_path(key);
}

double RunConfig::get_double(std::string_view key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  char* end = nullptr;
  errno = 0;
  const double parsed = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    bad_value(normalize_key(key), value, "a number");
  }
  return parsed;
}

std::int64_t RunConfig::get_int(std::string_view key,
                                std::int64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  char* end = nullptr;
  errno = 0;
  const long long parsed = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    bad_value(normalize_key(key), value, "an integer");
  }
  return parsed;
}

std::uint64_t RunConfig::get_uint(std::string_view key,
                                  std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long parsed = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || value[0] == '-' ||
      end != value.c_str() + value.size() || errno == ERANGE) {
    bad_value(normalize_key(key), value, "a non-negative integer");
  }
  return parsed;
}

bool RunConfig::get_bool(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(normalize_key(key), value, "true or false");
}

std::vector<std::size_t> RunConfig::get_size_list(
    std::string_view key, std::vector<std::size_t> fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    const std::string item = trim(std::string_view(value).substr(pos, comma - pos));
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(item.c_str(), &end, 10);
    if (item.empty() || item[0] == '-' || end != item.c_str() + item.size()) {
      bad_value(normalize_key(key), value, "a comma-separated list of integers");
    }
    out.push_back(static_cast<std::size_t>(parsed));
    pos = comma + 1;
  }
  return out;
}

void RunConfig::require_known(std::span<const std::string_view> allowed) const {
  for (const auto& [key, _] : values_) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](std::string_view a) { return a == key; });
    if (!known) throw ConfigError(key + ": unknown key for this command");
  }
}

}  // namespace tailtag
