// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_CLI_HPP_
#define TAILTAG_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tailtag {

/// Flat key=value settings. Keys are normalized so that "grid-step" and
/// "grid_step" are the same key. Getters throw ConfigError naming the key.
class RunConfig {
 public:
  /// Parses "--key=value", "--key value" and bare "--flag" (= "true").
  /// A "--config=<file>" entry is loaded first; every flag overrides it.
  static RunConfig from_args(std::span<const std::string> args);

  /// Lines "key=value"; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  void set(std::string_view key, std::string value);

  bool has(std::string_view key) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  std::filesystem::path get_path(std::string_view key) const;
  std::optional<std::filesystem::path> get_optional_path(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::size_t> get_size_list(std::string_view key,
                                         std::vector<std::size_t> fallback) const;

  /// Throws ConfigError for the first key not in `allowed`.
  void require_known(std::span<const std::string_view> allowed) const;

  static std::string normalize_key(std::string_view key);

 private:
  std::map<std::string, std::string> values_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Runs one of generate, ingest, train, tune-threshold, predict, evaluate,
/// fuse. Errors become a one-line diagnostic on `err` and an exit code.
int run_command(std::string_view command, const RunConfig& config,
                std::ostream& out, std::ostream& err);

/// argv-level entry point: "<command> [--key=value ...]".
int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

/// "<dir>/<stem>.<part><ext>", e.g. syn.jsonl -> syn.train.jsonl.
std::filesystem::path split_path(const std::filesystem::path& corpus,
                                 std::string_view part);

/// Label vocabulary stored next to a corpus: "<corpus>.vocab".
std::filesystem::path vocab_path_for(const std::filesystem::path& corpus);

}  // namespace tailtag

#endif  // TAILTAG_CLI_HPP_
