// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_CORPUS_HPP_
#define TAILTAG_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tailtag/common.hpp"

namespace tailtag {

/// Canonical label list plus alias table. The index of a label in
/// `labels()` is its id.
class LabelVocab {
 public:
  LabelVocab() = default;

  /// Throws DataError when labels repeat, an alias points at an unknown
  /// label, or an alias collides with a canonical label. Everything is
  /// lowercased on the way in.
  LabelVocab(std::vector<std::string> labels,
             std::vector<std::pair<std::string, std::string>> aliases = {});

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  const std::string& name(LabelId id) const { return labels_.at(id); }

  /// Id of a canonical label or alias; nullopt if neither.
  std::optional<LabelId> lookup(std::string_view topic) const;

  /// Id of a canonical label only.
  std::optional<LabelId> find_canonical(std::string_view label) const;

  /// Alias table as (alias, canonical label) pairs sorted by alias.
  std::vector<std::pair<std::string, std::string>> alias_pairs() const;

  /// Order-sensitive hash over the canonical labels.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, LabelId> index_;
  std::unordered_map<std::string, LabelId> aliases_;
};

/// One labeled document. `topics` is sorted and duplicate free.
struct RepoRecord {
  std::string id;
  std::string text;
  std::vector<LabelId> topics;
};

struct Corpus {
  LabelVocab vocab;
  std::vector<RepoRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Lowercase, map every character outside [a-z0-9] to a space, collapse
/// whitespace runs, trim.
std::string clean_text(std::string_view raw);

/// Sorted unique ids of the topics that survive alias mapping and the
/// vocabulary filter. Unknown topics are dropped.
std::vector<LabelId> canonicalize_topics(const std::vector<std::string>& raw,
                                         const LabelVocab& vocab);

/// Reads one canonical label per line, plus an optional "alias<TAB>label"
/// file. Blank lines are ignored.
LabelVocab load_label_vocab(const std::filesystem::path& labels_path,
                            const std::optional<std::filesystem::path>&
                                alias_path = std::nullopt);

void save_label_vocab(const LabelVocab& vocab,
                      const std::filesystem::path& labels_path);

/// Parses a JSONL corpus (fields id, readme, description, topics). Errors
/// name the offending 1-based line number.
Corpus ingest_jsonl(const std::filesystem::path& path, const LabelVocab& vocab);

/// Same as ingest_jsonl but from an in-memory stream of lines.
Corpus ingest_jsonl_text(std::string_view content, const LabelVocab& vocab);

/// Writes records back as JSONL with the cleaned text in "readme", an empty
/// "description" and canonical topic names. Re-ingesting gives the same
/// corpus.
void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// Sizes used for the full-scale crawl.
inline constexpr SplitSizes kDefaultSplitSizes{11282, 1000, 2980};

struct CorpusSplit {
  Corpus train;
  Corpus val;
  Corpus test;
};

/// Seeded uniform shuffle, then consecutive slices of the shuffled order.
CorpusSplit split(const Corpus& corpus, const SplitSizes& sizes,
                  std::uint64_t seed);

struct SyntheticSpec {
  std::size_t classes = 100;
  std::size_t docs = 2000;
  double zipf_s = 1.2;
  std::size_t labels_min = 1;
  std::size_t labels_max = 3;
  std::size_t filler_vocab = 1000;
  std::uint64_t seed = 0;
};

/// Normalized Zipf weights (i+1)^-s for i in [0, classes).
std::vector<double> zipf_weights(std::size_t classes, double s);

/// Long-tailed synthetic corpus. Labels are "topic-<i>"; each assigned label
/// puts its signature token in the text 1-3 times, mixed with 5-20 filler
/// tokens, and the token order is shuffled.
Corpus generate_synthetic(const SyntheticSpec& spec);

/// counts[i] = number of records containing label i.
std::vector<std::int64_t> label_counts(const Corpus& corpus);

}  // namespace tailtag

#endif  // TAILTAG_CORPUS_HPP_
