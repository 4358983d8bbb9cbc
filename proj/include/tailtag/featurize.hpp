// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_FEATURIZE_HPP_
#define TAILTAG_FEATURIZE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tailtag/corpus.hpp"

namespace tailtag {

/// Sparse vector with strictly increasing indices.
struct SparseVec {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

struct TermVocabParams {
  std::size_t min_df = 2;
  std::size_t max_features = 20000;
};

/// Unigram vocabulary with smoothed idf = ln((1+D)/(1+df)) + 1.
class TermVocab {
 public:
  TermVocab() = default;
  TermVocab(std::vector<std::string> terms, std::vector<std::int64_t> df,
            std::int64_t num_docs, TermVocabParams params);

  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::int64_t>& df() const { return df_; }
  const std::vector<double>& idf() const { return idf_; }
  std::int64_t num_docs() const { return num_docs_; }
  const TermVocabParams& params() const { return params_; }

  std::optional<std::uint32_t> find(std::string_view term) const;
  std::uint64_t hash() const;

 private:
  std::vector<std::string> terms_;
  std::vector<std::int64_t> df_;
  std::vector<double> idf_;
  std::int64_t num_docs_ = 0;
  TermVocabParams params_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Terms are whitespace tokens of the cleaned text. Terms with df < min_df
/// are dropped; above max_features the highest-df terms win, ties broken
/// lexicographically. Term ids follow lexicographic order.
TermVocab build_vocab(const Corpus& corpus, const TermVocabParams& params);

/// Raw count times idf, l2-normalized. OOV tokens are ignored.
SparseVec tfidf(std::string_view text, const TermVocab& vocab);

std::vector<SparseVec> featurize(const Corpus& corpus, const TermVocab& vocab);

/// "#tailtag-terms<TAB>D=..<TAB>min_df=..<TAB>max_features=.." header, then
/// "term<TAB>df<TAB>idf" lines.
void save_term_vocab(const TermVocab& vocab, const std::filesystem::path& path);
TermVocab load_term_vocab(const std::filesystem::path& path);

}  // namespace tailtag

#endif  // TAILTAG_FEATURIZE_HPP_
