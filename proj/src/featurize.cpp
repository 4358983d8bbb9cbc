// SPDX-License-Identifier: Apache-2.0
#include "tailtag/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace tailtag {

namespace {

template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    const std::size_t begin = pos;
    while (pos < text.size() && text[pos] != ' ') ++pos;
    if (pos > begin) fn(text.substr(begin, pos - begin));
  }
}

double smoothed_idf(std::int64_t num_docs, std::int64_t df) {
  return std::log((1.0 + static_cast<double>(num_docs)) /
                  (1.0 + static_cast<double>(df))) +
         1.0;
}

}  // namespace

TermVocab::TermVocab(std::vector<std::string> terms,
                     std::vector<std::int64_t> df, std::int64_t num_docs,
                     TermVocabParams params)
    : terms_(std::move(terms)),
      df_(std::move(df)),
      num_docs_(num_docs),
      params_(params) {
  if (terms_.size() != df_.size()) {
    throw DataError("term vocab: terms and df differ in length");
  }
  idf_.reserve(terms_.size());
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    if (!index_.emplace(terms_[t], static_cast<std::uint32_t>(t)).second) {
      throw DataError("term vocab: duplicate term '" + terms_[t] + "'");
    }
    idf_.push_back(smoothed_idf(num_docs_, df_[t]));
  }
}

std::optional<std::uint32_t> TermVocab::find(std::string_view term) const {
  if (const auto it = index_.find(std::string(term)); it != index_.end()) {
    return it->second;
  }
  return std::nullopt;
}

std::uint64_t TermVocab::hash() const {
  Fnv1a h;
  h.update_field(std::to_string(num_docs_));
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    h.update_field(terms_[t]);
    h.update_field(std::to_string(df_[t]));
  }
  return h.digest();
}

TermVocab build_vocab(const Corpus& corpus, const TermVocabParams& params) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  if (params.min_df < 1) throw ConfigError("min_df must be >= 1");

  std::map<std::string, std::int64_t, std::less<>> df;
  std::unordered_set<std::string_view> seen;
  for (const auto& record : corpus.records) {
    seen.clear();
    for_each_token(record.text, [&](std::string_view tok) {
      if (seen.insert(tok).second) {
        auto it = df.find(tok);
        if (it == df.end()) it = df.emplace(std::string(tok), 0).first;
        ++it->second;
      }
    });
  }

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= static_cast<std::int64_t>(params.min_df)) {
      kept.emplace_back(term, count);
    }
  }
  if (kept.size() > params.max_features) {
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second > b.second;
    });
    kept.resize(params.max_features);
    std::sort(kept.begin(), kept.end());
  }

  std::vector<std::string> terms;
  std::vector<std::int64_t> counts;
  terms.reserve(kept.size());
  counts.reserve(kept.size());
  for (auto& [term, count] : kept) {
    terms.push_back(std::move(term));
    counts.push_back(count);
  }
  return TermVocab(std::move(terms), std::move(counts),
                   static_cast<std::int64_t>(corpus.size()), params);
}

SparseVec tfidf(std::string_view text, const TermVocab& vocab) {
  std::map<std::uint32_t, double> counts;
  for_each_token(text, [&](std::string_view tok) {
    if (auto id = vocab.find(tok)) counts[*id] += 1.0;
  });

  SparseVec out;
  out.indices.reserve(counts.size());
  out.values.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [id, count] : counts) {
    const double v = count * vocab.idf()[id];
    out.indices.push_back(id);
    out.values.push_back(v);
    norm2 += v * v;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : out.values) v *= inv;
  }
  return out;
}

std::vector<SparseVec> featurize(const Corpus& corpus, const TermVocab& vocab) {
  std::vector<SparseVec> out;
  out.reserve(corpus.size());
  for (const auto& record : corpus.records) out.push_back(tfidf(record.text, vocab));
  return out;
}

void save_term_vocab(const TermVocab& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "#tailtag-terms\tD=" << vocab.num_docs()
      << "\tmin_df=" << vocab.params().min_df
      << "\tmax_features=" << vocab.params().max_features << '\n';
  char idf_buf[40];
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    std::snprintf(idf_buf, sizeof(idf_buf), "%.17g", vocab.idf()[t]);
    out << vocab.terms()[t] << '\t' << vocab.df()[t] << '\t' << idf_buf << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

TermVocab load_term_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open term vocab " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("#tailtag-terms\t", 0) != 0) {
    throw DataError(path.string() + ": missing term vocab header");
  }
  std::int64_t num_docs = -1;
  TermVocabParams params;
  {
    std::istringstream header(line.substr(line.find('\t') + 1));
    std::string field;
    while (std::getline(header, field, '\t')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "D") num_docs = std::stoll(value);
      else if (key == "min_df") params.min_df = std::stoull(value);
      else if (key == "max_features") params.max_features = std::stoull(value);
    }
  }
  if (num_docs < 0) throw DataError(path.string() + ": header lacks D");

  std::vector<std::string> terms;
  std::vector<std::int64_t> df;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": expected term<TAB>df<TAB>idf");
    }
    terms.push_back(line.substr(0, t1));
    try {
      df.push_back(std::stoll(line.substr(t1 + 1, t2 - t1 - 1)));
    } catch (const std::exception&) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": bad df");
    }
  }
  // idf is recomputed from df and D; the stored column is informational.
  return TermVocab(std::move(terms), std::move(df), num_docs, params);
}

}  // namespace tailtag
