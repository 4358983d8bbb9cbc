// SPDX-License-Identifier: Apache-2.0
#include "tailtag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace tailtag {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Labels end up in prediction files as "label:prob,..." so these two
// characters (and whitespace) cannot appear in them.
void check_label_chars(const std::string& label) {
  if (label.empty() ||
      label.find_first_of(":, \t\r\n") != std::string::npos) {
    throw DataError("invalid label '" + label +
                    "': labels must be non-empty and contain no ':', ',' "
                    "or whitespace");
  }
}

std::string json_string_field(const nlohmann::json& obj, const char* key,
                              std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (std::string_view(key) == "id") {
      throw DataError("line " + std::to_string(line_no) +
                      ": missing field 'id'");
    }
    return {};
  }
  if (!it->is_string()) {
    throw DataError("line " + std::to_string(line_no) + ": field '" + key +
                    "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

LabelVocab::LabelVocab(std::vector<std::string> labels,
                       std::vector<std::pair<std::string, std::string>> aliases) {
  labels_.reserve(labels.size());
  for (auto& raw : labels) {
    std::string label = lowercase(raw);
    check_label_chars(label);
    const auto id = static_cast<LabelId>(labels_.size());
    if (!index_.emplace(label, id).second) {
      throw DataError("duplicate label '" + label + "'");
    }
    labels_.push_back(std::move(label));
  }
  for (auto& [raw_alias, raw_target] : aliases) {
    std::string alias = lowercase(raw_alias);
    const std::string target = lowercase(raw_target);
    const auto target_it = index_.find(target);
    if (target_it == index_.end()) {
      throw DataError("alias '" + alias + "' maps to unknown label '" +
                      target + "'");
    }
    if (index_.count(alias) != 0) {
      throw DataError("alias '" + alias + "' collides with a canonical label");
    }
    const auto [it, inserted] = aliases_.emplace(alias, target_it->second);
    if (!inserted && it->second != target_it->second) {
      throw DataError("alias '" + alias + "' maps to two labels");
    }
  }
}

std::optional<LabelId> LabelVocab::lookup(std::string_view topic) const {
  const std::string key(topic);
  if (const auto it = index_.find(key); it != index_.end()) return it->second;
  if (const auto it = aliases_.find(key); it != aliases_.end()) {
    return it->second;
  }
  return std::nullopt;
}

std::optional<LabelId> LabelVocab::find_canonical(std::string_view label) const {
  if (const auto it = index_.find(std::string(label)); it != index_.end()) {
    return it->second;
  }
  return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> LabelVocab::alias_pairs()
    const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(aliases_.size());
  for (const auto& [alias, id] : aliases_) out.emplace_back(alias, labels_[id]);
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t LabelVocab::hash() const {
  Fnv1a h;
  for (const auto& label : labels_) h.update_field(label);
  return h.digest();
}

std::string clean_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (!keep) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<LabelId> canonicalize_topics(const std::vector<std::string>& raw,
                                         const LabelVocab& vocab) {
  std::vector<LabelId> ids;
  ids.reserve(raw.size());
  for (const auto& topic : raw) {
    if (auto id = vocab.lookup(lowercase(trim(topic)))) ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

LabelVocab load_label_vocab(
    const std::filesystem::path& labels_path,
    const std::optional<std::filesystem::path>& alias_path) {
  std::ifstream in(labels_path);
  if (!in) throw DataError("cannot open label vocab " + labels_path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    std::string label = trim(line);
    if (!label.empty()) labels.push_back(std::move(label));
  }

  std::vector<std::pair<std::string, std::string>> aliases;
  if (alias_path) {
    std::ifstream alias_in(*alias_path);
    if (!alias_in) {
      throw DataError("cannot open alias file " + alias_path->string());
    }
    std::size_t line_no = 0;
    while (std::getline(alias_in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw DataError(alias_path->string() + " line " +
                        std::to_string(line_no) +
                        ": expected alias<TAB>canonical");
      }
      aliases.emplace_back(trim(line.substr(0, tab)),
                           trim(line.substr(tab + 1)));
    }
  }
  return LabelVocab(std::move(labels), std::move(aliases));
}

void save_label_vocab(const LabelVocab& vocab,
                      const std::filesystem::path& labels_path) {
  std::ofstream out(labels_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + labels_path.string());
  for (const auto& label : vocab.labels()) out << label << '\n';
  if (!out) throw DataError("write failed for " + labels_path.string());
}

Corpus ingest_jsonl_text(std::string_view content, const LabelVocab& vocab) {
  Corpus corpus;
  corpus.vocab = vocab;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": expected a JSON object");
    }
    RepoRecord record;
    record.id = json_string_field(obj, "id", line_no);
    const std::string readme = json_string_field(obj, "readme", line_no);
    const std::string description =
        json_string_field(obj, "description", line_no);
    record.text = clean_text(readme + " " + description);

    std::vector<std::string> raw_topics;
    if (const auto it = obj.find("topics"); it != obj.end()) {
      if (!it->is_array()) {
        throw DataError("line " + std::to_string(line_no) +
                        ": field 'topics' must be an array of strings");
      }
      for (const auto& t : *it) {
        if (!t.is_string()) {
          throw DataError("line " + std::to_string(line_no) +
                          ": field 'topics' must be an array of strings");
        }
        raw_topics.push_back(t.get<std::string>());
      }
    }
    record.topics = canonicalize_topics(raw_topics, vocab);

    if (!seen.insert(record.id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate id '" +
                      record.id + "'");
    }
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

Corpus ingest_jsonl(const std::filesystem::path& path, const LabelVocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ingest_jsonl_text(buf.str(), vocab);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& record : corpus.records) {
    nlohmann::ordered_json obj;
    obj["id"] = record.id;
    obj["readme"] = record.text;
    obj["description"] = "";
    auto topics = nlohmann::ordered_json::array();
    for (LabelId id : record.topics) topics.push_back(corpus.vocab.name(id));
    obj["topics"] = std::move(topics);
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

CorpusSplit split(const Corpus& corpus, const SplitSizes& sizes,
                  std::uint64_t seed) {
  const std::size_t wanted = sizes.train + sizes.val + sizes.test;
  if (wanted > corpus.size()) {
    throw DataError("split sizes " + std::to_string(sizes.train) + "+" +
                    std::to_string(sizes.val) + "+" +
                    std::to_string(sizes.test) + " exceed corpus size " +
                    std::to_string(corpus.size()));
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);

  CorpusSplit out{{corpus.vocab, {}}, {corpus.vocab, {}}, {corpus.vocab, {}}};
  auto take = [&](Corpus& dst, std::size_t begin, std::size_t count) {
    dst.records.reserve(count);
    for (std::size_t i = begin; i < begin + count; ++i) {
      dst.records.push_back(corpus.records[order[i]]);
    }
  };
  take(out.train, 0, sizes.train);
  take(out.val, sizes.train, sizes.val);
  take(out.test, sizes.train + sizes.val, sizes.test);
  return out;
}

std::vector<double> zipf_weights(std::size_t classes, double s) {
  std::vector<double> w(classes);
  double total = 0.0;
  for (std::size_t i = 0; i < classes; ++i) {
    w[i] = std::pow(static_cast<double>(i + 1), -s);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("classes must be >= 2");
  if (spec.docs < 1) throw ConfigError("docs must be >= 1");
  if (!(spec.zipf_s >= 0.0)) throw ConfigError("zipf must be >= 0");
  if (spec.labels_min < 1 || spec.labels_min > spec.labels_max) {
    throw ConfigError("labels_min must be in [1, labels_max]");
  }
  if (spec.labels_max > spec.classes) {
    throw ConfigError("labels_max exceeds the number of classes");
  }
  if (spec.filler_vocab < 1) throw ConfigError("filler_vocab must be >= 1");

  std::vector<std::string> names;
  names.reserve(spec.classes);
  for (std::size_t i = 0; i < spec.classes; ++i) {
    names.push_back("topic-" + std::to_string(i));
  }
  Corpus corpus{LabelVocab(std::move(names)), {}};

  const std::vector<double> weights = zipf_weights(spec.classes, spec.zipf_s);
  std::vector<double> cdf(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cdf.begin());
  cdf.back() = 1.0;

  Rng rng(spec.seed);
  auto draw_label = [&]() {
    const double u = uniform_unit(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<LabelId>(
        std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
  };

  corpus.records.reserve(spec.docs);
  for (std::size_t d = 0; d < spec.docs; ++d) {
    const std::size_t span = spec.labels_max - spec.labels_min + 1;
    const std::size_t want = spec.labels_min + uniform_index(rng, span);
    std::vector<LabelId> topics;
    while (topics.size() < want) {
      const LabelId id = draw_label();
      if (std::find(topics.begin(), topics.end(), id) == topics.end()) {
        topics.push_back(id);
      }
    }
    std::sort(topics.begin(), topics.end());

    std::vector<std::string> tokens;
    for (LabelId id : topics) {
      const std::size_t reps = 1 + uniform_index(rng, 3);
      for (std::size_t r = 0; r < reps; ++r) {
        tokens.push_back("sig" + std::to_string(id));
      }
    }
    const std::size_t fillers = 5 + uniform_index(rng, 16);
    for (std::size_t f = 0; f < fillers; ++f) {
      tokens.push_back("w" + std::to_string(uniform_index(rng, spec.filler_vocab)));
    }
    shuffle(tokens, rng);

    RepoRecord record;
    record.id = "doc" + std::to_string(d);
    for (const auto& tok : tokens) {
      if (!record.text.empty()) record.text.push_back(' ');
      record.text += tok;
    }
    record.topics = std::move(topics);
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

std::vector<std::int64_t> label_counts(const Corpus& corpus) {
  std::vector<std::int64_t> counts(corpus.vocab.size(), 0);
  for (const auto& record : corpus.records) {
    for (LabelId id : record.topics) ++counts.at(id);
  }
  return counts;
}

}  // namespace tailtag
