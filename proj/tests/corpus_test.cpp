// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "tailtag/corpus.hpp"

namespace tailtag {
namespace {

namespace fs = std::filesystem;

LabelVocab small_vocab() {
  return LabelVocab({"machine-learning", "rust", "python"},
                    {{"ml", "machine-learning"}, {"py", "python"}});
}

TEST(CleanTextTest, Examples) {
  EXPECT_EQ(clean_text("abc"), "abc");
  EXPECT_EQ(clean_text("Hello, World! v2.0"), "hello world v2 0");
  EXPECT_EQ(clean_text(""), "");
  EXPECT_EQ(clean_text("  --  "), "");
  EXPECT_EQ(clean_text("\xc3\xa9t\xc3\xa9 caf\xc3\xa9"), "t caf");
}

TEST(CleanTextTest, IdempotentAndWellFormed) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "aZ9 .,-_!\t\n\xc3\xa9#Qq0";
  for (int t = 0; t < 500; ++t) {
    std::string s;
    const std::size_t len = rng() % 40;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    const std::string once = clean_text(s);
    EXPECT_EQ(clean_text(once), once);
    EXPECT_EQ(once.find("  "), std::string::npos);
    EXPECT_TRUE(once.empty() || (once.front() != ' ' && once.back() != ' '));
    for (char c : once) {
      EXPECT_TRUE((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == ' ');
    }
  }
}

TEST(LabelVocabTest, RejectsMalformed) {
  EXPECT_THROW(LabelVocab({"a", "a"}), DataError);
  EXPECT_THROW(LabelVocab({"a"}, {{"b", "missing"}}), DataError);
  EXPECT_THROW(LabelVocab({"a", "b"}, {{"b", "a"}}), DataError);
  EXPECT_THROW(LabelVocab({"a:b"}), DataError);
}

TEST(CanonicalizeTopicsTest, Examples) {
  const LabelVocab vocab = small_vocab();
  EXPECT_TRUE(canonicalize_topics({}, vocab).empty());
  EXPECT_EQ(canonicalize_topics({"ml", "unknown-tag"}, vocab),
            std::vector<LabelId>{0});
  EXPECT_EQ(canonicalize_topics({"rust", "rust"}, vocab), std::vector<LabelId>{1});
  EXPECT_EQ(canonicalize_topics({"PY", "Python", "ML"}, vocab),
            (std::vector<LabelId>{0, 2}));
}

TEST(CanonicalizeTopicsTest, IdempotentSubset) {
  const LabelVocab vocab = small_vocab();
  const std::vector<std::string> raw{"py", "x", "rust", "ml", "ML", "zzz"};
  const auto ids = canonicalize_topics(raw, vocab);
  std::vector<std::string> names;
  for (LabelId id : ids) {
    ASSERT_LT(static_cast<std::size_t>(id), vocab.size());
    names.push_back(vocab.name(id));
  }
  EXPECT_EQ(canonicalize_topics(names, vocab), ids);
}

TEST(IngestTest, ParsesRecords) {
  const std::string content =
      R"({"id":"a","readme":"Fast ML!","description":"in Rust","topics":["ml","rust"]})"
      "\n"
      R"({"id":"b","readme":"x","description":"","topics":["nothing-known"]})"
      "\n";
  const Corpus corpus = ingest_jsonl_text(content, small_vocab());
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus.records[0].id, "a");
  EXPECT_EQ(corpus.records[0].text, "fast ml in rust");
  EXPECT_EQ(corpus.records[0].topics, (std::vector<LabelId>{0, 1}));
  EXPECT_TRUE(corpus.records[1].topics.empty());
}

TEST(IngestTest, ErrorsNameTheLine) {
  const std::string content =
      R"({"id":"a","readme":"","description":"","topics":[]})"
      "\n"
      R"({"id":"b","readme":"","description":"","topics":[]})"
      "\n"
      "{not json\n";
  try {
    ingest_jsonl_text(content, small_vocab());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(IngestTest, DuplicateIdAndBadTypes) {
  const std::string dup =
      R"({"id":"a","readme":"","description":"","topics":[]})"
      "\n"
      R"({"id":"a","readme":"","description":"","topics":[]})"
      "\n";
  EXPECT_THROW(ingest_jsonl_text(dup, small_vocab()), DataError);
  EXPECT_THROW(ingest_jsonl_text(R"({"id":"a","topics":"rust"})", small_vocab()),
               DataError);
  EXPECT_THROW(ingest_jsonl_text(R"({"readme":"x"})", small_vocab()), DataError);
}

TEST(IngestTest, FileRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "tailtag_corpus_test";
  fs::create_directories(dir);
  SyntheticSpec spec;
  spec.classes = 6;
  spec.docs = 20;
  spec.seed = 5;
  const Corpus original = generate_synthetic(spec);
  write_jsonl(original, dir / "c.jsonl");
  save_label_vocab(original.vocab, dir / "c.vocab");
  const Corpus back = ingest_jsonl(dir / "c.jsonl", load_label_vocab(dir / "c.vocab"));
  ASSERT_EQ(back.size(), original.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.records[i].id, original.records[i].id);
    EXPECT_EQ(back.records[i].text, original.records[i].text);
    EXPECT_EQ(back.records[i].topics, original.records[i].topics);
  }
  EXPECT_THROW(ingest_jsonl(dir / "missing.jsonl", original.vocab), DataError);
}

TEST(LoadLabelVocabTest, AliasFile) {
  const fs::path dir = fs::temp_directory_path() / "tailtag_vocab_test";
  fs::create_directories(dir);
  std::ofstream(dir / "labels.txt") << "Rust\npython\n\n";
  std::ofstream(dir / "alias.txt") << "py\tpython\nrs\trust\n";
  const LabelVocab vocab = load_label_vocab(dir / "labels.txt", dir / "alias.txt");
  EXPECT_EQ(vocab.size(), 2u);
  EXPECT_EQ(vocab.lookup("rs"), LabelId{0});
  EXPECT_EQ(vocab.lookup("py"), LabelId{1});
  std::ofstream(dir / "bad_alias.txt") << "py python\n";
  EXPECT_THROW(load_label_vocab(dir / "labels.txt", dir / "bad_alias.txt"),
               DataError);
}

Corpus numbered_corpus(std::size_t n) {
  Corpus corpus{LabelVocab({"a", "b"}), {}};
  for (std::size_t i = 0; i < n; ++i) {
    corpus.records.push_back({"id" + std::to_string(i), "t", {LabelId(i % 2)}});
  }
  return corpus;
}

TEST(SplitTest, DeterministicDisjointPartition) {
  const Corpus corpus = numbered_corpus(50);
  const auto a = split(corpus, {30, 5, 10}, 42);
  const auto b = split(corpus, {30, 5, 10}, 42);
  ASSERT_EQ(a.train.size(), 30u);
  ASSERT_EQ(a.val.size(), 5u);
  ASSERT_EQ(a.test.size(), 10u);
  std::set<std::string> seen;
  for (const Corpus* part : {&a.train, &a.val, &a.test}) {
    for (const auto& r : part->records) EXPECT_TRUE(seen.insert(r.id).second);
  }
  EXPECT_EQ(seen.size(), 45u);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train.records[i].id, b.train.records[i].id);
  }
  const auto c = split(corpus, {30, 5, 10}, 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    differs |= a.train.records[i].id != c.train.records[i].id;
  }
  EXPECT_TRUE(differs);
}

TEST(SplitTest, OversizedRequestRejected) {
  EXPECT_THROW(split(numbered_corpus(4), {5, 0, 0}, 1), DataError);
  EXPECT_NO_THROW(split(numbered_corpus(4), {2, 1, 1}, 1));
  EXPECT_EQ(kDefaultSplitSizes.train, 11282u);
  EXPECT_EQ(kDefaultSplitSizes.val, 1000u);
  EXPECT_EQ(kDefaultSplitSizes.test, 2980u);
}

TEST(SyntheticTest, ZipfWeights) {
  const auto w = zipf_weights(3, 1.0);
  EXPECT_NEAR(w[0], 6.0 / 11.0, 1e-15);
  EXPECT_NEAR(w[1], 3.0 / 11.0, 1e-15);
  EXPECT_NEAR(w[2], 2.0 / 11.0, 1e-15);
  for (double x : zipf_weights(5, 0.0)) EXPECT_NEAR(x, 0.2, 1e-15);
}

TEST(SyntheticTest, DeterministicAndWellFormed) {
  SyntheticSpec spec;
  spec.classes = 20;
  spec.docs = 200;
  spec.seed = 9;
  const Corpus a = generate_synthetic(spec);
  const Corpus b = generate_synthetic(spec);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.records[i].text, b.records[i].text);
    EXPECT_EQ(a.records[i].topics, b.records[i].topics);
    const auto& topics = a.records[i].topics;
    EXPECT_GE(topics.size(), spec.labels_min);
    EXPECT_LE(topics.size(), spec.labels_max);
    EXPECT_TRUE(std::is_sorted(topics.begin(), topics.end()));
    EXPECT_EQ(clean_text(a.records[i].text), a.records[i].text);
    for (LabelId id : topics) {
      EXPECT_NE(a.records[i].text.find("sig" + std::to_string(id)),
                std::string::npos);
    }
  }
  spec.labels_max = 21;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(SyntheticTest, EmpiricalFrequenciesFollowZipf) {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.docs = 10000;
  spec.zipf_s = 1.0;
  spec.labels_min = 1;
  spec.labels_max = 1;  // single draws keep the marginal exactly Zipf
  spec.seed = 2024;
  const Corpus corpus = generate_synthetic(spec);
  const auto counts = label_counts(corpus);
  const auto w = zipf_weights(spec.classes, spec.zipf_s);
  const double d = static_cast<double>(spec.docs);
  for (std::size_t i = 0; i < spec.classes; ++i) {
    const double freq = static_cast<double>(counts[i]) / d;
    const double se = std::sqrt(w[i] * (1.0 - w[i]) / d);
    EXPECT_LT(std::abs(freq - w[i]), 3.0 * se) << "label " << i;
  }
}

TEST(LabelCountsTest, CountsAndPermutationInvariance) {
  Corpus corpus{LabelVocab({"a", "b", "c"}), {}};
  EXPECT_EQ(label_counts(corpus), (std::vector<std::int64_t>{0, 0, 0}));
  corpus.records.push_back({"1", "", {0}});
  corpus.records.push_back({"2", "", {0, 1}});
  EXPECT_EQ(label_counts(corpus), (std::vector<std::int64_t>{2, 1, 0}));

  SyntheticSpec spec;
  spec.classes = 15;
  spec.docs = 300;
  Corpus big = generate_synthetic(spec);
  const auto before = label_counts(big);
  std::int64_t assignments = 0;
  for (const auto& r : big.records) assignments += static_cast<std::int64_t>(r.topics.size());
  std::int64_t total = 0;
  for (auto n : before) total += n;
  EXPECT_EQ(total, assignments);
  std::mt19937_64 rng(1);
  std::shuffle(big.records.begin(), big.records.end(), rng);
  EXPECT_EQ(label_counts(big), before);
}

}  // namespace
}  // namespace tailtag
