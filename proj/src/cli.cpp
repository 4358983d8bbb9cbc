// SPDX-License-Identifier: Apache-2.0
#include "tailtag/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tailtag/common.hpp"
#include "tailtag/corpus.hpp"
#include "tailtag/evaluate.hpp"
#include "tailtag/featurize.hpp"
#include "tailtag/inference.hpp"
#include "tailtag/losses.hpp"
#include "tailtag/sampling.hpp"
#include "tailtag/trainer.hpp"

namespace tailtag {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kGenerateKeys[] = {
    "config", "classes", "docs", "zipf", "seed", "out", "labels_min",
    "labels_max", "filler_vocab", "split"};

constexpr std::string_view kIngestKeys[] = {"config", "in", "vocab", "alias",
                                            "out", "split", "seed"};

constexpr std::string_view kTrainKeys[] = {
    "config", "corpus", "vocab", "loss", "out_checkpoint", "lambda", "kappa",
    "focal_gamma", "focal_alpha", "lr", "weight_decay", "beta1", "beta2",
    "eps", "epochs", "batch", "seed", "sampler.cap", "sampler.alpha",
    "sampler.beta", "sampler.mu", "sampler.negative_weight_mode",
    "sampler.mode", "skip_empty", "min_df", "max_features",
    "disable_db_loss"};

constexpr std::string_view kTuneKeys[] = {"config", "checkpoint", "val",
                                          "grid_step", "ks", "out"};

constexpr std::string_view kPredictKeys[] = {
    "config", "checkpoint", "corpus", "k", "tau", "tau_file", "val",
    "grid_step", "ks", "disable_filter", "out"};

constexpr std::string_view kEvaluateKeys[] = {
    "config", "preds", "truth", "vocab", "buckets", "ks", "head_min",
    "mid_min", "out_report"};

constexpr std::string_view kFuseKeys[] = {"config", "a", "b", "ka", "kb",
                                          "vocab", "out"};

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<SplitSizes> parse_split(const RunConfig& cfg) {
  if (!cfg.has("split")) return std::nullopt;
  const auto sizes = cfg.get_size_list("split", {});
  if (sizes.size() != 3) {
    throw ConfigError("split: expected three sizes train,val,test");
  }
  return SplitSizes{sizes[0], sizes[1], sizes[2]};
}

void write_corpus_with_vocab(const Corpus& corpus, const fs::path& path) {
  write_jsonl(corpus, path);
  save_label_vocab(corpus.vocab, vocab_path_for(path));
}

void write_splits(const Corpus& corpus, const fs::path& out,
                  const SplitSizes& sizes, std::uint64_t seed,
                  std::ostream& log) {
  const CorpusSplit parts = split(corpus, sizes, seed);
  const std::pair<const Corpus*, std::string_view> named[] = {
      {&parts.train, "train"}, {&parts.val, "val"}, {&parts.test, "test"}};
  for (const auto& [part, name] : named) {
    const fs::path path = split_path(out, name);
    write_corpus_with_vocab(*part, path);
    log << name << '\t' << part->size() << '\t' << path.string() << '\n';
  }
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  cfg.require_known(kGenerateKeys);
  SyntheticSpec spec;
  spec.classes = cfg.get_uint("classes", spec.classes);
  spec.docs = cfg.get_uint("docs", spec.docs);
  spec.zipf_s = cfg.get_double("zipf", spec.zipf_s);
  spec.seed = cfg.get_uint("seed", spec.seed);
  spec.labels_min = cfg.get_uint("labels_min", spec.labels_min);
  spec.labels_max = cfg.get_uint("labels_max", spec.labels_max);
  spec.filler_vocab = cfg.get_uint("filler_vocab", spec.filler_vocab);
  const fs::path path = cfg.get_path("out");
  const auto sizes = parse_split(cfg);

  const Corpus corpus = generate_synthetic(spec);
  write_corpus_with_vocab(corpus, path);
  out << "corpus\t" << corpus.size() << '\t' << path.string() << '\n';
  if (sizes) write_splits(corpus, path, *sizes, spec.seed, out);
  return kExitOk;
}

int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  cfg.require_known(kIngestKeys);
  const LabelVocab vocab =
      load_label_vocab(cfg.get_path("vocab"), cfg.get_optional_path("alias"));
  const fs::path path = cfg.get_path("out");
  const auto sizes = parse_split(cfg);
  const std::uint64_t seed = cfg.get_uint("seed", 0);

  const Corpus corpus = ingest_jsonl(cfg.get_path("in"), vocab);
  write_corpus_with_vocab(corpus, path);
  const auto empty = std::count_if(
      corpus.records.begin(), corpus.records.end(),
      [](const RepoRecord& r) { return r.topics.empty(); });
  out << "corpus\t" << corpus.size() << '\t' << path.string() << '\n';
  out << "empty_topic_records\t" << empty << '\n';
  if (sizes) write_splits(corpus, path, *sizes, seed, out);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  cfg.require_known(kTrainKeys);
  const fs::path corpus_path = cfg.get_path("corpus");
  const fs::path vocab_path =
      cfg.get_optional_path("vocab").value_or(vocab_path_for(corpus_path));
  const fs::path ckpt = cfg.get_path("out_checkpoint");

  TrainConfig tc;
  LossFamily family = parse_loss_family(cfg.get_string("loss", "db"));
  if (cfg.get_bool("disable_db_loss", false)) {
    if (cfg.has("loss") && family != LossFamily::kDb &&
        family != LossFamily::kBce) {
      throw ConfigError("disable_db_loss: conflicts with loss=" +
                        std::string(to_string(family)));
    }
    family = LossFamily::kBce;
  }
  tc.loss.family = family;
  tc.loss.lambda = cfg.get_double("lambda", tc.loss.lambda);
  tc.loss.kappa = cfg.get_double("kappa", tc.loss.kappa);
  tc.loss.focal_gamma = cfg.get_double("focal_gamma", tc.loss.focal_gamma);
  tc.loss.focal_alpha = cfg.get_double("focal_alpha", tc.loss.focal_alpha);
  tc.optim.lr = cfg.get_double("lr", default_learning_rate(family));
  tc.optim.weight_decay = cfg.get_double("weight_decay", tc.optim.weight_decay);
  tc.optim.beta1 = cfg.get_double("beta1", tc.optim.beta1);
  tc.optim.beta2 = cfg.get_double("beta2", tc.optim.beta2);
  tc.optim.eps = cfg.get_double("eps", tc.optim.eps);
  tc.optim.epochs = cfg.get_uint("epochs", tc.optim.epochs);
  tc.optim.batch = cfg.get_uint("batch", tc.optim.batch);
  tc.optim.seed = cfg.get_uint("seed", tc.optim.seed);
  tc.sampler = parse_sampler_mode(cfg.get_string("sampler.mode", "auto"));
  tc.skip_empty = cfg.get_bool("skip_empty", false);
  tc.loss.validate();
  tc.optim.validate();

  std::optional<std::int64_t> cap;
  if (cfg.has("sampler.cap")) cap = cfg.get_int("sampler.cap", 0);
  SmoothingParams smoothing;
  smoothing.alpha = cfg.get_double("sampler.alpha", smoothing.alpha);
  smoothing.beta = cfg.get_double("sampler.beta", smoothing.beta);
  smoothing.mu = cfg.get_double("sampler.mu", smoothing.mu);
  smoothing.negative_mode = parse_negative_weight_mode(
      cfg.get_string("sampler.negative_weight_mode", "min_positive"));
  TermVocabParams term_params;
  term_params.min_df = cfg.get_uint("min_df", term_params.min_df);
  term_params.max_features = cfg.get_uint("max_features", term_params.max_features);
  if (term_params.min_df < 1) throw ConfigError("min_df: must be >= 1");

  const LabelVocab labels = load_label_vocab(vocab_path);
  const Corpus corpus = ingest_jsonl(corpus_path, labels);
  if (corpus.empty()) throw DataError("training corpus is empty");
  const TermVocab terms = build_vocab(corpus, term_params);
  if (terms.size() == 0) {
    throw DataError("no terms reach min_df=" + std::to_string(term_params.min_df));
  }
  const std::vector<SparseVec> features = featurize(corpus, terms);
  const LabelStats stats = make_label_stats(corpus, cap);
  const InstanceWeights weights = build_instance_weights(stats, corpus, smoothing);

  const bool uses_nu = family == LossFamily::kNegTolerantBce ||
                       family == LossFamily::kDb;
  if (uses_nu) {
    tc.loss.nu = compute_class_bias(stats.counts, stats.num_records, tc.loss.kappa);
  }
  Model model = init_model(labels.size(), terms.size(), tc.optim.seed,
                           uses_nu ? std::span<const double>(tc.loss.nu)
                                   : std::span<const double>());
  TrainResult result = train(std::move(model), corpus, features, stats, weights, tc);
  result.model.meta = {labels.hash(), terms.hash(),
                       training_fingerprint(tc, stats, smoothing)};

  save_checkpoint(result.model, ckpt);
  save_term_vocab(terms, fs::path(ckpt.string() + ".terms"));
  save_label_vocab(labels, fs::path(ckpt.string() + ".labels"));
  std::string log = "epoch\tmean_loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    log += std::to_string(e + 1) + '\t' + format_g17(result.epoch_loss[e]) + '\n';
  }
  write_text(fs::path(ckpt.string() + ".log"), log);

  out << "loss\t" << to_string(family) << '\n';
  out << "sampler\t" << to_string(resolve_sampler_mode(tc.sampler, family)) << '\n';
  out << "classes\t" << labels.size() << "\nfeatures\t" << terms.size() << '\n';
  out << "final_epoch_loss\t" << format_g17(result.epoch_loss.back()) << '\n';
  out << "checkpoint\t" << ckpt.string() << '\n';
  return kExitOk;
}

struct LoadedModel {
  LabelVocab labels;
  TermVocab terms;
  Model model;
};

LoadedModel load_model_bundle(const fs::path& ckpt) {
  LoadedModel bundle;
  bundle.labels = load_label_vocab(fs::path(ckpt.string() + ".labels"));
  bundle.terms = load_term_vocab(fs::path(ckpt.string() + ".terms"));
  bundle.model = load_checkpoint(
      ckpt, CheckpointGuard{bundle.labels.hash(), bundle.terms.hash()});
  return bundle;
}

double tune_from_config(const RunConfig& cfg, const LoadedModel& bundle) {
  const Corpus val = ingest_jsonl(cfg.get_path("val"), bundle.labels);
  const auto ks = cfg.get_size_list("ks", {1, 3, 5});
  const double step = cfg.get_double("grid_step", 0.01);
  const auto features = featurize(val, bundle.terms);
  return tune_threshold(bundle.model, val, features, ks, step);
}

int cmd_tune(const RunConfig& cfg, std::ostream& out) {
  cfg.require_known(kTuneKeys);
  const LoadedModel bundle = load_model_bundle(cfg.get_path("checkpoint"));
  const double tau = tune_from_config(cfg, bundle);
  const std::string line = "tau\t" + format_g17(tau) + '\n';
  if (const auto path = cfg.get_optional_path("out")) write_text(*path, line);
  out << line;
  return kExitOk;
}

double read_tau_file(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string key;
  double tau = -1.0;
  if (!(in >> key >> tau) || key != "tau") {
    throw DataError(path.string() + ": expected 'tau<TAB>value'");
  }
  return tau;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  cfg.require_known(kPredictKeys);
  const bool disable_filter = cfg.get_bool("disable_filter", false);
  const int tau_sources = static_cast<int>(cfg.has("tau")) +
                          static_cast<int>(cfg.has("tau_file"));
  if (disable_filter && tau_sources > 0) {
    throw ConfigError("disable_filter: cannot be combined with tau or tau_file");
  }
  if (!disable_filter && tau_sources != 1) {
    throw ConfigError(
        "tau: give exactly one of tau=<value>, tau=tune or tau_file");
  }
  const std::size_t k = cfg.get_uint("k", 5);
  if (k < 1) throw ConfigError("k: must be >= 1");
  const fs::path out_path = cfg.get_path("out");

  const LoadedModel bundle = load_model_bundle(cfg.get_path("checkpoint"));
  double tau = 0.0;
  if (cfg.has("tau_file")) {
    tau = read_tau_file(cfg.get_path("tau_file"));
  } else if (cfg.has("tau") && cfg.get_string("tau") == "tune") {
    if (!cfg.has("val")) throw ConfigError("val: required when tau=tune");
    tau = tune_from_config(cfg, bundle);
  } else if (cfg.has("tau")) {
    if (cfg.has("val")) throw ConfigError("val: only used with tau=tune");
    tau = cfg.get_double("tau", 0.0);
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau: must be in [0, 1]");

  const Corpus corpus = ingest_jsonl(cfg.get_path("corpus"), bundle.labels);
  const auto features = featurize(corpus, bundle.terms);
  const PredictionMap raw = predict_corpus(bundle.model, corpus, features, k);
  PredictionMap filtered;
  for (const auto& [id, set] : raw) filtered[id] = filter_low_confidence(set, tau);

  write_predictions(filtered, bundle.labels, out_path);
  const fs::path raw_path(out_path.string() + ".unfiltered");
  write_predictions(raw, bundle.labels, raw_path);
  out << "tau\t" << format_g17(tau) << '\n';
  out << "records\t" << raw.size() << '\n';
  out << "filtered\t" << out_path.string() << '\n';
  out << "unfiltered\t" << raw_path.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  cfg.require_known(kEvaluateKeys);
  const fs::path truth_path = cfg.get_path("truth");
  const LabelVocab labels = load_label_vocab(
      cfg.get_optional_path("vocab").value_or(vocab_path_for(truth_path)));
  const auto ks = cfg.get_size_list("ks", {1, 3, 5});
  if (ks.empty() || std::find(ks.begin(), ks.end(), 0u) != ks.end()) {
    throw ConfigError("ks: cutoffs must be >= 1");
  }
  BucketSpec buckets;
  buckets.head_min = cfg.get_int("head_min", buckets.head_min);
  buckets.mid_min = cfg.get_int("mid_min", buckets.mid_min);
  const fs::path report_path = cfg.get_path("out_report");

  const Corpus truth_corpus = ingest_jsonl(truth_path, labels);
  const PredictionMap preds = read_predictions(cfg.get_path("preds"), labels);
  if (const auto train_path = cfg.get_optional_path("buckets")) {
    const Corpus train = ingest_jsonl(*train_path, labels);
    buckets = partition_labels(label_counts(train), buckets);
  } else {
    partition_labels({}, buckets);  // validates thresholds only
  }
  const TruthMap truth = truth_of(truth_corpus);

  Fnv1a h;
  for (std::size_t k : ks) h.update_field(std::to_string(k));
  h.update_field(std::to_string(buckets.head_min));
  h.update_field(std::to_string(buckets.mid_min));
  for (Bucket b : buckets.assignment) h.update_field(to_string(b));
  h.update_field(format_predictions(preds, labels));
  for (const auto& [id, topics] : truth) {
    h.update_field(id);
    for (LabelId t : topics) h.update_field(labels.name(t));
  }

  const MetricReport report = build_report(preds, truth, buckets, ks, h.digest());
  emit_report(report, report_path);
  out << format_report(report);
  return kExitOk;
}

int cmd_fuse(const RunConfig& cfg, std::ostream& out) {
  cfg.require_known(kFuseKeys);
  const LabelVocab labels = load_label_vocab(cfg.get_path("vocab"));
  const std::size_t ka = cfg.get_uint("ka", 3);
  const std::size_t kb = cfg.get_uint("kb", 5);
  const fs::path out_path = cfg.get_path("out");
  const PredictionMap a = read_predictions(cfg.get_path("a"), labels);
  const PredictionMap b = read_predictions(cfg.get_path("b"), labels);
  const PredictionMap fused = fuse(a, b, ka, kb);
  write_predictions(fused, labels, out_path);
  out << "records\t" << fused.size() << '\n';
  out << "fused\t" << out_path.string() << '\n';
  return kExitOk;
}

}  // namespace

fs::path split_path(const fs::path& corpus, std::string_view part) {
  fs::path out = corpus.parent_path() / corpus.stem();
  out += "." + std::string(part);
  out += corpus.extension();
  return out;
}

fs::path vocab_path_for(const fs::path& corpus) {
  return fs::path(corpus.string() + ".vocab");
}

int run_command(std::string_view command, const RunConfig& config,
                std::ostream& out, std::ostream& err) {
  try {
    if (command == "generate") return cmd_generate(config, out);
    if (command == "ingest") return cmd_ingest(config, out);
    if (command == "train") return cmd_train(config, out);
    if (command == "tune-threshold") return cmd_tune(config, out);
    if (command == "predict") return cmd_predict(config, out);
    if (command == "evaluate") return cmd_evaluate(config, out);
    if (command == "fuse") return cmd_fuse(config, out);
    err << "tailtag: error: unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "tailtag: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "tailtag: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "tailtag: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "tailtag: error: " << e.what() << '\n';
    return kExitData;
  }
}

int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  if (argc < 2) {
    err << "usage: tailtag <generate|ingest|train|tune-threshold|predict|"
           "evaluate|fuse> [--key=value ...]\n";
    return kExitConfig;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") {
    out << "usage: tailtag <generate|ingest|train|tune-threshold|predict|"
           "evaluate|fuse> [--key=value ...]\n";
    return kExitOk;
  }
  std::vector<std::string> args(argv + 2, argv + argc);
  RunConfig config;
  try {
    config = RunConfig::from_args(args);
  } catch (const ConfigError& e) {
    err << "tailtag: config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return run_command(command, config, out, err);
}

}  // namespace tailtag
