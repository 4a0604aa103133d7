// hazardtag: end-to-end CLI for the Arabic food-hazard extraction pipeline.
// Subcommands: prepare, train, tag, extract, eval, inspect. Logs go to
// stderr, data to files or stdout. Exit codes: 0 ok, 1 runtime failure,
// 2 usage/config/malformed-input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hazardtag/arabic_text.hpp"
#include "hazardtag/corpus.hpp"
#include "hazardtag/eval.hpp"
#include "hazardtag/extraction.hpp"
#include "hazardtag/features.hpp"
#include "hazardtag/model_io.hpp"
#include "hazardtag/tagger.hpp"

namespace {

using namespace hazardtag;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  return out;
}

// ---------------------------------------------------------------- prepare

int run_prepare(const std::string& in_path, const std::string& out_path,
                const std::string& stem_rules_path) {
  std::vector<Document> docs;
  try {
    docs = load_documents(in_path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("prepare: ") + e.what());
  }
  std::optional<StemRuleTable> stem_rules;
  if (!stem_rules_path.empty()) {
    try {
      stem_rules = load_stem_rules(stem_rules_path);
    } catch (const std::exception& e) {
      throw UsageError(std::string("prepare: ") + e.what());
    }
  }

  auto out = open_output(out_path);
  std::size_t n_sentences = 0, n_tokens = 0;
  for (const auto& doc : docs) {
    const std::string normalized = normalize(doc.text);
    for (const auto& sentence : split_sentences(normalized)) {
      auto tokens = tokenize(sentence);
      if (tokens.empty()) continue;
      json rec;
      std::vector<std::string> surfaces;
      surfaces.reserve(tokens.size());
      for (const auto& t : tokens) surfaces.push_back(t.surface);
      rec["tokens"] = surfaces;
      rec["doc_id"] = doc.id;
      if (stem_rules) {
        std::vector<std::string> stems;
        stems.reserve(surfaces.size());
        for (const auto& s : surfaces) stems.push_back(stem(s, *stem_rules));
        rec["stems"] = stems;
      }
      out << rec.dump() << '\n';
      ++n_sentences;
      n_tokens += tokens.size();
    }
  }
  std::fprintf(stderr, "prepare: %zu documents, %zu sentences, %zu tokens\n",
               docs.size(), n_sentences, n_tokens);
  return 0;
}

// ------------------------------------------------------------------ train

struct RunConfig {
  std::string corpus;
  std::string embeddings;
  std::string model;
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};
  std::size_t min_freq = 1;
  TrainConfig train;
};

std::array<double, 3> parse_ratios(const std::string& s) {
  std::array<double, 3> r{};
  std::istringstream ss(s);
  std::string part;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!std::getline(ss, part, ','))
      throw UsageError("ratios: expected three comma-separated values");
    try {
      r[i] = std::stod(part);
    } catch (const std::exception&) {
      throw UsageError("ratios: bad value '" + part + "'");
    }
  }
  if (std::getline(ss, part, ','))
    throw UsageError("ratios: expected exactly three values");
  return r;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("expected boolean, got '" + v + "'");
}

// Flat key=value file; '#' starts a comment line.
void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "corpus") cfg.corpus = value;
      else if (key == "embeddings") cfg.embeddings = value;
      else if (key == "model") cfg.model = value;
      else if (key == "ratios") cfg.ratios = parse_ratios(value);
      else if (key == "min_freq") cfg.min_freq = std::stoul(value);
      else if (key == "lr") cfg.train.learning_rate = std::stod(value);
      else if (key == "epochs") cfg.train.epochs = std::stoul(value);
      else if (key == "seed") cfg.train.seed = std::stoull(value);
      else if (key == "hidden") cfg.train.hidden = std::stoul(value);
      else if (key == "dim") cfg.train.dim = std::stoul(value);
      else if (key == "clip") cfg.train.clip = std::stod(value);
      else if (key == "shuffle") cfg.train.shuffle = parse_bool(value);
      else
        throw UsageError("config line " + std::to_string(lineno) +
                         ": unknown key '" + key + "'");
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception&) {
      throw UsageError("config line " + std::to_string(lineno) +
                       ": bad value for '" + key + "'");
    }
  }
}

int run_train(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw UsageError("train: corpus path not set");
  if (cfg.model.empty()) throw UsageError("train: model path not set");
  try {
    validate(cfg.train);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  std::vector<AnnotatedSentence> sentences;
  try {
    sentences = load_corpus(cfg.corpus);
  } catch (const std::exception& e) {
    throw UsageError(std::string("train: ") + e.what());
  }

  CorpusSplit split;
  try {
    split = split_corpus(std::move(sentences), cfg.ratios, cfg.train.seed);
  } catch (const std::exception& e) {
    throw UsageError(std::string("train: ") + e.what());
  }

  Vocabulary vocab = build_vocab(split.train, cfg.min_freq);
  TaggerModel model = init_model(vocab, TagSet::default13(), cfg.train.dim,
                                 cfg.train.hidden, cfg.train.seed);
  if (!cfg.embeddings.empty()) {
    const double scale = std::sqrt(
        6.0 / static_cast<double>(model.vocab.size() + cfg.train.dim));
    try {
      model.embeddings = load_pretrained(cfg.embeddings, model.vocab,
                                         cfg.train.dim, cfg.train.seed, scale);
    } catch (const std::exception& e) {
      throw UsageError(std::string("train: ") + e.what());
    }
  }

  TrainResult result =
      train(split.train, split.dev, cfg.train, std::move(model));
  for (const auto& entry : result.log)
    std::fprintf(stderr, "epoch %zu loss %.9g dev_acc %.9g\n", entry.epoch,
                 entry.train_loss, entry.dev_accuracy);
  save_model(cfg.model, result.model);
  return 0;
}

// ----------------------------------------------------------- tag / extract

std::vector<TokenRecord> load_input_sentences(const std::string& path) {
  try {
    return load_token_records(path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("input: ") + e.what());
  }
}

int run_tag(const std::string& model_path, const std::string& in_path,
            const std::string& out_path) {
  TaggerModel model = load_model(model_path);
  auto records = load_input_sentences(in_path);
  auto out = open_output(out_path);
  for (const auto& rec : records) {
    auto tags = tag(model, rec.tokens);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (i) out << ' ';
      out << tags[i];
    }
    out << '\n';
  }
  return 0;
}

int run_extract(const std::string& model_path, const std::string& in_path,
                const std::string& out_path) {
  TaggerModel model = load_model(model_path);
  auto records = load_input_sentences(in_path);
  std::vector<HazardEvent> events;
  events.reserve(records.size());
  for (const auto& rec : records) {
    auto tags = tag(model, rec.tokens);
    auto spans = decode_spans(rec.tokens, tags);
    events.push_back(fill_template(spans, rec.doc_id));
  }
  auto out = open_output(out_path);
  events_to_report(events, out);
  return 0;
}

// ------------------------------------------------------------------- eval

std::vector<std::vector<std::string>> load_pred_tags(const std::string& path,
                                                     std::size_t expected) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open predictions file: " + path);
  std::string first;
  std::getline(in, first);
  in.clear();
  in.seekg(0);

  std::vector<std::vector<std::string>> pred;
  if (!first.empty() && first[0] == '{') {
    // annotated records
    std::vector<AnnotatedSentence> sentences;
    try {
      sentences = load_corpus(in);
    } catch (const std::exception& e) {
      throw UsageError(std::string("pred: ") + e.what());
    }
    for (auto& s : sentences) pred.push_back(std::move(s.tags));
  } else {
    // one space-joined tag sequence per line
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::vector<std::string> tags;
      std::string t;
      while (ss >> t) {
        auto canonical = canonicalize_tag(t);
        if (!canonical)
          throw UsageError("pred: line " + std::to_string(lineno) +
                           ": invalid tag '" + t + "'");
        tags.push_back(*canonical);
      }
      pred.push_back(std::move(tags));
    }
  }
  if (pred.size() != expected)
    throw std::runtime_error("eval: gold has " + std::to_string(expected) +
                             " sentences, predictions have " +
                             std::to_string(pred.size()));
  return pred;
}

int run_eval(const std::string& gold_path, const std::string& pred_path,
             const std::string& out_path) {
  std::vector<AnnotatedSentence> gold;
  try {
    gold = load_corpus(gold_path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("gold: ") + e.what());
  }
  auto pred = load_pred_tags(pred_path, gold.size());

  std::vector<std::vector<std::string>> gold_tags;
  gold_tags.reserve(gold.size());
  std::vector<std::vector<EntitySpan>> gold_spans, pred_spans;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    gold_tags.push_back(gold[n].tags);
    gold_spans.push_back(decode_spans(gold[n].tokens, gold[n].tags));
    pred_spans.push_back(decode_spans(gold[n].tokens, pred[n]));
  }

  MetricsReport report = token_metrics(confusion_matrix(gold_tags, pred));
  report.entity = entity_metrics(gold_spans, pred_spans);

  print_report(report, std::cout);
  if (!out_path.empty()) {
    auto out = open_output(out_path);
    out << report_to_json(report).dump() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- inspect

int run_inspect(const std::string& model_path, const std::string& corpus_path,
                std::size_t top_k) {
  TaggerModel model = load_model(model_path);
  std::cout << "vocab " << model.vocab.size() << "\nembedding_dim "
            << model.dim() << "\nhidden " << model.hidden() << "\ntags "
            << model.tags.size() << '\n';
  std::cout << "tagset";
  for (const auto& t : model.tags.tags()) std::cout << ' ' << t;
  std::cout << '\n';

  if (corpus_path.empty()) return 0;
  std::vector<AnnotatedSentence> sentences;
  try {
    sentences = load_corpus(corpus_path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("inspect: ") + e.what());
  }

  // feature = token presence per sentence; class = sentence mentions any
  // entity (a non-O tag).
  std::vector<bool> labels(sentences.size());
  std::map<std::string, std::vector<bool>> presence;
  for (std::size_t n = 0; n < sentences.size(); ++n) {
    labels[n] = std::any_of(sentences[n].tags.begin(),
                            sentences[n].tags.end(),
                            [](const std::string& t) { return t != "O"; });
    for (const auto& tok : sentences[n].tokens) {
      auto [it, inserted] =
          presence.emplace(tok, std::vector<bool>(sentences.size(), false));
      it->second[n] = true;
    }
  }
  for (const auto& score : chi_square_select(presence, labels, top_k)) {
    std::cout << "chi2 ";
    write_real(std::cout, score.chi2);
    std::cout << ' ' << score.id << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arabic food-hazard event extraction pipeline"};
  app.require_subcommand(1);

  std::string in_path, out_path, model_path, gold_path, pred_path;
  std::string corpus_path, stem_rules_path, config_path;
  std::size_t top_k = 10;

  auto* prepare = app.add_subcommand(
      "prepare", "Normalize, sentence-split and tokenize raw documents");
  prepare->add_option("--in", in_path, "raw documents file")->required();
  prepare->add_option("--out", out_path, "tokenized sentences file")
      ->required();
  prepare->add_option("--stem-rules", stem_rules_path,
                      "optional stem rule table; adds a 'stems' field");

  auto* train_cmd =
      app.add_subcommand("train", "Train a tagger on an annotated corpus");
  std::optional<std::string> opt_corpus, opt_embeddings, opt_model,
      opt_ratios;
  std::optional<double> opt_lr, opt_clip;
  std::optional<std::size_t> opt_epochs, opt_hidden, opt_dim, opt_min_freq;
  std::optional<std::uint64_t> opt_seed;
  std::optional<bool> opt_shuffle;
  train_cmd->add_option("--config", config_path, "key=value config file");
  train_cmd->add_option("--corpus", opt_corpus, "annotated corpus file");
  train_cmd->add_option("--embeddings", opt_embeddings,
                        "pretrained embeddings file");
  train_cmd->add_option("--model", opt_model, "model output path");
  train_cmd->add_option("--ratios", opt_ratios,
                        "train,dev,test split ratios");
  train_cmd->add_option("--lr", opt_lr, "learning rate");
  train_cmd->add_option("--epochs", opt_epochs, "training epochs");
  train_cmd->add_option("--seed", opt_seed, "PRNG seed");
  train_cmd->add_option("--hidden", opt_hidden, "LSTM hidden size");
  train_cmd->add_option("--dim", opt_dim, "embedding dimension");
  train_cmd->add_option("--clip", opt_clip, "gradient clip threshold");
  train_cmd->add_option("--shuffle", opt_shuffle, "shuffle per epoch");
  train_cmd->add_option("--min-freq", opt_min_freq,
                        "vocabulary frequency cutoff");

  auto* tag_cmd = app.add_subcommand("tag", "Tag a tokenized sentences file");
  tag_cmd->add_option("--model", model_path, "model file")->required();
  tag_cmd->add_option("--in", in_path, "sentences file")->required();
  tag_cmd->add_option("--out", out_path, "tag sequences output")->required();

  auto* extract = app.add_subcommand(
      "extract", "Tag sentences and emit hazard-event records");
  extract->add_option("--model", model_path, "model file")->required();
  extract->add_option("--in", in_path, "sentences file")->required();
  extract->add_option("--out", out_path, "event records output")->required();

  auto* eval_cmd =
      app.add_subcommand("eval", "Score predictions against gold tags");
  eval_cmd->add_option("--gold", gold_path, "annotated gold file")
      ->required();
  eval_cmd->add_option("--pred", pred_path, "predicted tags file")
      ->required();
  eval_cmd->add_option("--out", out_path, "metrics record output");

  auto* inspect =
      app.add_subcommand("inspect", "Print model dimensions and tag set");
  inspect->add_option("--model", model_path, "model file")->required();
  inspect->add_option("--corpus", corpus_path,
                      "labeled corpus for chi-square feature ranking");
  inspect->add_option("--top", top_k, "number of features to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*prepare) return run_prepare(in_path, out_path, stem_rules_path);
    if (*train_cmd) {
      RunConfig cfg;
      if (!config_path.empty()) apply_config_file(config_path, cfg);
      if (opt_corpus) cfg.corpus = *opt_corpus;
      if (opt_embeddings) cfg.embeddings = *opt_embeddings;
      if (opt_model) cfg.model = *opt_model;
      if (opt_ratios) cfg.ratios = parse_ratios(*opt_ratios);
      if (opt_min_freq) cfg.min_freq = *opt_min_freq;
      if (opt_lr) cfg.train.learning_rate = *opt_lr;
      if (opt_epochs) cfg.train.epochs = *opt_epochs;
      if (opt_seed) cfg.train.seed = *opt_seed;
      if (opt_hidden) cfg.train.hidden = *opt_hidden;
      if (opt_dim) cfg.train.dim = *opt_dim;
      if (opt_clip) cfg.train.clip = *opt_clip;
      if (opt_shuffle) cfg.train.shuffle = *opt_shuffle;
      return run_train(cfg);
    }
    if (*tag_cmd) return run_tag(model_path, in_path, out_path);
    if (*extract) return run_extract(model_path, in_path, out_path);
    if (*eval_cmd) return run_eval(gold_path, pred_path, out_path);
    if (*inspect) return run_inspect(model_path, corpus_path, top_k);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
