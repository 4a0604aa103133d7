#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hazardtag/corpus.hpp"
#include "hazardtag/model_io.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() /
          ("hazardtag_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

int run(const std::string& args, const fs::path& out = {},
        const fs::path& err = {}) {
  std::string cmd = std::string(HAZARDTAG_BIN) + " " + args;
  cmd += " >" + (out.empty() ? "/dev/null" : out.string());
  cmd += " 2>" + (err.empty() ? "/dev/null" : err.string());
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

void write_corpus_file(const fs::path& p,
                       const std::vector<hazardtag::AnnotatedSentence>& s) {
  hazardtag::save_corpus(p.string(), s);
}

// 20 copies of the worked-example sentence; enough signal to overfit a
// small model that tags it perfectly.
std::vector<hazardtag::AnnotatedSentence> paper_corpus() {
  hazardtag::AnnotatedSentence s;
  s.tokens = {"حجز", "أكثر", "من", "قنطار", "من",
              "اللحم", "الحمراء", "في", "سطيف"};
  s.tags = {"O", "O", "O", "B-QUANT", "O", "B-EVT", "I-EVT", "O", "B-LOC"};
  s.doc_id = "paper";
  return std::vector<hazardtag::AnnotatedSentence>(20, s);
}

}  // namespace

TEST_CASE("missing subcommand is a usage error") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("tag") == 2);  // missing required flags
  CHECK(run("--help") == 0);
}

TEST_CASE("prepare tokenizes documents") {
  Scratch tmp;
  write_file(tmp / "docs.jsonl",
             R"({"id": "d1", "text": "حجز أكثر من قنطار من اللحم الحمراء في سطيف", "source": "report"})"
             "\n"
             R"({"id": "d2", "text": "الاولى. الثانية؟", "source": "social"})"
             "\n");
  const auto out = tmp / "sentences.jsonl";
  const auto err = tmp / "err.txt";
  REQUIRE(run("prepare --in " + (tmp / "docs.jsonl").string() + " --out " +
              out.string(), {}, err) == 0);
  REQUIRE(count_lines(out) == 3);  // one sentence + two sentences

  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  auto rec = ordered_json::parse(line);
  CHECK(rec["tokens"].size() == 9);
  CHECK(rec["doc_id"] == "d1");
  CHECK(slurp(err).find("3 sentences") != std::string::npos);
}

TEST_CASE("prepare handles empty input and rejects malformed input") {
  Scratch tmp;
  write_file(tmp / "empty.jsonl", "");
  const auto out = tmp / "out.jsonl";
  CHECK(run("prepare --in " + (tmp / "empty.jsonl").string() + " --out " +
            out.string()) == 0);
  CHECK(count_lines(out) == 0);

  write_file(tmp / "bad.jsonl", "this is not a record\n");
  CHECK(run("prepare --in " + (tmp / "bad.jsonl").string() + " --out " +
            out.string()) == 2);

  CHECK(run("prepare --in " + (tmp / "missing.jsonl").string() + " --out " +
            out.string()) == 2);
}

TEST_CASE("prepare can emit stems") {
  Scratch tmp;
  write_file(tmp / "docs.jsonl",
             R"({"id": "d1", "text": "اللحم الحمراء"})" "\n");
  write_file(tmp / "rules.txt", "prefix ال\nsuffix ة\nmin_stem_length 2\n");
  const auto out = tmp / "sentences.jsonl";
  REQUIRE(run("prepare --in " + (tmp / "docs.jsonl").string() + " --out " +
              out.string() + " --stem-rules " +
              (tmp / "rules.txt").string()) == 0);
  auto rec = ordered_json::parse(slurp(out));
  REQUIRE(rec.contains("stems"));
  CHECK(rec["stems"][0] == "لحم");
}

TEST_CASE("train writes a model and logs epochs") {
  Scratch tmp;
  write_corpus_file(tmp / "corpus.jsonl", synthetic::corpus(30, 5));
  write_file(tmp / "train.cfg",
             "corpus = " + (tmp / "corpus.jsonl").string() +
                 "\n"
                 "model = " + (tmp / "model.txt").string() +
                 "\n"
                 "epochs = 2\nhidden = 6\ndim = 6\nseed = 9\n"
                 "ratios = 0.8,0.1,0.1\n");
  const auto err = tmp / "err.txt";
  REQUIRE(run("train --config " + (tmp / "train.cfg").string(), {}, err) == 0);
  CHECK(fs::exists(tmp / "model.txt"));
  const std::string log = slurp(err);
  CHECK(log.find("epoch 1 loss ") != std::string::npos);
  CHECK(log.find("epoch 2 loss ") != std::string::npos);
  CHECK(log.find("dev_acc") != std::string::npos);

  // same seed: byte-identical model and epoch log
  const std::string first_model = slurp(tmp / "model.txt");
  const auto err2 = tmp / "err2.txt";
  REQUIRE(run("train --config " + (tmp / "train.cfg").string(), {}, err2) ==
          0);
  CHECK(slurp(tmp / "model.txt") == first_model);
  CHECK(slurp(err2) == log);

  // flags override the config file
  const auto err3 = tmp / "err3.txt";
  REQUIRE(run("train --config " + (tmp / "train.cfg").string() +
              " --epochs 1", {}, err3) == 0);
  CHECK(slurp(err3).find("epoch 2") == std::string::npos);
}

TEST_CASE("zero-epoch training serializes the initial model") {
  Scratch tmp;
  auto corpus = synthetic::corpus(25, 6);
  write_corpus_file(tmp / "corpus.jsonl", corpus);
  const auto model_path = tmp / "model.txt";
  REQUIRE(run("train --corpus " + (tmp / "corpus.jsonl").string() +
              " --model " + model_path.string() +
              " --ratios 0.8,0.1,0.1 --epochs 0 --hidden 5 --dim 7 "
              "--seed 44") == 0);

  // rebuild the initial model the same way the command does
  auto split = hazardtag::split_corpus(corpus, {0.8, 0.1, 0.1}, 44);
  auto vocab = hazardtag::build_vocab(split.train, 1);
  auto expected = hazardtag::init_model(
      vocab, hazardtag::TagSet::default13(), 7, 5, 44);
  std::ostringstream expected_text;
  hazardtag::save_model(expected_text, expected);
  CHECK(slurp(model_path) == expected_text.str());
}

TEST_CASE("train usage errors exit with 2") {
  Scratch tmp;
  CHECK(run("train") == 2);  // no corpus/model anywhere
  write_corpus_file(tmp / "corpus.jsonl", synthetic::corpus(5, 5));
  CHECK(run("train --corpus " + (tmp / "corpus.jsonl").string()) == 2);
  CHECK(run("train --corpus " + (tmp / "corpus.jsonl").string() + " --model " +
            (tmp / "m.txt").string() + " --ratios 0.5,0.1,0.1") == 2);
  write_file(tmp / "bad.cfg", "no equals sign here\n");
  CHECK(run("train --config " + (tmp / "bad.cfg").string()) == 2);
  write_file(tmp / "unknown.cfg", "frob = 1\n");
  CHECK(run("train --config " + (tmp / "unknown.cfg").string()) == 2);
}

TEST_CASE("tag, extract and eval compose over a trained model") {
  Scratch tmp;
  write_corpus_file(tmp / "corpus.jsonl", paper_corpus());
  const auto model = tmp / "model.txt";
  REQUIRE(run("train --corpus " + (tmp / "corpus.jsonl").string() +
              " --model " + model.string() +
              " --ratios 1,0,0 --epochs 20 --hidden 12 --dim 12 --seed 3") ==
          0);

  // unannotated input: the paper sentence twice
  write_file(tmp / "input.jsonl",
             R"({"tokens": ["حجز","أكثر","من","قنطار","من","اللحم","الحمراء","في","سطيف"], "doc_id": "s1"})"
             "\n"
             R"({"tokens": ["حجز","أكثر","من","قنطار","من","اللحم","الحمراء","في","سطيف"], "doc_id": "s2"})"
             "\n");

  const auto tags_out = tmp / "tags.txt";
  REQUIRE(run("tag --model " + model.string() + " --in " +
              (tmp / "input.jsonl").string() + " --out " +
              tags_out.string()) == 0);
  REQUIRE(count_lines(tags_out) == 2);
  std::istringstream tag_lines(slurp(tags_out));
  std::string line;
  std::getline(tag_lines, line);
  CHECK(line == "O O O B-QUANT O B-EVT I-EVT O B-LOC");

  const auto events_out = tmp / "events.jsonl";
  REQUIRE(run("extract --model " + model.string() + " --in " +
              (tmp / "input.jsonl").string() + " --out " +
              events_out.string()) == 0);
  REQUIRE(count_lines(events_out) == 2);
  std::istringstream event_lines(slurp(events_out));
  std::getline(event_lines, line);
  auto ev = ordered_json::parse(line);
  CHECK(ev["quantity"] == "قنطار");
  CHECK(ev["hazard_type"] == "اللحم الحمراء");
  CHECK(ev["location"] == "سطيف");
  CHECK(ev["organization"].is_null());
  CHECK(ev["doc_id"] == "s1");

  // eval against itself: everything 1.0
  write_corpus_file(tmp / "gold.jsonl",
                    {paper_corpus()[0], paper_corpus()[0]});
  const auto report_out = tmp / "metrics.json";
  const auto table_out = tmp / "table.txt";
  REQUIRE(run("eval --gold " + (tmp / "gold.jsonl").string() + " --pred " +
              tags_out.string() + " --out " + report_out.string(),
              table_out) == 0);
  auto report = ordered_json::parse(slurp(report_out));
  CHECK(report["token_accuracy"] == 1.0);
  CHECK(report["entity"]["f1"] == 1.0);
  CHECK(slurp(table_out).find("token accuracy") != std::string::npos);

  // inspect prints the dimensions
  const auto inspect_out = tmp / "inspect.txt";
  REQUIRE(run("inspect --model " + model.string() + " --corpus " +
              (tmp / "corpus.jsonl").string() + " --top 3",
              inspect_out) == 0);
  const std::string inspected = slurp(inspect_out);
  CHECK(inspected.find("hidden 12") != std::string::npos);
  CHECK(inspected.find("tagset O B-PERS") != std::string::npos);
  CHECK(inspected.find("chi2 ") != std::string::npos);
}

TEST_CASE("tag distinguishes model errors from usage errors") {
  Scratch tmp;
  write_file(tmp / "junk.txt", "HAZARDTAG 999\n");
  write_file(tmp / "input.jsonl", R"({"tokens": ["a"]})" "\n");
  CHECK(run("tag --model " + (tmp / "junk.txt").string() + " --in " +
            (tmp / "input.jsonl").string() + " --out " +
            (tmp / "o.txt").string()) == 1);
  CHECK(run("tag --model " + (tmp / "junk.txt").string()) == 2);
}

TEST_CASE("eval rejects misaligned files at runtime") {
  Scratch tmp;
  write_corpus_file(tmp / "gold.jsonl", synthetic::corpus(3, 1));
  write_file(tmp / "pred.txt", "O B-QUANT B-EVT I-EVT O B-LOC\n");  // 1 of 3
  CHECK(run("eval --gold " + (tmp / "gold.jsonl").string() + " --pred " +
            (tmp / "pred.txt").string()) == 1);
}
