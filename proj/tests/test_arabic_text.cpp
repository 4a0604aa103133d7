#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hazardtag/arabic_text.hpp"
#include "hazardtag/prng.hpp"
#include "hazardtag/utf8.hpp"

using namespace hazardtag;

TEST_CASE("normalize strips tashkeel") {
  CHECK(normalize("سَطِيف") == "سطيف");
  CHECK(normalize("مُدُنٌ") == "مدن");
}

TEST_CASE("normalize strips tatweel") {
  CHECK(normalize("ســطيف") == "سطيف");
  CHECK(normalize("ـــ").empty());
}

TEST_CASE("normalize folds alef variants") {
  CHECK(normalize("أكثر") == "اكثر");
  CHECK(normalize("إصابة") == "اصابة");
  CHECK(normalize("آخر") == "اخر");
}

TEST_CASE("normalize leaves unrelated text alone") {
  CHECK(normalize("food") == "food");
  CHECK(normalize("نظافة") == "نظافة");  // ة preserved
}

TEST_CASE("normalize is idempotent on fuzzed input") {
  Lcg64 rng(7);
  const std::vector<char32_t> pool = {
      U'a',    U'z',    U'1',    0x0627, 0x0623, 0x0625, 0x0622, 0x0640,
      0x064E,  0x0650,  0x0652,  0x0644, 0x062D, 0x0645, 0x0629, U' ',
      U'.',    0x061F,  0x0670,  0x0610};
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const std::size_t len = rng.below(30);
    for (std::size_t i = 0; i < len; ++i)
      utf8::append(s, pool[rng.below(pool.size())]);
    const std::string once = normalize(s);
    REQUIRE(normalize(once) == once);
  }
}

TEST_CASE("tokenize splits the worked example into nine tokens") {
  const std::string sentence =
      normalize("حجز أكثر من قنطار من اللحم الحمراء في سطيف");
  auto tokens = tokenize(sentence);
  REQUIRE(tokens.size() == 9);
  CHECK(tokens[0].surface == "حجز");
  CHECK(tokens[3].surface == "قنطار");
  CHECK(tokens[8].surface == "سطيف");
}

TEST_CASE("tokenize handles empty input") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t\n").empty());
}

TEST_CASE("tokenize splits punctuation into single tokens") {
  auto tokens = tokenize("سطيف.");
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].surface == "سطيف");
  CHECK(tokens[1].surface == ".");

  tokens = tokenize("هل؟ نعم!");
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[1].surface == "؟");
  CHECK(tokens[3].surface == "!");
}

TEST_CASE("tokenize keeps digit runs together") {
  auto tokens = tokenize("70 كلغ");
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].surface == "70");

  tokens = tokenize("٢٨كلغ");
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].surface == "٢٨");
  CHECK(tokens[1].surface == "كلغ");
}

TEST_CASE("token offsets address the input text") {
  const std::string text = normalize("ضبط 70 كلغ من اللحم، في سطيف.");
  for (const auto& t : tokenize(text)) {
    REQUIRE(t.end > t.start);
    CHECK(text.substr(t.start, t.end - t.start) == t.surface);
  }
}

TEST_CASE("token stream is stable under re-tokenization") {
  Lcg64 rng(11);
  const std::vector<std::string> words = {"سطيف", "من",  "70",  "لجنة",
                                          "،",    ".",   "!",   "اللحم",
                                          "food", "؟",   "x9y"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    const std::size_t len = rng.below(12);
    for (std::size_t i = 0; i < len; ++i) {
      if (!text.empty()) text += ' ';
      text += words[rng.below(words.size())];
    }
    auto first = tokenize(text);
    std::string joined;
    for (const auto& t : first) {
      if (!joined.empty()) joined += ' ';
      joined += t.surface;
    }
    auto second = tokenize(joined);
    REQUIRE(second.size() == first.size());
    for (std::size_t i = 0; i < first.size(); ++i)
      CHECK(second[i].surface == first[i].surface);
  }
}

TEST_CASE("stem strips the definite article") {
  auto rules = StemRuleTable::defaults();
  CHECK(stem("اللحم", rules) == "لحم");
}

TEST_CASE("stem strips prefix then suffix") {
  auto rules = StemRuleTable::defaults();
  CHECK(stem("النظافة", rules) == "نظاف");
}

TEST_CASE("stem leaves short tokens alone") {
  auto rules = StemRuleTable::defaults();
  CHECK(stem("من", rules) == "من");
  CHECK(stem("في", rules) == "في");
}

TEST_CASE("stem strips the conjunction clitic") {
  auto rules = StemRuleTable::defaults();
  CHECK(stem("والامن", rules) == "امن");  // وال wins over و
}

TEST_CASE("stem output is a substring and respects the length floor") {
  auto rules = StemRuleTable::defaults();
  Lcg64 rng(13);
  const std::vector<char32_t> letters = {0x0627, 0x0644, 0x062D, 0x0645,
                                         0x0646, 0x0638, 0x0629, 0x0648,
                                         0x064A, 0x0641, 0x0628, 0x062A};
  for (int trial = 0; trial < 300; ++trial) {
    std::u32string w;
    const std::size_t len = 1 + rng.below(8);
    for (std::size_t i = 0; i < len; ++i)
      w.push_back(letters[rng.below(letters.size())]);
    const std::string token = utf8::from_u32(w);
    const std::string s = stem(token, rules);
    CHECK(token.find(s) != std::string::npos);
    if (utf8::length(token) >= rules.min_stem_length)
      CHECK(utf8::length(s) >= rules.min_stem_length);
  }
}

TEST_CASE("stem rules load from a file") {
  const auto path = std::filesystem::temp_directory_path() /
                    "hazardtag_stem_rules_test.txt";
  {
    std::ofstream out(path);
    out << "# custom rules\n";
    out << "prefix ال\n";
    out << "suffix ة\n";
    out << "min_stem_length 3\n";
  }
  auto rules = load_stem_rules(path.string());
  CHECK(rules.min_stem_length == 3);
  CHECK(stem("النظافة", rules) == "نظاف");
  CHECK(stem("لحم", rules) == "لحم");
  std::filesystem::remove(path);

  {
    std::ofstream out(path);
    out << "frobnicate x\n";
  }
  CHECK_THROWS_AS(load_stem_rules(path.string()), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("ngrams cover the worked bigram example") {
  const std::vector<std::string> tokens = {"تمكنت", "لجنة", "النظافة",
                                           "والأمن"};
  auto bigrams = ngrams(tokens, 2);
  REQUIRE(bigrams.size() == 3);
  CHECK(std::find(bigrams.begin(), bigrams.end(), "تمكنت لجنة") !=
        bigrams.end());
  CHECK(std::find(bigrams.begin(), bigrams.end(), "النظافة والأمن") !=
        bigrams.end());
  CHECK(ngrams(tokens, 3).size() == 2);
  CHECK(ngrams(tokens, 4).size() == 1);
}

TEST_CASE("unigrams are the tokens themselves") {
  const std::vector<std::string> tokens = {"a", "b", "c"};
  CHECK(ngrams(tokens, 1) == tokens);
}

TEST_CASE("ngrams wider than the input vanish") {
  const std::vector<std::string> tokens = {"a", "b", "c", "d"};
  CHECK(ngrams(tokens, 5).empty());
}

TEST_CASE("ngrams reject n = 0") {
  CHECK_THROWS_AS(ngrams({"a"}, 0), std::invalid_argument);
}

TEST_CASE("ngram count law") {
  Lcg64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = rng.below(51);
    std::vector<std::string> tokens(len, "t");
    const std::size_t n = 1 + rng.below(8);
    const std::size_t expected = len >= n ? len - n + 1 : 0;
    REQUIRE(ngrams(tokens, n).size() == expected);
  }
}

TEST_CASE("sentence splitting") {
  auto parts = split_sentences("الاولى. الثانية؟ الثالثة");
  REQUIRE(parts.size() == 3);
  CHECK(tokenize(parts[0]).size() == 2);  // word + period
  CHECK(tokenize(parts[2]).size() == 1);

  CHECK(split_sentences("").empty());
  CHECK(split_sentences("  \n \n").empty());
  CHECK(split_sentences("سطر اول\nسطر ثان").size() == 2);
}
