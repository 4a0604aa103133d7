#ifndef HAZARDTAG_FEATURES_HPP
#define HAZARDTAG_FEATURES_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hazardtag/corpus.hpp"
#include "hazardtag/matrix.hpp"
#include "hazardtag/prng.hpp"

// Vocabulary, count/one-hot vectors, chi-square feature ranking, and the
// embedding table with its text-file loader.

namespace hazardtag {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary() {
    add("<PAD>");
    add("<UNK>");
  }

  int add(const std::string& token) {
    auto [it, inserted] =
        index_.emplace(token, static_cast<int>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  // UNK fallback for out-of-vocabulary tokens.
  int lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const {
    return index_.count(token) != 0;
  }

  const std::string& token(int id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Tokens with corpus frequency >= min_freq, indexed after PAD/UNK in
// descending-frequency order, ties by token (bytewise ascending).
inline Vocabulary build_vocab(const std::vector<AnnotatedSentence>& sentences,
                              std::size_t min_freq) {
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq >= 1");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, n] : freq)
    if (n >= min_freq) kept.emplace_back(token, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (auto& [token, n] : kept) v.add(token);
  return v;
}

inline Vec one_hot(std::size_t index, std::size_t size) {
  if (index >= size) throw std::out_of_range("one_hot: index out of range");
  Vec v(size, 0.0);
  v[index] = 1.0;
  return v;
}

// Sparse token counts over the vocabulary; OOV tokens accumulate on UNK.
inline std::map<int, int> tf_vector(const std::vector<std::string>& tokens,
                                    const Vocabulary& vocab) {
  std::map<int, int> counts;
  for (const auto& t : tokens) ++counts[vocab.lookup(t)];
  return counts;
}

struct FeatureScore {
  std::string id;
  double chi2 = 0.0;

  bool operator==(const FeatureScore&) const = default;
};

// 2x2 chi-square: N (AD - BC)^2 / ((A+B)(C+D)(A+C)(B+D)), zero when any
// margin vanishes.
inline double chi_square(long long a, long long b, long long c, long long d) {
  const double n = static_cast<double>(a + b + c + d);
  const double m1 = static_cast<double>(a + b);
  const double m2 = static_cast<double>(c + d);
  const double m3 = static_cast<double>(a + c);
  const double m4 = static_cast<double>(b + d);
  if (m1 == 0.0 || m2 == 0.0 || m3 == 0.0 || m4 == 0.0) return 0.0;
  const double det = static_cast<double>(a) * static_cast<double>(d) -
                     static_cast<double>(b) * static_cast<double>(c);
  return n * det * det / (m1 * m2 * m3 * m4);
}

// Ranks features by chi-square against a binary sentence class. presence
// holds one indicator vector per feature, aligned with labels.
inline std::vector<FeatureScore> chi_square_select(
    const std::map<std::string, std::vector<bool>>& presence,
    const std::vector<bool>& labels, std::size_t k) {
  std::vector<FeatureScore> scores;
  scores.reserve(presence.size());
  for (const auto& [id, ind] : presence) {
    if (ind.size() != labels.size())
      throw std::invalid_argument(
          "chi_square_select: indicator length mismatch for feature '" + id +
          "'");
    long long a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < ind.size(); ++i) {
      if (ind[i] && labels[i]) ++a;
      else if (ind[i]) ++b;
      else if (labels[i]) ++c;
      else ++d;
    }
    scores.push_back({id, chi_square(a, b, c, d)});
  }
  std::sort(scores.begin(), scores.end(),
            [](const FeatureScore& x, const FeatureScore& y) {
              if (x.chi2 != y.chi2) return x.chi2 > y.chi2;
              return x.id < y.id;
            });
  if (scores.size() > k) scores.resize(k);
  return scores;
}

using EmbeddingMatrix = Matrix;

// Uniform entries in [-scale, scale] from the shared PRNG, generated
// row-major; the PAD row is then forced to zero.
inline EmbeddingMatrix random_init(std::size_t v, std::size_t d,
                                   std::uint64_t seed, double scale) {
  if (v < 2 || d < 1) throw std::invalid_argument("random_init: bad shape");
  EmbeddingMatrix m(v, d);
  Lcg64 rng(seed);
  for (auto& x : m.data) x = rng.uniform(-scale, scale);
  for (auto& x : m.row(Vocabulary::kPad)) x = 0.0;
  return m;
}

// Embeddings file: header "V d", then V lines "token x1 .. xd". Vocabulary
// tokens found in the file keep the file's numbers; everything else (PAD,
// UNK, missing tokens) is filled as in random_init.
inline EmbeddingMatrix load_pretrained(std::istream& in,
                                       const Vocabulary& vocab,
                                       std::size_t expected_dim,
                                       std::uint64_t seed, double scale) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("embeddings: empty file");
  std::istringstream header(line);
  long long file_v = -1, file_d = -1;
  if (!(header >> file_v >> file_d) || file_v < 0 || file_d < 1)
    throw std::runtime_error("embeddings: bad header line");
  if (static_cast<std::size_t>(file_d) != expected_dim)
    throw std::runtime_error(
        "embeddings: file dimension " + std::to_string(file_d) +
        " does not match configured dimension " +
        std::to_string(expected_dim));

  EmbeddingMatrix m = random_init(vocab.size(), expected_dim, seed, scale);
  std::size_t lineno = 1, rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ++rows;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token))
      throw std::runtime_error("embeddings: line " + std::to_string(lineno) +
                               ": missing token");
    Vec values(expected_dim);
    for (std::size_t i = 0; i < expected_dim; ++i) {
      if (!(ss >> values[i]))
        throw std::runtime_error("embeddings: line " +
                                 std::to_string(lineno) +
                                 ": non-numeric or missing value");
    }
    std::string extra;
    if (ss >> extra)
      throw std::runtime_error("embeddings: line " + std::to_string(lineno) +
                               ": too many values");
    if (vocab.contains(token)) {
      auto row = m.row(vocab.lookup(token));
      std::copy(values.begin(), values.end(), row.begin());
    }
  }
  if (rows != static_cast<std::size_t>(file_v))
    throw std::runtime_error("embeddings: header declares " +
                             std::to_string(file_v) + " rows, found " +
                             std::to_string(rows));
  return m;
}

inline EmbeddingMatrix load_pretrained(const std::string& path,
                                       const Vocabulary& vocab,
                                       std::size_t expected_dim,
                                       std::uint64_t seed, double scale) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file: " + path);
  return load_pretrained(in, vocab, expected_dim, seed, scale);
}

// 17 significant digits: parses back to the identical double.
inline void write_real(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out << buf;
}

// Writes the whole table in the embeddings file format (PAD/UNK included,
// so load(save(m)) reproduces m for a matching vocabulary).
inline void save_embeddings(std::ostream& out, const Vocabulary& vocab,
                            const EmbeddingMatrix& m) {
  out << m.rows << ' ' << m.cols << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    out << vocab.token(static_cast<int>(r));
    for (double x : m.row(r)) {
      out << ' ';
      write_real(out, x);
    }
    out << '\n';
  }
}

}  // namespace hazardtag

#endif  // HAZARDTAG_FEATURES_HPP
