#ifndef HAZARDTAG_MODEL_IO_HPP
#define HAZARDTAG_MODEL_IO_HPP

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "hazardtag/features.hpp"
#include "hazardtag/tagger.hpp"

// Versioned text model format. Header "HAZARDTAG 1", then sections TAGSET,
// VOCAB, EMB, LSTM_FWD, LSTM_BWD, PROJ, CRF, each declaring its dimensions.
// Reals are written with 17 significant digits so load(save(m)) restores
// bit-identical parameters.

namespace hazardtag {

namespace detail {

inline void write_matrix_rows(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out << ' ';
      write_real(out, row[c]);
    }
    out << '\n';
  }
}

inline void write_vec(std::ostream& out, const Vec& v) {
  for (std::size_t c = 0; c < v.size(); ++c) {
    if (c) out << ' ';
    write_real(out, v[c]);
  }
  out << '\n';
}

inline void write_lstm(std::ostream& out, const LstmParams& p) {
  for (const GateParams* gate : p.gates()) {
    write_matrix_rows(out, gate->w);
    write_matrix_rows(out, gate->u);
    write_vec(out, gate->b);
  }
}

}  // namespace detail

inline void save_model(std::ostream& out, const TaggerModel& m) {
  const std::size_t t = m.tags.size();
  out << "HAZARDTAG 1\n";
  out << "TAGSET " << t << '\n';
  for (const auto& tag : m.tags.tags()) out << tag << '\n';
  out << "VOCAB " << m.vocab.size() << '\n';
  for (std::size_t i = 0; i < m.vocab.size(); ++i)
    out << m.vocab.token(static_cast<int>(i)) << '\n';
  out << "EMB " << m.embeddings.rows << ' ' << m.embeddings.cols << '\n';
  detail::write_matrix_rows(out, m.embeddings);
  out << "LSTM_FWD " << m.dim() << ' ' << m.hidden() << '\n';
  detail::write_lstm(out, m.fwd);
  out << "LSTM_BWD " << m.dim() << ' ' << m.hidden() << '\n';
  detail::write_lstm(out, m.bwd);
  out << "PROJ " << t << ' ' << 2 * m.hidden() << '\n';
  detail::write_matrix_rows(out, m.proj_w);
  detail::write_vec(out, m.proj_b);
  out << "CRF " << t << '\n';
  detail::write_matrix_rows(out, m.crf.transitions);
  detail::write_vec(out, m.crf.start);
  detail::write_vec(out, m.crf.end);
}

inline void save_model(const std::string& path, const TaggerModel& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  save_model(out, m);
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace detail {

struct ModelReader {
  std::istream& in;
  std::size_t lineno = 0;

  std::string next_line() {
    std::string line;
    if (!std::getline(in, line))
      throw std::runtime_error("model file: unexpected end at line " +
                               std::to_string(lineno + 1));
    ++lineno;
    return line;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("model file: line " + std::to_string(lineno) +
                             ": " + what);
  }

  void expect_section(const std::string& name, std::vector<long long>& dims,
                      std::size_t n_dims) {
    std::istringstream ss(next_line());
    std::string key;
    ss >> key;
    if (key != name) fail("expected section " + name + ", got '" + key + "'");
    dims.assign(n_dims, -1);
    for (auto& d : dims)
      if (!(ss >> d) || d < 0) fail("bad dimensions for " + name);
  }

  void read_reals(std::span<double> out) {
    std::istringstream ss(next_line());
    for (auto& x : out)
      if (!(ss >> x)) fail("expected " + std::to_string(out.size()) +
                           " real values");
    std::string extra;
    if (ss >> extra) fail("trailing data");
  }

  void read_matrix(Matrix& m) {
    for (std::size_t r = 0; r < m.rows; ++r) read_reals(m.row(r));
  }

  void read_lstm(LstmParams& p) {
    for (GateParams* gate : p.gates()) {
      read_matrix(gate->w);
      read_matrix(gate->u);
      read_reals(gate->b);
    }
  }
};

}  // namespace detail

inline TaggerModel load_model(std::istream& in) {
  detail::ModelReader r{in};
  if (r.next_line() != "HAZARDTAG 1")
    r.fail("bad header (expected 'HAZARDTAG 1')");

  std::vector<long long> dims;
  r.expect_section("TAGSET", dims, 1);
  TagSet tags = TagSet::default13();
  if (static_cast<std::size_t>(dims[0]) != tags.size())
    r.fail("unsupported tag set size");
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (r.next_line() != tags.tag(i)) r.fail("unexpected tag list entry");
  }

  r.expect_section("VOCAB", dims, 1);
  const auto v = static_cast<std::size_t>(dims[0]);
  if (v < 2) r.fail("vocabulary must include PAD and UNK");
  Vocabulary vocab;
  for (std::size_t i = 0; i < v; ++i) {
    std::string token = r.next_line();
    if (i == 0 || i == 1) {
      if (token != vocab.token(static_cast<int>(i)))
        r.fail("reserved vocabulary rows must be <PAD> and <UNK>");
      continue;
    }
    if (vocab.add(token) != static_cast<int>(i)) r.fail("duplicate token");
  }

  r.expect_section("EMB", dims, 2);
  if (static_cast<std::size_t>(dims[0]) != v)
    r.fail("EMB row count does not match VOCAB");
  const auto d = static_cast<std::size_t>(dims[1]);
  if (d < 1) r.fail("EMB dimension must be >= 1");

  TaggerModel m;
  m.vocab = std::move(vocab);
  m.tags = std::move(tags);
  m.embeddings = Matrix(v, d);
  r.read_matrix(m.embeddings);

  std::size_t h = 0;
  for (auto [name, target] : {std::pair{"LSTM_FWD", &m.fwd},
                              std::pair{"LSTM_BWD", &m.bwd}}) {
    r.expect_section(name, dims, 2);
    if (static_cast<std::size_t>(dims[0]) != d)
      r.fail(std::string(name) + " input dimension does not match EMB");
    h = static_cast<std::size_t>(dims[1]);
    if (h < 1) r.fail("hidden size must be >= 1");
    *target = LstmParams(h, d);
    r.read_lstm(*target);
  }
  if (m.fwd.hidden() != m.bwd.hidden())
    r.fail("forward/backward hidden sizes differ");

  const std::size_t t = m.tags.size();
  r.expect_section("PROJ", dims, 2);
  if (static_cast<std::size_t>(dims[0]) != t ||
      static_cast<std::size_t>(dims[1]) != 2 * h)
    r.fail("PROJ dimensions do not match tag set and hidden size");
  m.proj_w = Matrix(t, 2 * h);
  r.read_matrix(m.proj_w);
  m.proj_b.assign(t, 0.0);
  r.read_reals(m.proj_b);

  r.expect_section("CRF", dims, 1);
  if (static_cast<std::size_t>(dims[0]) != t)
    r.fail("CRF size does not match tag set");
  m.crf = CrfParams(t);
  r.read_matrix(m.crf.transitions);
  r.read_reals(m.crf.start);
  r.read_reals(m.crf.end);
  return m;
}

inline TaggerModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace hazardtag

#endif  // HAZARDTAG_MODEL_IO_HPP
