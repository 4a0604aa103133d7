#ifndef HAZARDTAG_TAGGER_HPP
#define HAZARDTAG_TAGGER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hazardtag/corpus.hpp"
#include "hazardtag/features.hpp"
#include "hazardtag/matrix.hpp"
#include "hazardtag/prng.hpp"

// BiLSTM + linear-chain CRF sequence tagger: encoder, emission projection,
// CRF partition / scoring / Viterbi, exact analytic gradients and the plain
// gradient-descent training loop.

namespace hazardtag {

// Masked transitions use a large negative constant instead of an IEEE
// infinity so log-space arithmetic never produces NaN.
inline constexpr double kImpossible = -1e30;

// IOB tag inventory. "O" sits at index 0; the standard 13-tag scheme gives
// every entity class a B- and an I- tag.
class TagSet {
 public:
  static TagSet default13() {
    std::vector<std::string> tags{"O"};
    for (auto cls : kEntityClasses) {
      tags.push_back("B-" + std::string(cls));
      tags.push_back("I-" + std::string(cls));
    }
    return from_list(std::move(tags));
  }

  static TagSet from_list(std::vector<std::string> tags) {
    if (tags.empty() || tags[0] != "O")
      throw std::invalid_argument("TagSet: first tag must be O");
    TagSet t;
    t.tags_ = std::move(tags);
    for (std::size_t i = 0; i < t.tags_.size(); ++i)
      if (!t.index_.emplace(t.tags_[i], static_cast<int>(i)).second)
        throw std::invalid_argument("TagSet: duplicate tag " + t.tags_[i]);
    return t;
  }

  int find(const std::string& tag) const {
    auto it = index_.find(tag);
    return it == index_.end() ? -1 : it->second;
  }

  const std::string& tag(std::size_t i) const { return tags_.at(i); }
  const std::vector<std::string>& tags() const { return tags_; }
  std::size_t size() const { return tags_.size(); }

  bool operator==(const TagSet& o) const { return tags_ == o.tags_; }

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> index_;
};

struct GateParams {
  Matrix w;  // h x d, applied to the input
  Matrix u;  // h x h, applied to the previous state
  Vec b;     // h

  GateParams() = default;
  GateParams(std::size_t h, std::size_t d) : w(h, d), u(h, h), b(h, 0.0) {}
};

struct LstmParams {
  GateParams input, forget, output, candidate;

  LstmParams() = default;
  LstmParams(std::size_t h, std::size_t d)
      : input(h, d), forget(h, d), output(h, d), candidate(h, d) {}

  std::size_t hidden() const { return input.w.rows; }
  std::size_t dim() const { return input.w.cols; }

  std::array<GateParams*, 4> gates() {
    return {&input, &forget, &output, &candidate};
  }
  std::array<const GateParams*, 4> gates() const {
    return {&input, &forget, &output, &candidate};
  }
};

struct CrfParams {
  Matrix transitions;  // [from][to]
  Vec start;
  Vec end;

  CrfParams() = default;
  explicit CrfParams(std::size_t t)
      : transitions(t, t), start(t, 0.0), end(t, 0.0) {}

  std::size_t size() const { return start.size(); }
};

struct TaggerModel {
  Vocabulary vocab;
  TagSet tags;
  EmbeddingMatrix embeddings;  // V x d
  LstmParams fwd, bwd;
  Matrix proj_w;  // T x 2h
  Vec proj_b;     // T
  CrfParams crf;

  std::size_t dim() const { return embeddings.cols; }
  std::size_t hidden() const { return fwd.hidden(); }
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t hidden = 64;
  std::size_t dim = 100;
  double clip = 5.0;  // L2 global-norm threshold
  bool shuffle = true;
};

inline void validate(const TrainConfig& c) {
  if (c.learning_rate <= 0.0)
    throw std::invalid_argument("config: learning_rate must be > 0");
  if (c.clip <= 0.0) throw std::invalid_argument("config: clip must be > 0");
  if (c.hidden < 1 || c.dim < 1)
    throw std::invalid_argument("config: hidden and dim must be >= 1");
}

// All matrices start uniform in +-sqrt(6/(fan_in+fan_out)), vectors at zero
// except the forget-gate bias at 1.0. One PRNG stream, fixed order:
// embeddings, forward LSTM (input, forget, output, candidate; w then u),
// backward LSTM, projection, CRF transitions.
inline TaggerModel init_model(Vocabulary vocab, TagSet tags,
                              std::size_t embedding_dim, std::size_t hidden,
                              std::uint64_t seed) {
  const std::size_t v = vocab.size();
  const std::size_t d = embedding_dim;
  const std::size_t h = hidden;
  const std::size_t t = tags.size();

  TaggerModel m;
  m.vocab = std::move(vocab);
  m.tags = std::move(tags);

  Lcg64 rng(seed);
  auto fill = [&rng](Matrix& mat, std::size_t fan_in, std::size_t fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& x : mat.data) x = rng.uniform(-s, s);
  };

  m.embeddings = Matrix(v, d);
  fill(m.embeddings, v, d);
  for (auto& x : m.embeddings.row(Vocabulary::kPad)) x = 0.0;

  for (LstmParams* lstm : {&m.fwd, &m.bwd}) {
    *lstm = LstmParams(h, d);
    for (GateParams* gate : lstm->gates()) {
      fill(gate->w, d, h);
      fill(gate->u, h, h);
    }
    lstm->forget.b.assign(h, 1.0);
  }

  m.proj_w = Matrix(t, 2 * h);
  fill(m.proj_w, 2 * h, t);
  m.proj_b.assign(t, 0.0);

  m.crf = CrfParams(t);
  fill(m.crf.transitions, t, t);
  return m;
}

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double log_sum_exp(std::span<const double> xs) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace detail

struct LstmStepState {
  Vec i, f, o, g, c, tanh_c, h;
};

namespace detail {

inline LstmStepState lstm_step_full(std::span<const double> x,
                                    std::span<const double> h_prev,
                                    std::span<const double> c_prev,
                                    const LstmParams& p) {
  const std::size_t h = p.hidden();
  if (x.size() != p.dim() || h_prev.size() != h || c_prev.size() != h)
    throw std::invalid_argument("lstm_step: shape mismatch");

  LstmStepState s;
  auto gate = [&](const GateParams& gp) {
    Vec a = matvec(gp.w, x);
    Vec rec = matvec(gp.u, h_prev);
    for (std::size_t k = 0; k < h; ++k) a[k] += rec[k] + gp.b[k];
    return a;
  };
  s.i = gate(p.input);
  s.f = gate(p.forget);
  s.o = gate(p.output);
  s.g = gate(p.candidate);
  for (std::size_t k = 0; k < h; ++k) {
    s.i[k] = sigmoid(s.i[k]);
    s.f[k] = sigmoid(s.f[k]);
    s.o[k] = sigmoid(s.o[k]);
    s.g[k] = std::tanh(s.g[k]);
  }
  s.c.resize(h);
  s.tanh_c.resize(h);
  s.h.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
    s.tanh_c[k] = std::tanh(s.c[k]);
    s.h[k] = s.o[k] * s.tanh_c[k];
  }
  return s;
}

}  // namespace detail

// One LSTM cell update: i,f,o = sigma(Wx + Uh + b), g = tanh(...),
// c = f*c_prev + i*g, h = o*tanh(c). Returns (h, c).
inline std::pair<Vec, Vec> lstm_step(std::span<const double> x,
                                     std::span<const double> h_prev,
                                     std::span<const double> c_prev,
                                     const LstmParams& p) {
  auto s = detail::lstm_step_full(x, h_prev, c_prev, p);
  return {std::move(s.h), std::move(s.c)};
}

namespace detail {

// Runs the cell over xs in order, initial states zero, keeping per-step
// activations for backprop.
inline std::vector<LstmStepState> lstm_forward(const std::vector<Vec>& xs,
                                               const LstmParams& p) {
  std::vector<LstmStepState> trace;
  trace.reserve(xs.size());
  Vec h(p.hidden(), 0.0), c(p.hidden(), 0.0);
  for (const auto& x : xs) {
    trace.push_back(lstm_step_full(x, h, c, p));
    h = trace.back().h;
    c = trace.back().c;
  }
  return trace;
}

}  // namespace detail

// Row t is [forward state at t ; backward state at t], both passes starting
// from zero states.
inline Matrix bilstm_encode(const Matrix& embedded, const LstmParams& fwd,
                            const LstmParams& bwd) {
  const std::size_t len = embedded.rows;
  if (len == 0) throw std::invalid_argument("bilstm_encode: empty input");
  const std::size_t h = fwd.hidden();

  std::vector<Vec> xs(len), rev(len);
  for (std::size_t t = 0; t < len; ++t) {
    auto row = embedded.row(t);
    xs[t].assign(row.begin(), row.end());
    rev[len - 1 - t] = xs[t];
  }
  auto ftrace = detail::lstm_forward(xs, fwd);
  auto btrace = detail::lstm_forward(rev, bwd);

  Matrix enc(len, 2 * h);
  for (std::size_t t = 0; t < len; ++t) {
    auto row = enc.row(t);
    std::copy(ftrace[t].h.begin(), ftrace[t].h.end(), row.begin());
    const auto& back = btrace[len - 1 - t].h;
    std::copy(back.begin(), back.end(), row.begin() + h);
  }
  return enc;
}

inline Matrix emission_scores(const Matrix& encoded, const Matrix& w,
                              const Vec& b) {
  if (w.cols != encoded.cols || w.rows != b.size())
    throw std::invalid_argument("emission_scores: shape mismatch");
  Matrix em(encoded.rows, w.rows);
  for (std::size_t t = 0; t < encoded.rows; ++t) {
    Vec y = matvec(w, encoded.row(t));
    for (std::size_t k = 0; k < y.size(); ++k)
      em.at(t, k) = y[k] + b[k];
  }
  return em;
}

namespace detail {

// alpha[t][j] = em[t][j] + LSE_i(alpha[t-1][i] + trans[i][j]),
// alpha[0][j] = start[j] + em[0][j].
inline Matrix crf_forward(const Matrix& em, const CrfParams& crf) {
  const std::size_t len = em.rows, t = crf.size();
  Matrix alpha(len, t);
  for (std::size_t j = 0; j < t; ++j)
    alpha.at(0, j) = crf.start[j] + em.at(0, j);
  Vec scratch(t);
  for (std::size_t step = 1; step < len; ++step) {
    for (std::size_t j = 0; j < t; ++j) {
      for (std::size_t i = 0; i < t; ++i)
        scratch[i] = alpha.at(step - 1, i) + crf.transitions.at(i, j);
      alpha.at(step, j) = em.at(step, j) + log_sum_exp(scratch);
    }
  }
  return alpha;
}

// beta[L-1][j] = end[j]; beta[t][i] = LSE_j(trans[i][j] + em[t+1][j] +
// beta[t+1][j]).
inline Matrix crf_backward(const Matrix& em, const CrfParams& crf) {
  const std::size_t len = em.rows, t = crf.size();
  Matrix beta(len, t);
  for (std::size_t j = 0; j < t; ++j) beta.at(len - 1, j) = crf.end[j];
  Vec scratch(t);
  for (std::size_t step = len - 1; step > 0; --step) {
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j)
        scratch[j] = crf.transitions.at(i, j) + em.at(step, j) +
                     beta.at(step, j);
      beta.at(step - 1, i) = log_sum_exp(scratch);
    }
  }
  return beta;
}

}  // namespace detail

// log of the sum over all T^L tag sequences of exp(score), by the forward
// recursion in log space.
inline double crf_log_partition(const Matrix& em, const CrfParams& crf) {
  if (em.rows == 0) throw std::invalid_argument("crf_log_partition: L >= 1");
  if (em.cols != crf.size())
    throw std::invalid_argument("crf_log_partition: shape mismatch");
  Matrix alpha = detail::crf_forward(em, crf);
  Vec last(crf.size());
  for (std::size_t j = 0; j < crf.size(); ++j)
    last[j] = alpha.at(em.rows - 1, j) + crf.end[j];
  return detail::log_sum_exp(last);
}

// score(y) = start[y0] + sum_t em[t][yt] + sum_t trans[y(t-1)][yt] + end[yL].
inline double crf_sequence_score(const Matrix& em, const CrfParams& crf,
                                 const std::vector<int>& tags) {
  if (tags.size() != em.rows)
    throw std::invalid_argument("crf_sequence_score: length mismatch");
  for (int y : tags)
    if (y < 0 || static_cast<std::size_t>(y) >= crf.size())
      throw std::out_of_range("crf_sequence_score: tag index out of range");
  double score = crf.start[tags[0]] + em.at(0, tags[0]);
  for (std::size_t t = 1; t < tags.size(); ++t)
    score += crf.transitions.at(tags[t - 1], tags[t]) + em.at(t, tags[t]);
  return score + crf.end[tags.back()];
}

struct DecodeResult {
  std::vector<int> path;
  double score = 0.0;
};

// Max-score path; ties resolved toward the lowest tag index.
inline DecodeResult viterbi_decode(const Matrix& em, const CrfParams& crf) {
  if (em.rows == 0) throw std::invalid_argument("viterbi_decode: L >= 1");
  if (em.cols != crf.size())
    throw std::invalid_argument("viterbi_decode: shape mismatch");
  const std::size_t len = em.rows, t = crf.size();

  Matrix delta(len, t);
  std::vector<std::vector<int>> from(len, std::vector<int>(t, 0));
  for (std::size_t j = 0; j < t; ++j)
    delta.at(0, j) = crf.start[j] + em.at(0, j);
  for (std::size_t step = 1; step < len; ++step) {
    for (std::size_t j = 0; j < t; ++j) {
      double best = delta.at(step - 1, 0) + crf.transitions.at(0, j);
      int best_i = 0;
      for (std::size_t i = 1; i < t; ++i) {
        const double s = delta.at(step - 1, i) + crf.transitions.at(i, j);
        if (s > best) {
          best = s;
          best_i = static_cast<int>(i);
        }
      }
      delta.at(step, j) = best + em.at(step, j);
      from[step][j] = best_i;
    }
  }

  double best = delta.at(len - 1, 0) + crf.end[0];
  int best_j = 0;
  for (std::size_t j = 1; j < t; ++j) {
    const double s = delta.at(len - 1, j) + crf.end[j];
    if (s > best) {
      best = s;
      best_j = static_cast<int>(j);
    }
  }

  DecodeResult r;
  r.score = best;
  r.path.resize(len);
  r.path[len - 1] = best_j;
  for (std::size_t step = len - 1; step > 0; --step)
    r.path[step - 1] = from[step][r.path[step]];
  return r;
}

// -log p(gold | sentence) = log Z - score(gold). Always >= 0.
inline double nll_loss(const Matrix& em, const CrfParams& crf,
                       const std::vector<int>& gold) {
  return crf_log_partition(em, crf) - crf_sequence_score(em, crf, gold);
}

// Invalid IOB moves (start -> I-X; i -> I-X unless i is B-X or I-X) get the
// impossible sentinel. Applied at inference only; training stays
// unconstrained.
inline CrfParams inference_mask(const CrfParams& crf, const TagSet& tags) {
  CrfParams masked = crf;
  for (std::size_t j = 0; j < tags.size(); ++j) {
    const std::string& tag = tags.tag(j);
    if (tag.size() < 3 || tag[0] != 'I' || tag[1] != '-') continue;
    const std::string cls = tag.substr(2);
    masked.start[j] = kImpossible;
    const int b = tags.find("B-" + cls);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (static_cast<int>(i) == b || i == j) continue;
      masked.transitions.at(i, j) = kImpossible;
    }
  }
  return masked;
}

struct Gradients {
  Matrix embeddings;
  LstmParams fwd, bwd;
  Matrix proj_w;
  Vec proj_b;
  Matrix transitions;
  Vec start, end;

  static Gradients zeros_like(const TaggerModel& m) {
    Gradients g;
    g.embeddings = Matrix(m.embeddings.rows, m.embeddings.cols);
    g.fwd = LstmParams(m.hidden(), m.dim());
    g.bwd = LstmParams(m.hidden(), m.dim());
    g.proj_w = Matrix(m.proj_w.rows, m.proj_w.cols);
    g.proj_b.assign(m.proj_b.size(), 0.0);
    g.transitions = Matrix(m.crf.transitions.rows, m.crf.transitions.cols);
    g.start.assign(m.crf.start.size(), 0.0);
    g.end.assign(m.crf.end.size(), 0.0);
    return g;
  }
};

namespace detail {

template <typename Grads, typename F>
void for_each_grad_array(Grads& g, F&& f) {
  f(g.embeddings.data);
  for (auto* lstm : {&g.fwd, &g.bwd})
    for (auto* gate : lstm->gates()) {
      f(gate->w.data);
      f(gate->u.data);
      f(gate->b);
    }
  f(g.proj_w.data);
  f(g.proj_b);
  f(g.transitions.data);
  f(g.start);
  f(g.end);
}

// Pairs every trainable array of the model with its slot in a Gradients
// bundle, in one fixed order.
template <typename Model, typename Grads, typename F>
void visit_params(Model& m, Grads& g, F&& f) {
  f(m.embeddings.data, g.embeddings.data);
  auto visit_lstm = [&](auto& lp, auto& lg) {
    auto pg = lp.gates();
    auto gg = lg.gates();
    for (std::size_t k = 0; k < 4; ++k) {
      f(pg[k]->w.data, gg[k]->w.data);
      f(pg[k]->u.data, gg[k]->u.data);
      f(pg[k]->b, gg[k]->b);
    }
  };
  visit_lstm(m.fwd, g.fwd);
  visit_lstm(m.bwd, g.bwd);
  f(m.proj_w.data, g.proj_w.data);
  f(m.proj_b, g.proj_b);
  f(m.crf.transitions.data, g.transitions.data);
  f(m.crf.start, g.start);
  f(m.crf.end, g.end);
}

// BPTT through one direction. xs/trace/d_h are in that direction's step
// order; gate gradients accumulate into grads, input gradients into dxs.
inline void lstm_backward(const std::vector<Vec>& xs,
                          const std::vector<LstmStepState>& trace,
                          const LstmParams& p,
                          const std::vector<Vec>& d_h_out, LstmParams& grads,
                          std::vector<Vec>& dxs) {
  const std::size_t len = xs.size(), h = p.hidden();
  const Vec zero(h, 0.0);
  Vec dh_carry(h, 0.0), dc_carry(h, 0.0);
  Vec dh(h), dc(h), da_i(h), da_f(h), da_o(h), da_g(h);
  for (std::size_t s = len; s-- > 0;) {
    const auto& st = trace[s];
    const Vec& h_prev = s > 0 ? trace[s - 1].h : zero;
    const Vec& c_prev = s > 0 ? trace[s - 1].c : zero;
    for (std::size_t k = 0; k < h; ++k) {
      dh[k] = d_h_out[s][k] + dh_carry[k];
      const double d_o = dh[k] * st.tanh_c[k];
      dc[k] = dh[k] * st.o[k] * (1.0 - st.tanh_c[k] * st.tanh_c[k]) +
              dc_carry[k];
      const double d_f = dc[k] * c_prev[k];
      const double d_i = dc[k] * st.g[k];
      const double d_g = dc[k] * st.i[k];
      da_o[k] = d_o * st.o[k] * (1.0 - st.o[k]);
      da_f[k] = d_f * st.f[k] * (1.0 - st.f[k]);
      da_i[k] = d_i * st.i[k] * (1.0 - st.i[k]);
      da_g[k] = d_g * (1.0 - st.g[k] * st.g[k]);
      dc_carry[k] = dc[k] * st.f[k];
    }
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    const std::array<std::pair<const Vec*, GateParams*>, 4> parts = {{
        {&da_i, &grads.input},
        {&da_f, &grads.forget},
        {&da_o, &grads.output},
        {&da_g, &grads.candidate},
    }};
    const std::array<const GateParams*, 4> params = {
        &p.input, &p.forget, &p.output, &p.candidate};
    for (std::size_t k = 0; k < 4; ++k) {
      const Vec& da = *parts[k].first;
      GateParams& gg = *parts[k].second;
      outer_add(gg.w, da, xs[s]);
      outer_add(gg.u, da, h_prev);
      for (std::size_t q = 0; q < h; ++q) gg.b[q] += da[q];
      matvec_transposed_add(params[k]->w, da, dxs[s]);
      matvec_transposed_add(params[k]->u, da, dh_carry);
    }
  }
}

}  // namespace detail

// Exact gradient of nll_loss for one sentence. CRF gradients come from
// forward-backward marginals; the rest is backpropagation through the
// projection, both LSTM passes and the embedding lookup.
inline std::pair<double, Gradients> compute_gradients(
    const TaggerModel& model, const std::vector<int>& token_ids,
    const std::vector<int>& gold_tags) {
  const std::size_t len = token_ids.size();
  if (len == 0) throw std::invalid_argument("compute_gradients: empty input");
  if (gold_tags.size() != len)
    throw std::invalid_argument("compute_gradients: length mismatch");
  const std::size_t h = model.hidden(), t = model.tags.size();

  std::vector<Vec> xs(len), rev(len);
  for (std::size_t s = 0; s < len; ++s) {
    auto row = model.embeddings.row(token_ids[s]);
    xs[s].assign(row.begin(), row.end());
    rev[len - 1 - s] = xs[s];
  }
  auto ftrace = detail::lstm_forward(xs, model.fwd);
  auto btrace = detail::lstm_forward(rev, model.bwd);

  Matrix enc(len, 2 * h);
  for (std::size_t s = 0; s < len; ++s) {
    auto row = enc.row(s);
    std::copy(ftrace[s].h.begin(), ftrace[s].h.end(), row.begin());
    const auto& back = btrace[len - 1 - s].h;
    std::copy(back.begin(), back.end(), row.begin() + h);
  }
  Matrix em = emission_scores(enc, model.proj_w, model.proj_b);

  Matrix alpha = detail::crf_forward(em, model.crf);
  Matrix beta = detail::crf_backward(em, model.crf);
  Vec last(t);
  for (std::size_t j = 0; j < t; ++j)
    last[j] = alpha.at(len - 1, j) + model.crf.end[j];
  const double log_z = detail::log_sum_exp(last);
  const double loss = log_z - crf_sequence_score(em, model.crf, gold_tags);

  Gradients g = Gradients::zeros_like(model);

  // d emissions = unary marginals - gold one-hots
  Matrix d_em(len, t);
  for (std::size_t s = 0; s < len; ++s) {
    for (std::size_t j = 0; j < t; ++j)
      d_em.at(s, j) = std::exp(alpha.at(s, j) + beta.at(s, j) - log_z);
    d_em.at(s, gold_tags[s]) -= 1.0;
  }
  for (std::size_t j = 0; j < t; ++j) {
    g.start[j] = std::exp(alpha.at(0, j) + beta.at(0, j) - log_z);
    g.end[j] = std::exp(alpha.at(len - 1, j) + beta.at(len - 1, j) - log_z);
  }
  g.start[gold_tags[0]] -= 1.0;
  g.end[gold_tags[len - 1]] -= 1.0;
  for (std::size_t s = 1; s < len; ++s) {
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < t; ++j)
        g.transitions.at(i, j) +=
            std::exp(alpha.at(s - 1, i) + model.crf.transitions.at(i, j) +
                     em.at(s, j) + beta.at(s, j) - log_z);
    g.transitions.at(gold_tags[s - 1], gold_tags[s]) -= 1.0;
  }

  // projection and encoder gradients
  std::vector<Vec> d_enc(len, Vec(2 * h, 0.0));
  for (std::size_t s = 0; s < len; ++s) {
    outer_add(g.proj_w, d_em.row(s), enc.row(s));
    for (std::size_t j = 0; j < t; ++j) g.proj_b[j] += d_em.at(s, j);
    matvec_transposed_add(model.proj_w, d_em.row(s), d_enc[s]);
  }

  std::vector<Vec> d_h_fwd(len, Vec(h)), d_h_bwd(len, Vec(h));
  for (std::size_t s = 0; s < len; ++s) {
    std::copy(d_enc[s].begin(), d_enc[s].begin() + h, d_h_fwd[s].begin());
    std::copy(d_enc[s].begin() + h, d_enc[s].end(),
              d_h_bwd[len - 1 - s].begin());
  }

  std::vector<Vec> dxs_fwd(len, Vec(model.dim(), 0.0));
  std::vector<Vec> dxs_bwd(len, Vec(model.dim(), 0.0));
  detail::lstm_backward(xs, ftrace, model.fwd, d_h_fwd, g.fwd, dxs_fwd);
  detail::lstm_backward(rev, btrace, model.bwd, d_h_bwd, g.bwd, dxs_bwd);

  for (std::size_t s = 0; s < len; ++s) {
    auto row = g.embeddings.row(token_ids[s]);
    for (std::size_t k = 0; k < model.dim(); ++k)
      row[k] += dxs_fwd[s][k] + dxs_bwd[len - 1 - s][k];
  }
  return {loss, std::move(g)};
}

inline double global_norm(const Gradients& g) {
  double acc = 0.0;
  detail::for_each_grad_array(g, [&acc](const auto& grad) {
    for (double x : grad) acc += x * x;
  });
  return std::sqrt(acc);
}

inline void sgd_step(TaggerModel& model, Gradients& g, double lr,
                     double clip) {
  double scale = 1.0;
  const double norm = global_norm(g);
  if (norm > clip) scale = clip / norm;
  const double step = lr * scale;
  detail::visit_params(model, g, [step](auto& param, auto& grad) {
    for (std::size_t k = 0; k < param.size(); ++k)
      param[k] -= step * grad[k];
  });
}

// Token ids -> decoded tag indices under the inference mask.
inline std::vector<int> decode_ids(const TaggerModel& model,
                                   const std::vector<int>& token_ids) {
  const std::size_t len = token_ids.size();
  Matrix embedded(len, model.dim());
  for (std::size_t s = 0; s < len; ++s) {
    auto src = model.embeddings.row(token_ids[s]);
    std::copy(src.begin(), src.end(), embedded.row(s).begin());
  }
  Matrix enc = bilstm_encode(embedded, model.fwd, model.bwd);
  Matrix em = emission_scores(enc, model.proj_w, model.proj_b);
  return viterbi_decode(em, inference_mask(model.crf, model.tags)).path;
}

inline std::vector<std::string> tag(const TaggerModel& model,
                                    const std::vector<std::string>& tokens) {
  if (tokens.empty()) return {};
  std::vector<int> ids(tokens.size());
  for (std::size_t s = 0; s < tokens.size(); ++s)
    ids[s] = model.vocab.lookup(tokens[s]);
  std::vector<int> path = decode_ids(model, ids);
  std::vector<std::string> out(path.size());
  for (std::size_t s = 0; s < path.size(); ++s)
    out[s] = model.tags.tag(path[s]);
  return out;
}

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;

  bool operator==(const EpochLog&) const = default;
};

struct TrainResult {
  TaggerModel model;
  std::vector<EpochLog> log;
};

namespace detail {

inline std::vector<int> tag_indices(const AnnotatedSentence& s,
                                    const TagSet& tags) {
  std::vector<int> out(s.tags.size());
  for (std::size_t k = 0; k < s.tags.size(); ++k) {
    out[k] = tags.find(s.tags[k]);
    if (out[k] < 0)
      throw std::invalid_argument("unknown tag '" + s.tags[k] + "'");
  }
  return out;
}

}  // namespace detail

// Per-sentence gradient descent with global-norm clipping. Deterministic
// given the seed: one shuffle stream drives every epoch.
inline TrainResult train(const std::vector<AnnotatedSentence>& train_set,
                         const std::vector<AnnotatedSentence>& dev_set,
                         const TrainConfig& config, TaggerModel model) {
  validate(config);
  if (config.epochs > 0 && train_set.empty())
    throw std::invalid_argument("train: empty training set");

  std::vector<std::vector<int>> token_ids(train_set.size());
  std::vector<std::vector<int>> gold(train_set.size());
  for (std::size_t n = 0; n < train_set.size(); ++n) {
    token_ids[n].resize(train_set[n].tokens.size());
    for (std::size_t k = 0; k < train_set[n].tokens.size(); ++k)
      token_ids[n][k] = model.vocab.lookup(train_set[n].tokens[k]);
    gold[n] = detail::tag_indices(train_set[n], model.tags);
  }
  std::vector<std::vector<int>> dev_ids(dev_set.size());
  std::vector<std::vector<int>> dev_gold(dev_set.size());
  for (std::size_t n = 0; n < dev_set.size(); ++n) {
    dev_ids[n].resize(dev_set[n].tokens.size());
    for (std::size_t k = 0; k < dev_set[n].tokens.size(); ++k)
      dev_ids[n][k] = model.vocab.lookup(dev_set[n].tokens[k]);
    dev_gold[n] = detail::tag_indices(dev_set[n], model.tags);
  }

  TrainResult result;
  Lcg64 shuffle_rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      auto [loss, grads] = compute_gradients(model, token_ids[idx], gold[idx]);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at sentence " +
                                 std::to_string(idx));
      loss_sum += loss;
      sgd_step(model, grads, config.learning_rate, config.clip);
    }

    std::size_t correct = 0, total = 0;
    for (std::size_t n = 0; n < dev_set.size(); ++n) {
      auto path = decode_ids(model, dev_ids[n]);
      for (std::size_t k = 0; k < path.size(); ++k) {
        ++total;
        if (path[k] == dev_gold[n][k]) ++correct;
      }
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    entry.dev_accuracy =
        total == 0 ? 0.0
                   : static_cast<double>(correct) / static_cast<double>(total);
    result.log.push_back(entry);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace hazardtag

#endif  // HAZARDTAG_TAGGER_HPP
