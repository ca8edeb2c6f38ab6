#include "pairdisc/decoder.hpp"

#include <cmath>

namespace pairdisc {

void add_decoder_params(ParameterStore& store, Index vocab, Index embed, Index hidden) {
  store.add("dec.embed", {vocab, embed});
  store.add("dec.lstm.Wx", {embed, 4 * hidden});
  store.add("dec.lstm.Wh", {hidden, 4 * hidden});
  store.add("dec.lstm.b", {4 * hidden});
  store.add("dec.out.W", {hidden, vocab});
  store.add("dec.out.b", {vocab});
  if (embed != hidden) store.add("dec.fproj", {hidden, embed});
}

namespace {

constexpr double kLogFloor = 1e-12;

RowVecd project_f(const ParameterStore& store, const RowVecd& f) {
  if (store.has("dec.fproj")) return f * store.value("dec.fproj").mat();
  return f;
}

// Decoder LSTM input rows: [f, embed(START), embed(y_1) .. embed(y_T)].
Matd input_rows(const ParameterStore& store, const RowVecd& f, const TokenSequence& target) {
  auto Wd = store.value("dec.embed").mat();
  const Index T = static_cast<Index>(target.size());
  Matd X(T + 2, Wd.cols());
  X.row(0) = project_f(store, f);
  X.row(1) = Wd.row(Vocabulary::kStart);
  for (Index t = 0; t < T; ++t) {
    const int id = target[static_cast<std::size_t>(t)];
    if (id < 0 || id >= Wd.rows())
      throw std::invalid_argument("target token id out of range: " + std::to_string(id));
    X.row(t + 2) = Wd.row(id);
  }
  return X;
}

}  // namespace

double sequence_nll(const Matd& logits, const TokenSequence& targets, Matd* soft,
                    int* clamp_events) {
  if (logits.rows() != static_cast<Index>(targets.size()))
    throw std::invalid_argument("sequence_nll: row/target count mismatch");
  if (soft) soft->resize(logits.rows(), logits.cols());
  double total = 0;
  for (Index s = 0; s < logits.rows(); ++s) {
    const double zmax = logits.row(s).maxCoeff();
    RowVecd ex = (logits.row(s).array() - zmax).exp();
    const double Z = ex.sum();
    RowVecd p = ex / Z;
    if (soft) soft->row(s) = p;
    const int tgt = targets[static_cast<std::size_t>(s)];
    if (tgt < 0 || tgt >= logits.cols())
      throw std::invalid_argument("sequence_nll: target id out of range");
    double pt = p[tgt];
    if (pt < kLogFloor) {
      pt = kLogFloor;
      if (clamp_events) ++(*clamp_events);
    }
    total -= std::log(pt);
  }
  return total / static_cast<double>(logits.rows());
}

DecodeResult decode_teacher_forced(const ParameterStore& store, const RowVecd& f,
                                   const TokenSequence& target, DecodeCache& cache) {
  if (target.empty()) throw std::invalid_argument("decode_teacher_forced: empty target");
  const Tensor& Wh = store.value("dec.lstm.Wh");
  if (f.cols() != Wh.dim(0))
    throw std::invalid_argument("decode_teacher_forced: embedding dimension mismatch");

  cache.f = f;
  cache.ext_targets = target;
  cache.ext_targets.push_back(Vocabulary::kStop);

  Matd X = input_rows(store, f, target);
  lstm_forward(X, store.value("dec.lstm.Wx"), Wh, store.value("dec.lstm.b"), cache.lstm);

  // Predictions come from h_1..h_{S-1}; h_0 only absorbs f.
  const Index P = cache.lstm.h.rows() - 1;
  auto Wv = store.value("dec.out.W").mat();
  auto bv = store.value("dec.out.b").mat();
  cache.logits.resize(P, Wv.cols());
  cache.logits.noalias() = cache.lstm.h.bottomRows(P) * Wv;
  cache.logits.rowwise() += bv.row(0);

  cache.clamp_events = 0;
  DecodeResult res;
  res.local_loss = sequence_nll(cache.logits, cache.ext_targets, &cache.soft, &cache.clamp_events);
  res.clamp_events = cache.clamp_events;
  if (!std::isfinite(res.local_loss)) throw NumericError("non-finite local loss");
  return res;
}

Matd sentence_soft_rows(const DecodeCache& cache) {
  return cache.soft.topRows(cache.soft.rows() - 1);
}

TokenSequence generate_greedy(const ParameterStore& store, const RowVecd& f, int t_max) {
  if (t_max < 1) throw std::invalid_argument("generate_greedy: t_max must be >= 1");
  const Tensor& Wx = store.value("dec.lstm.Wx");
  const Tensor& Wh = store.value("dec.lstm.Wh");
  const Tensor& b = store.value("dec.lstm.b");
  auto Wd = store.value("dec.embed").mat();
  auto Wv = store.value("dec.out.W").mat();
  auto bv = store.value("dec.out.b").mat();

  const Index d = Wh.dim(0);
  RowVecd h = RowVecd::Zero(d), c = RowVecd::Zero(d);
  lstm_step(project_f(store, f), Wx, Wh, b, h, c);

  TokenSequence out;
  int token = Vocabulary::kStart;
  for (int step = 0; step < t_max; ++step) {
    lstm_step(Wd.row(token), Wx, Wh, b, h, c);
    RowVecd logits = h * Wv + bv;
    Index best = 0;
    logits.maxCoeff(&best);  // first maximum: lowest id wins ties
    token = static_cast<int>(best);
    if (token == Vocabulary::kStop) break;
    out.push_back(token);
  }
  return out;
}

RowVecd decode_backward(ParameterStore& store, const DecodeCache& cache, double local_scale,
                        const Matd* dsoft) {
  const Index P = cache.soft.rows();  // prediction steps, T+1
  const Index S = cache.lstm.h.rows();
  const Index V = cache.soft.cols();
  if (P + 1 != S) throw std::invalid_argument("decode_backward: cache mismatch");
  if (dsoft && (dsoft->rows() != P - 1 || dsoft->cols() != V))
    throw std::invalid_argument("decode_backward: dsoft must be T x V");

  const double step_scale = local_scale / static_cast<double>(P);

  // d(loss)/d(logits): CE route plus the discriminator route through each
  // softmax Jacobian.
  Matd dZ(P, V);
  for (Index s = 0; s < P; ++s) {
    RowVecd p = cache.soft.row(s);
    RowVecd g = step_scale * p;
    g[cache.ext_targets[static_cast<std::size_t>(s)]] -= step_scale;
    if (dsoft && s < P - 1) {
      RowVecd dp = dsoft->row(s);
      g += p.cwiseProduct(dp) - (dp.dot(p)) * p;
    }
    dZ.row(s) = g;
  }

  auto Wv = store.value("dec.out.W").mat();
  store.grad("dec.out.W").mat().noalias() += cache.lstm.h.bottomRows(P).transpose() * dZ;
  store.grad("dec.out.b").mat().noalias() += dZ.colwise().sum();

  Matd dH = Matd::Zero(S, cache.lstm.h.cols());
  dH.bottomRows(P).noalias() = dZ * Wv.transpose();

  Matd dX = lstm_backward(cache.lstm, store.value("dec.lstm.Wx"), store.value("dec.lstm.Wh"), dH,
                          store.grad("dec.lstm.Wx"), store.grad("dec.lstm.Wh"),
                          store.grad("dec.lstm.b"));

  auto gWd = store.grad("dec.embed").mat();
  gWd.row(Vocabulary::kStart) += dX.row(1);
  for (Index t = 0; t + 1 < static_cast<Index>(cache.ext_targets.size()); ++t)
    gWd.row(cache.ext_targets[static_cast<std::size_t>(t)]) += dX.row(t + 2);

  if (store.has("dec.fproj")) {
    store.grad("dec.fproj").mat().noalias() += cache.f.transpose() * dX.row(0);
    return dX.row(0) * store.value("dec.fproj").mat().transpose();
  }
  return dX.row(0);
}

}  // namespace pairdisc
