#include "pairdisc/encoder.hpp"

namespace pairdisc {

void add_encoder_params(ParameterStore& store, const std::string& prefix, Index vocab, Index embed,
                        Index hidden, Index conv_width) {
  store.add(prefix + "embed", {vocab, embed});
  if (conv_width > 0) store.add(prefix + "conv", {conv_width, embed, embed});
  store.add(prefix + "lstm.Wx", {embed, 4 * hidden});
  store.add(prefix + "lstm.Wh", {hidden, 4 * hidden});
  store.add(prefix + "lstm.b", {4 * hidden});
}

namespace {

// Same-length temporal convolution; kernel slice k applies to the input row
// at offset k - (w-1)/2, rows outside the sequence are zero.
Matd conv_forward(const Matd& E, const Tensor& kernel) {
  const Index L = E.rows();
  const Index w = kernel.dim(0);
  const Index off = (w - 1) / 2;
  Matd out = Matd::Zero(L, E.cols());
  for (Index t = 0; t < L; ++t)
    for (Index k = 0; k < w; ++k) {
      const Index s = t + k - off;
      if (s >= 0 && s < L) out.row(t).noalias() += E.row(s) * kernel.slice(k);
    }
  return out;
}

Matd conv_backward(const Matd& E, const Tensor& kernel, const Matd& dOut, Tensor& gKernel) {
  const Index L = E.rows();
  const Index w = kernel.dim(0);
  const Index off = (w - 1) / 2;
  Matd dE = Matd::Zero(L, E.cols());
  for (Index t = 0; t < L; ++t)
    for (Index k = 0; k < w; ++k) {
      const Index s = t + k - off;
      if (s >= 0 && s < L) {
        gKernel.slice(k).noalias() += E.row(s).transpose() * dOut.row(t);
        dE.row(s).noalias() += dOut.row(t) * kernel.slice(k).transpose();
      }
    }
  return dE;
}

Matd embed_hard(const Tensor& We, const TokenSequence& ids) {
  auto W = We.mat();
  Matd E(static_cast<Index>(ids.size()), W.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= W.rows())
      throw std::invalid_argument("token id " + std::to_string(ids[t]) + " out of range [0," +
                                  std::to_string(W.rows()) + ")");
    E.row(static_cast<Index>(t)) = W.row(ids[t]);
  }
  return E;
}

void check_simplex(const Matd& soft, Index vocab) {
  if (soft.cols() != vocab) throw std::invalid_argument("soft sequence width != vocabulary size");
  for (Index t = 0; t < soft.rows(); ++t) {
    if (std::abs(soft.row(t).sum() - 1.0) > 1e-6)
      throw std::invalid_argument("soft row " + std::to_string(t) + " does not sum to 1");
    if ((soft.row(t).array() < -1e-12).any())
      throw std::invalid_argument("soft row " + std::to_string(t) + " has negative mass");
  }
}

RowVecd run_lstm(const ParameterStore& store, const std::string& prefix, Matd embedded,
                 EncoderCache* cache) {
  EncoderCache local;
  EncoderCache& cc = cache ? *cache : local;
  cc.embedded = std::move(embedded);
  cc.has_conv = store.has(prefix + "conv");

  const Matd& X = cc.has_conv ? conv_forward(cc.embedded, store.value(prefix + "conv")) : cc.embedded;
  lstm_forward(X, store.value(prefix + "lstm.Wx"), store.value(prefix + "lstm.Wh"),
               store.value(prefix + "lstm.b"), cc.lstm);
  RowVecd f = cc.lstm.h.row(cc.lstm.h.rows() - 1);
  if (!f.allFinite()) throw NumericError("non-finite sentence embedding");
  return f;
}

}  // namespace

Matd embed_tokens(const ParameterStore& store, const std::string& prefix, const TokenSequence& ids) {
  Matd E = embed_hard(store.value(prefix + "embed"), ids);
  if (store.has(prefix + "conv")) return conv_forward(E, store.value(prefix + "conv"));
  return E;
}

Matd embed_soft(const ParameterStore& store, const std::string& prefix, const Matd& soft) {
  const Tensor& We = store.value(prefix + "embed");
  check_simplex(soft, We.dim(0));
  Matd E = soft * We.mat();
  if (store.has(prefix + "conv")) return conv_forward(E, store.value(prefix + "conv"));
  return E;
}

RowVecd encode(const ParameterStore& store, const std::string& prefix, const TokenSequence& ids,
               EncoderCache* cache) {
  if (ids.empty()) throw std::invalid_argument("encode: empty sequence");
  Matd E = embed_hard(store.value(prefix + "embed"), ids);
  if (cache) cache->ids = ids;
  return run_lstm(store, prefix, std::move(E), cache);
}

RowVecd encode_soft(const ParameterStore& store, const std::string& prefix, const Matd& soft,
                    EncoderCache* cache) {
  if (soft.rows() == 0) throw std::invalid_argument("encode_soft: empty sequence");
  const Tensor& We = store.value(prefix + "embed");
  check_simplex(soft, We.dim(0));
  Matd E = soft * We.mat();
  if (cache) cache->soft = soft;
  return run_lstm(store, prefix, std::move(E), cache);
}

void encode_backward(ParameterStore& store, const std::string& prefix, const EncoderCache& cache,
                     const RowVecd& df, Matd* dsoft) {
  const Index S = cache.lstm.h.rows();
  if (S == 0) throw std::invalid_argument("encode_backward: empty cache");
  const bool soft_path = cache.soft.rows() > 0;
  if (!soft_path && cache.ids.size() != static_cast<std::size_t>(S))
    throw std::invalid_argument("encode_backward: cache/input mismatch");
  if (df.cols() != cache.lstm.h.cols())
    throw std::invalid_argument("encode_backward: upstream gradient width mismatch");

  Matd dH = Matd::Zero(S, cache.lstm.h.cols());
  dH.row(S - 1) = df;

  Matd dX = lstm_backward(cache.lstm, store.value(prefix + "lstm.Wx"),
                          store.value(prefix + "lstm.Wh"), dH, store.grad(prefix + "lstm.Wx"),
                          store.grad(prefix + "lstm.Wh"), store.grad(prefix + "lstm.b"));

  Matd dE;
  if (cache.has_conv) {
    dE = conv_backward(cache.embedded, store.value(prefix + "conv"), dX, store.grad(prefix + "conv"));
  } else {
    dE = std::move(dX);
  }

  auto gWe = store.grad(prefix + "embed").mat();
  if (soft_path) {
    gWe.noalias() += cache.soft.transpose() * dE;
    if (dsoft) dsoft->noalias() = dE * store.value(prefix + "embed").mat().transpose();
  } else {
    for (Index t = 0; t < S; ++t) gWe.row(cache.ids[static_cast<std::size_t>(t)]) += dE.row(t);
    if (dsoft) dsoft->resize(0, 0);
  }
}

}  // namespace pairdisc
