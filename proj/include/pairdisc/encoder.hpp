#pragma once

#include <string>

#include "pairdisc/lstm.hpp"
#include "pairdisc/param_store.hpp"
#include "pairdisc/text.hpp"

namespace pairdisc {

// Parameter names under a prefix ("enc." for the encoder proper, "disc."
// for an unshared discriminator copy):
//   <p>embed      [V x e]      word embedding
//   <p>conv       [w x e x e]  optional temporal conv kernel
//   <p>lstm.Wx    [e x 4d]
//   <p>lstm.Wh    [d x 4d]
//   <p>lstm.b     [4d]

void add_encoder_params(ParameterStore& store, const std::string& prefix, Index vocab, Index embed,
                        Index hidden, Index conv_width);

struct EncoderCache {
  TokenSequence ids;  // hard path; empty on the soft path
  Matd soft;          // soft path; 0x0 on the hard path
  Matd embedded;      // L x e, before the conv stage
  LstmCache lstm;     // inputs are the conv output (or `embedded` untouched)
  bool has_conv = false;
};

// Embedding front end alone: hard row t = W_e[id_t]; soft row t = p_t * W_e;
// then the optional same-length temporal convolution.
Matd embed_tokens(const ParameterStore& store, const std::string& prefix, const TokenSequence& ids);
Matd embed_soft(const ParameterStore& store, const std::string& prefix, const Matd& soft);

// Final hidden state h_L, the sentence embedding.
RowVecd encode(const ParameterStore& store, const std::string& prefix, const TokenSequence& ids,
               EncoderCache* cache = nullptr);
RowVecd encode_soft(const ParameterStore& store, const std::string& prefix, const Matd& soft,
                    EncoderCache* cache = nullptr);

// Accumulates d(loss)/d(params) given the gradient on the sentence embedding.
// On the soft path, also returns d(loss)/d(soft rows) when dsoft != nullptr
// so the decoder can continue the chain.
void encode_backward(ParameterStore& store, const std::string& prefix, const EncoderCache& cache,
                     const RowVecd& df, Matd* dsoft = nullptr);

}  // namespace pairdisc
