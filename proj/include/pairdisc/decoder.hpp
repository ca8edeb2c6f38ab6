#pragma once

#include <string>

#include "pairdisc/lstm.hpp"
#include "pairdisc/param_store.hpp"
#include "pairdisc/text.hpp"

namespace pairdisc {

// Parameter names:
//   dec.embed    [V x e]   target-token embedding
//   dec.lstm.*             decoder LSTM (input e -> hidden d)
//   dec.out.W    [d x V]   logit projection
//   dec.out.b    [V]
//   dec.fproj    [d x e]   sentence-embedding input projection; only present
//                          when e != d (otherwise f is fed directly)

void add_decoder_params(ParameterStore& store, Index vocab, Index embed, Index hidden);

struct DecodeCache {
  RowVecd f;                   // encoder output fed at the first step
  TokenSequence ext_targets;   // [y_1..y_T, STOP]
  LstmCache lstm;              // T+2 steps
  Matd soft;                   // (T+1) x V, rows p_1..p_{T+1}
  Matd logits;                 // (T+1) x V
  int clamp_events = 0;
};

struct DecodeResult {
  double local_loss = 0;
  int clamp_events = 0;
};

// Teacher-forced pass: the first LSTM input is f (projected when e != d),
// then the embeddings of START and the ground-truth tokens. Softmax row s
// predicts ext_targets[s]; the loss is the meanNLL over all prediction
// steps, STOP included. The log floor guards the value only; the gradient
// is the standard softmax-CE one, which stays bounded.
DecodeResult decode_teacher_forced(const ParameterStore& store, const RowVecd& f,
                                   const TokenSequence& target, DecodeCache& cache);

// Soft rows consumed by the discriminator: p_1..p_T, the distributions over
// the sentence tokens (the trailing STOP row is not part of the sentence).
Matd sentence_soft_rows(const DecodeCache& cache);

// Argmax feedback decoding; stops at STOP or after t_max tokens.
// Ties break toward the lowest token id.
TokenSequence generate_greedy(const ParameterStore& store, const RowVecd& f, int t_max);

// Backward for local_scale * localNLL + <dsoft, sentence soft rows>.
// dsoft may be null (pure local route) or T x V. Returns d(loss)/d(f).
RowVecd decode_backward(ParameterStore& store, const DecodeCache& cache, double local_scale,
                        const Matd* dsoft);

// Mean NLL of targets under the given logit rows, with the 1e-12 probability
// floor. Exposed for direct testing of rigged logit patterns.
double sequence_nll(const Matd& logits, const TokenSequence& targets, Matd* soft = nullptr,
                    int* clamp_events = nullptr);

}  // namespace pairdisc
