#pragma once

#include <string>
#include <vector>

#include "pairdisc/encoder.hpp"

namespace pairdisc {

struct BatchEmbeddings {
  Matd e_p;  // N x d, predicted-sentence embeddings
  Matd e_g;  // N x d, ground-truth embeddings
  std::vector<EncoderCache> p_caches;
  std::vector<EncoderCache> g_caches;
};

struct GlobalLossResult {
  double value = 0;
  Matd de_p;  // N x d
  Matd de_g;  // N x d
  double min_abs_margin = 0;  // distance to the nearest hinge kink
};

// Batch pairwise hinge: sum over i != j of max(0, e_p[i].e_g[j] -
// e_p[i].e_g[i] + margin). With gated=true the gradients are the exact
// subgradients (a margin sitting exactly at 0 contributes nothing); with
// gated=false the hinge indicator is dropped, i.e. every pair contributes
// as if its margin were active.
GlobalLossResult global_loss(const Matd& e_p, const Matd& e_g, double margin = 1.0,
                             bool gated = true);

// Independent naive-double-loop oracle; shares no code with global_loss.
double global_loss_bruteforce(const Matd& e_p, const Matd& e_g, double margin = 1.0);

// Embeds the decoder's soft sequences (f^p) and the ground-truth sentences
// (f^g) through the encoder parameters under `prefix` - "enc." when shared.
BatchEmbeddings embed_pair_batch(const ParameterStore& store, const std::string& prefix,
                                 const std::vector<Matd>& soft_sequences,
                                 const std::vector<TokenSequence>& targets);

}  // namespace pairdisc
