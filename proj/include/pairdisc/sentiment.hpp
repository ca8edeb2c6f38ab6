#pragma once

#include <string>
#include <vector>

#include "pairdisc/model.hpp"
#include "pairdisc/param_store.hpp"
#include "pairdisc/text.hpp"

namespace pairdisc {

inline constexpr int kSentimentClasses = 5;  // very negative .. very positive

struct LogRegParams {
  Matd W;     // 5 x d
  RowVecd b;  // 1 x 5
};

struct LogRegConfig {
  RmsPropConfig rms{0.00009, 0.9, 1e-8, 1.0};
  int batch_size = 200;
  int epochs = 50;
  std::uint64_t seed = 7;
};

// Frozen-encoder forward pass per phrase; one embedding row per input.
Matd embed_phrases(const Model& model, const Vocabulary& vocab,
                   const std::vector<LabeledPhrase>& phrases);

struct LogRegTrainResult {
  LogRegParams params;
  std::vector<double> epoch_loss;
};

// Softmax cross-entropy from zero init under RMSProp. Single-class data
// trains with a warning on stderr.
LogRegTrainResult train_logreg(const Matd& X, const std::vector<int>& labels,
                               const LogRegConfig& cfg);

Matd softmax_rows(const Matd& logits);

// Argmax class per row; ties go to the lowest class id.
std::vector<int> predict(const LogRegParams& params, const Matd& X, Matd* probs = nullptr);

double softmax_xent(const LogRegParams& params, const Matd& X, const std::vector<int>& labels);

double error_rate(const std::vector<int>& predictions, const std::vector<int>& labels);

// Probe file: logreg.* plus a frozen copy of the encoder (and its
// vocabulary alongside), so `sentiment eval` needs no other inputs.
void save_probe(const std::string& path, const LogRegParams& params, const Model& model,
                const Vocabulary& vocab);

struct Probe {
  LogRegParams params;
  Model model;
  Vocabulary vocab;
};
Probe load_probe(const std::string& path);

}  // namespace pairdisc
