#pragma once

#include <string>
#include <vector>

#include "pairdisc/config.hpp"
#include "pairdisc/metrics.hpp"
#include "pairdisc/model.hpp"

namespace pairdisc {

struct TrainConfig {
  Variant variant = Variant::EddLGShared;
  double local_weight = 1.0;
  double global_weight = 1.0;
  RmsPropConfig rms;  // lr 0.0008, alpha 0.99, eps 1e-8
  double decay_a = 1500;
  double decay_b = 1250;
  int batch_size = 150;
  int epochs = 10;
  std::uint64_t seed = 42;
  Index embed = 64;
  Index hidden = 128;
  Index conv_width = 0;
  int t_max = 30;
  int vocab_min_count = 1;
  long vocab_max_size = 20000;
  double clip_norm = 5.0;
  double margin = 1.0;
  bool gated_hinge = true;
  int ckpt_every = 0;  // 0: only initial/last/final checkpoints

  static TrainConfig from_kv(const KeyValueFile& kv, const std::string& origin);
  KeyValueFile to_kv() const;

  ModelConfig model_config(Index vocab) const;
  bool uses_global() const { return global_weight != 0.0; }
};

struct EpochStats {
  int epoch = 0;
  double lr = 0;
  double train_local = 0;
  double train_global = 0;
  double train_total = 0;
  double val_total = 0;
  double val_local = 0;
};

class Trainer {
 public:
  // The vocabulary is built from the training split only.
  Trainer(TrainConfig cfg, const std::vector<RawPair>& train_raw,
          const std::vector<RawPair>& val_raw);

  const Vocabulary& vocab() const { return vocab_; }
  Model& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const RmsPropConfig& schedule() const { return rms_; }
  const std::vector<ParaphrasePair>& train_pairs() const { return train_; }

  // backward + gradient clip + RMSProp step; report.grad_norm is pre-clip.
  BatchLossReport train_step(const std::vector<ParaphrasePair>& batch);

  // Mean batch losses over a dataset, forward only.
  std::pair<double, double> validate(const std::vector<ParaphrasePair>& pairs) const;  // (local, total)

  // Full loop: per epoch seeded shuffle, lr decay, validation, checkpoints,
  // metrics log. out_dir empty = no files (in-memory run).
  std::vector<EpochStats> run(const std::string& out_dir);

  void resume_from(const std::string& ckpt_path);

 private:
  void save_ckpt(const std::string& path) const;

  TrainConfig cfg_;
  Vocabulary vocab_;
  Model model_;
  RmsPropConfig rms_;
  std::vector<ParaphrasePair> train_;
  std::vector<ParaphrasePair> val_;
};

struct EvalResult {
  MetricReport report;
  std::vector<Sentence> hypotheses;
  std::vector<Sentence> references;
};

// Greedy-generates a paraphrase for every source and scores against the
// targets.
EvalResult evaluate_pairs(const Model& model, const Vocabulary& vocab,
                          const std::vector<ParaphrasePair>& pairs, int t_max, int rouge_order = 2,
                          bool bleu_smooth = false);

// Run manifest: enough to reproduce a run and detect changed inputs.
void write_manifest(const std::string& path, const TrainConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& data_files,
                    const std::string& status);
void finish_manifest(const std::string& path);
void verify_manifest_digests(const std::string& path);

extern const char kCodeVersion[];

}  // namespace pairdisc
