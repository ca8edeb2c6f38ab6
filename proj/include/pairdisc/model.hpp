#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pairdisc/decoder.hpp"
#include "pairdisc/discriminator.hpp"
#include "pairdisc/encoder.hpp"
#include "pairdisc/gradcheck.hpp"

namespace pairdisc {

// Training variants: which losses are on and whether the discriminator
// reads the encoder's parameters or its own copy.
enum class Variant { EdLocal, EddGlobal, EddLG, EddLGShared };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Index vocab = 0;
  Index embed = 64;
  Index hidden = 128;
  Index conv_width = 0;  // 0 = plain lookup front end
  Variant variant = Variant::EddLGShared;
  double local_weight = 1.0;
  double global_weight = 1.0;
  double margin = 1.0;
  bool gated_hinge = true;

  bool uses_global() const { return global_weight != 0.0; }
  bool unshared_discriminator() const { return variant == Variant::EddLG; }
};

// Applies the variant's loss-weight convention (ED-L: global off,
// EDD-G: local off, both LG variants: 1/1).
void apply_variant_weights(ModelConfig& cfg);

struct BatchLossReport {
  double local = 0;      // mean over the batch of the per-example NLL
  double global = 0;     // batch-level hinge sum
  double total = 0;      // local_weight*local + global_weight*global
  double grad_norm = 0;  // pre-clip L2 norm, filled by the trainer
  int clamp_events = 0;
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  // Uniform [-0.08, 0.08] init, forget-gate biases at 1.0; the unshared
  // discriminator copy starts identical to the encoder.
  void init_params(std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }

  // "enc." when the discriminator shares weights, "disc." for EDD-LG.
  std::string discriminator_prefix() const;

  RowVecd encode_sentence(const TokenSequence& ids) const;
  TokenSequence generate(const TokenSequence& source, int t_max) const;

  // Pure forward of the joint objective; kink distance feeds the
  // gradient checker's hinge exclusion rule.
  LossEval batch_loss(const std::vector<ParaphrasePair>& batch) const;

  // Forward + exact backward through both loss routes. Accumulates into the
  // store's gradients (caller clips and steps) and returns the loss report.
  BatchLossReport batch_backward(const std::vector<ParaphrasePair>& batch);

  static Model from_checkpoint(const std::string& path, ModelConfig cfg);

 private:
  void build_params();
  void check_batch(const std::vector<ParaphrasePair>& batch) const;

  ModelConfig cfg_;
  ParameterStore store_;
};

}  // namespace pairdisc
