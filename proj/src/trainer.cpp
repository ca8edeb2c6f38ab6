#include "pairdisc/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "pairdisc/checkpoint.hpp"

namespace pairdisc {

const char kCodeVersion[] = "pairdisc 0.1.0";

namespace {

const std::vector<std::string> kTrainKeys = {
    "variant",     "local_weight",  "global_weight", "learning_rate", "alpha",
    "epsilon",     "decay_factor",  "decay_a",       "decay_b",       "batch_size",
    "epochs",      "seed",          "embed_dim",     "hidden_dim",    "conv_width",
    "t_max",       "vocab_min_count", "vocab_max_size", "clip_norm",  "margin",
    "gated_hinge", "ckpt_every"};

}  // namespace

TrainConfig TrainConfig::from_kv(const KeyValueFile& kv, const std::string& origin) {
  kv.require_known(kTrainKeys, origin);
  TrainConfig cfg;
  cfg.variant = parse_variant(kv.get("variant", variant_name(cfg.variant)));
  switch (cfg.variant) {
    case Variant::EdLocal: cfg.global_weight = 0; break;
    case Variant::EddGlobal: cfg.local_weight = 0; break;
    default: break;
  }
  cfg.local_weight = kv.get_double("local_weight", cfg.local_weight);
  cfg.global_weight = kv.get_double("global_weight", cfg.global_weight);
  cfg.rms.learning_rate = kv.get_double("learning_rate", cfg.rms.learning_rate);
  cfg.rms.alpha = kv.get_double("alpha", cfg.rms.alpha);
  cfg.rms.epsilon = kv.get_double("epsilon", cfg.rms.epsilon);
  cfg.decay_a = kv.get_double("decay_a", cfg.decay_a);
  cfg.decay_b = kv.get_double("decay_b", cfg.decay_b);
  cfg.rms.decay_factor = kv.has("decay_factor")
                             ? kv.get_double("decay_factor", 1.0)
                             : schedule_decay_factor(cfg.decay_a, cfg.decay_b);
  cfg.batch_size = static_cast<int>(kv.get_long("batch_size", cfg.batch_size));
  cfg.epochs = static_cast<int>(kv.get_long("epochs", cfg.epochs));
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.embed = kv.get_long("embed_dim", cfg.embed);
  cfg.hidden = kv.get_long("hidden_dim", cfg.hidden);
  cfg.conv_width = kv.get_long("conv_width", cfg.conv_width);
  cfg.t_max = static_cast<int>(kv.get_long("t_max", cfg.t_max));
  cfg.vocab_min_count = static_cast<int>(kv.get_long("vocab_min_count", cfg.vocab_min_count));
  cfg.vocab_max_size = kv.get_long("vocab_max_size", cfg.vocab_max_size);
  cfg.clip_norm = kv.get_double("clip_norm", cfg.clip_norm);
  cfg.margin = kv.get_double("margin", cfg.margin);
  cfg.gated_hinge = kv.get_long("gated_hinge", cfg.gated_hinge ? 1 : 0) != 0;
  cfg.ckpt_every = static_cast<int>(kv.get_long("ckpt_every", cfg.ckpt_every));
  cfg.rms.validate();
  if (cfg.batch_size < 1) throw DataError(origin + ": batch_size must be >= 1");
  if (cfg.uses_global() && cfg.batch_size < 2)
    throw DataError(origin + ": batch_size must be >= 2 when the global loss is enabled");
  if (cfg.epochs < 0) throw DataError(origin + ": epochs must be >= 0");
  if (cfg.t_max < 1) throw DataError(origin + ": t_max must be >= 1");
  return cfg;
}

KeyValueFile TrainConfig::to_kv() const {
  KeyValueFile kv;
  kv.set("variant", variant_name(variant));
  kv.set_double("local_weight", local_weight);
  kv.set_double("global_weight", global_weight);
  kv.set_double("learning_rate", rms.learning_rate);
  kv.set_double("alpha", rms.alpha);
  kv.set_double("epsilon", rms.epsilon);
  kv.set_double("decay_factor", rms.decay_factor);
  kv.set_long("batch_size", batch_size);
  kv.set_long("epochs", epochs);
  kv.set("seed", std::to_string(seed));
  kv.set_long("embed_dim", embed);
  kv.set_long("hidden_dim", hidden);
  kv.set_long("conv_width", conv_width);
  kv.set_long("t_max", t_max);
  kv.set_long("vocab_min_count", vocab_min_count);
  kv.set_long("vocab_max_size", vocab_max_size);
  kv.set_double("clip_norm", clip_norm);
  kv.set_double("margin", margin);
  kv.set_long("gated_hinge", gated_hinge ? 1 : 0);
  kv.set_long("ckpt_every", ckpt_every);
  return kv;
}

ModelConfig TrainConfig::model_config(Index vocab) const {
  ModelConfig mc;
  mc.vocab = vocab;
  mc.embed = embed;
  mc.hidden = hidden;
  mc.conv_width = conv_width;
  mc.variant = variant;
  mc.local_weight = local_weight;
  mc.global_weight = global_weight;
  mc.margin = margin;
  mc.gated_hinge = gated_hinge;
  return mc;
}

namespace {

Vocabulary build_vocab_from_pairs(const std::vector<RawPair>& raw, const TrainConfig& cfg) {
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(raw.size() * 2);
  for (const auto& p : raw) {
    corpus.push_back(p.source);
    corpus.push_back(p.target);
  }
  return Vocabulary::build(corpus, cfg.vocab_min_count,
                           static_cast<std::size_t>(cfg.vocab_max_size));
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, const std::vector<RawPair>& train_raw,
                 const std::vector<RawPair>& val_raw)
    : cfg_(cfg),
      vocab_(build_vocab_from_pairs(train_raw, cfg)),
      model_(cfg.model_config(vocab_.size())),
      rms_(cfg.rms) {
  if (train_raw.empty()) throw DataError("training set is empty");
  model_.init_params(cfg_.seed);
  train_ = encode_pairs(train_raw, vocab_);
  val_ = encode_pairs(val_raw, vocab_);
}

BatchLossReport Trainer::train_step(const std::vector<ParaphrasePair>& batch) {
  BatchLossReport report = model_.batch_backward(batch);
  report.grad_norm = std::sqrt(model_.store().grad_sq_norm());
  if (cfg_.clip_norm > 0 && report.grad_norm > cfg_.clip_norm)
    model_.store().scale_grads(cfg_.clip_norm / report.grad_norm);
  rmsprop_step(model_.store(), rms_);
  return report;
}

std::pair<double, double> Trainer::validate(const std::vector<ParaphrasePair>& pairs) const {
  const auto& eval_set = pairs.empty() ? train_ : pairs;
  const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);

  std::vector<std::vector<ParaphrasePair>> batches;
  for (std::size_t at = 0; at < eval_set.size(); at += bs) {
    std::size_t end = std::min(eval_set.size(), at + bs);
    std::vector<ParaphrasePair> b(eval_set.begin() + static_cast<std::ptrdiff_t>(at),
                                  eval_set.begin() + static_cast<std::ptrdiff_t>(end));
    // Eq-3 style batch sums need >= 2 rows; a trailing singleton is folded
    // into the previous batch.
    if (cfg_.uses_global() && b.size() < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), b.begin(), b.end());
    } else {
      batches.push_back(std::move(b));
    }
  }

  double local = 0, total = 0;
  std::size_t n = 0;
  for (const auto& b : batches) {
    double batch_local = 0;
    for (const auto& pair : b) {
      DecodeCache cache;
      batch_local +=
          decode_teacher_forced(model_.store(), model_.encode_sentence(pair.source), pair.target, cache)
              .local_loss;
    }
    batch_local /= static_cast<double>(b.size());
    local += batch_local;
    // a lone example has no in-batch negatives: its total is local-only
    total += (cfg_.uses_global() && b.size() < 2) ? cfg_.local_weight * batch_local
                                                  : model_.batch_loss(b).value;
    ++n;
  }
  if (n == 0) return {0.0, 0.0};
  return {local / static_cast<double>(n), total / static_cast<double>(n)};
}

void Trainer::save_ckpt(const std::string& path) const {
  save_checkpoint(model_.store(), path);
  vocab_.save(path + ".vocab");
}

void Trainer::resume_from(const std::string& ckpt_path) {
  load_checkpoint_into(model_.store(), ckpt_path);
}

std::vector<EpochStats> Trainer::run(const std::string& out_dir) {
  namespace fs = std::filesystem;
  const bool to_disk = !out_dir.empty();
  std::ofstream metrics_log;
  if (to_disk) {
    fs::create_directories(out_dir);
    save_ckpt(out_dir + "/initial.ckpt");
    metrics_log.open(out_dir + "/metrics.tsv", std::ios::trunc);
    metrics_log << "epoch\tlr\ttrain_local\ttrain_global\ttrain_total\tval_total\n";
  }

  std::vector<EpochStats> log;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    const double epoch_lr = rms_.learning_rate;
    auto batches = make_batches(train_.size(), static_cast<std::size_t>(cfg_.batch_size), cfg_.seed,
                                static_cast<std::uint64_t>(epoch), cfg_.uses_global());
    EpochStats st;
    st.epoch = epoch;
    st.lr = epoch_lr;
    std::size_t steps = 0;
    for (const auto& idx : batches) {
      std::vector<ParaphrasePair> batch;
      batch.reserve(idx.size());
      for (std::size_t i : idx) batch.push_back(train_[i]);
      BatchLossReport rep = train_step(batch);
      st.train_local += rep.local;
      st.train_global += rep.global;
      st.train_total += rep.total;
      ++steps;
    }
    if (steps > 0) {
      st.train_local /= static_cast<double>(steps);
      st.train_global /= static_cast<double>(steps);
      st.train_total /= static_cast<double>(steps);
    }
    rms_ = epoch_decay(rms_);
    auto [vl, vt] = validate(val_);
    st.val_local = vl;
    st.val_total = vt;
    log.push_back(st);

    if (to_disk) {
      metrics_log << st.epoch << '\t' << st.lr << '\t' << st.train_local << '\t' << st.train_global
                  << '\t' << st.train_total << '\t' << st.val_total << '\n';
      metrics_log.flush();
      save_ckpt(out_dir + "/last.ckpt");
      if (cfg_.ckpt_every > 0 && (epoch + 1) % cfg_.ckpt_every == 0)
        save_ckpt(out_dir + "/epoch_" + std::to_string(epoch + 1) + ".ckpt");
    }
  }
  if (to_disk) save_ckpt(out_dir + "/final.ckpt");
  return log;
}

EvalResult evaluate_pairs(const Model& model, const Vocabulary& vocab,
                          const std::vector<ParaphrasePair>& pairs, int t_max, int rouge_order,
                          bool bleu_smooth) {
  if (vocab.size() != model.config().vocab)
    throw DataError("vocabulary size " + std::to_string(vocab.size()) +
                    " does not match checkpoint vocabulary " +
                    std::to_string(model.config().vocab));
  EvalResult out;
  out.hypotheses.reserve(pairs.size());
  out.references.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.hypotheses.push_back(vocab.decode(model.generate(p.source, t_max)));
    out.references.push_back(vocab.decode(p.target));
  }
  out.report = score_corpus(out.hypotheses, out.references, rouge_order, bleu_smooth);
  return out;
}

void write_manifest(const std::string& path, const TrainConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& data_files,
                    const std::string& status) {
  KeyValueFile kv;
  kv.set("code_version", kCodeVersion);
  kv.set("status", status);
  kv.set("started_at", timestamp_utc());
  kv.set("seed", std::to_string(cfg.seed));
  for (const auto& [role, file] : data_files) {
    kv.set(role + "_file", file);
    kv.set(role + "_digest", std::to_string(file_digest(file)));
  }
  const KeyValueFile snapshot = cfg.to_kv();
  for (const auto& [k, v] : snapshot.items()) kv.set("config." + k, v);
  kv.save(path);
}

void finish_manifest(const std::string& path) {
  KeyValueFile kv = KeyValueFile::load(path);
  kv.set("status", "done");
  kv.set("finished_at", timestamp_utc());
  kv.save(path);
}

void verify_manifest_digests(const std::string& path) {
  KeyValueFile kv = KeyValueFile::load(path);
  for (const auto& [key, value] : kv.items()) {
    if (key.size() <= 5 || key.compare(key.size() - 5, 5, "_file") != 0) continue;
    const std::string role = key.substr(0, key.size() - 5);
    if (role == "code_version" || role.rfind("config.", 0) == 0) continue;
    const std::string digest_key = role + "_digest";
    if (!kv.has(digest_key)) continue;
    const std::uint64_t want = kv.get_u64(digest_key, 0);
    const std::uint64_t got = file_digest(value);
    if (want != got)
      throw DataError("manifest digest mismatch for " + value + " (recorded " +
                      std::to_string(want) + ", found " + std::to_string(got) + ")");
  }
}

}  // namespace pairdisc
