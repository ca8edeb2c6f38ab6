#include "pairdisc/model.hpp"

#include "pairdisc/checkpoint.hpp"

namespace pairdisc {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::EdLocal: return "ED-L";
    case Variant::EddGlobal: return "EDD-G";
    case Variant::EddLG: return "EDD-LG";
    case Variant::EddLGShared: return "EDD-LG-shared";
  }
  throw std::logic_error("unreachable");
}

Variant parse_variant(const std::string& name) {
  if (name == "ED-L") return Variant::EdLocal;
  if (name == "EDD-G") return Variant::EddGlobal;
  if (name == "EDD-LG") return Variant::EddLG;
  if (name == "EDD-LG-shared") return Variant::EddLGShared;
  throw DataError("unknown variant '" + name + "' (ED-L, EDD-G, EDD-LG, EDD-LG-shared)");
}

void apply_variant_weights(ModelConfig& cfg) {
  switch (cfg.variant) {
    case Variant::EdLocal:
      cfg.global_weight = 0.0;
      break;
    case Variant::EddGlobal:
      cfg.local_weight = 0.0;
      break;
    case Variant::EddLG:
    case Variant::EddLGShared:
      break;
  }
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  if (cfg_.vocab < Vocabulary::kReserved + 1)
    throw std::invalid_argument("model vocabulary too small");
  build_params();
}

void Model::build_params() {
  add_encoder_params(store_, "enc.", cfg_.vocab, cfg_.embed, cfg_.hidden, cfg_.conv_width);
  add_decoder_params(store_, cfg_.vocab, cfg_.embed, cfg_.hidden);
  if (cfg_.unshared_discriminator())
    add_encoder_params(store_, "disc.", cfg_.vocab, cfg_.embed, cfg_.hidden, cfg_.conv_width);
  store_.seal();
}

void Model::init_params(std::uint64_t seed) {
  store_.init_uniform(seed, -0.08, 0.08);
  for (const char* name : {"enc.lstm.b", "dec.lstm.b"}) {
    auto b = store_.value(name).vec();
    b.segment(cfg_.hidden, cfg_.hidden).setOnes();  // forget-gate bias
  }
  if (cfg_.unshared_discriminator()) {
    for (const std::string& enc_name : store_.names()) {
      if (enc_name.rfind("enc.", 0) != 0) continue;
      const std::string disc_name = "disc." + enc_name.substr(4);
      store_.value(disc_name).vec() = store_.value(enc_name).vec();
    }
  }
}

std::string Model::discriminator_prefix() const {
  return cfg_.unshared_discriminator() ? "disc." : "enc.";
}

RowVecd Model::encode_sentence(const TokenSequence& ids) const {
  return encode(store_, "enc.", ids);
}

TokenSequence Model::generate(const TokenSequence& source, int t_max) const {
  return generate_greedy(store_, encode_sentence(source), t_max);
}

void Model::check_batch(const std::vector<ParaphrasePair>& batch) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (cfg_.uses_global() && batch.size() < 2)
    throw std::invalid_argument("global loss needs a batch of >= 2 examples");
  for (const auto& p : batch)
    if (p.source.empty() || p.target.empty())
      throw std::invalid_argument("batch contains an empty sequence");
}

LossEval Model::batch_loss(const std::vector<ParaphrasePair>& batch) const {
  check_batch(batch);
  const auto N = static_cast<double>(batch.size());

  double local_sum = 0;
  std::vector<Matd> soft_sequences;
  std::vector<TokenSequence> targets;
  for (const auto& pair : batch) {
    RowVecd f = encode(store_, "enc.", pair.source);
    DecodeCache cache;
    local_sum += decode_teacher_forced(store_, f, pair.target, cache).local_loss;
    if (cfg_.uses_global()) {
      soft_sequences.push_back(sentence_soft_rows(cache));
      targets.push_back(pair.target);
    }
  }

  LossEval out;
  const double local = local_sum / N;
  double global = 0;
  if (cfg_.uses_global()) {
    BatchEmbeddings be = embed_pair_batch(store_, discriminator_prefix(), soft_sequences, targets);
    GlobalLossResult gl = global_loss(be.e_p, be.e_g, cfg_.margin, cfg_.gated_hinge);
    global = gl.value;
    out.kink_distance = gl.min_abs_margin;
  }
  out.value = cfg_.local_weight * local + cfg_.global_weight * global;
  return out;
}

BatchLossReport Model::batch_backward(const std::vector<ParaphrasePair>& batch) {
  check_batch(batch);
  const std::size_t N = batch.size();

  struct Work {
    EncoderCache src;
    RowVecd f;
    DecodeCache dec;
  };
  std::vector<Work> work(N);

  BatchLossReport report;
  std::vector<Matd> soft_sequences;
  std::vector<TokenSequence> targets;
  for (std::size_t i = 0; i < N; ++i) {
    work[i].f = encode(store_, "enc.", batch[i].source, &work[i].src);
    DecodeResult dr = decode_teacher_forced(store_, work[i].f, batch[i].target, work[i].dec);
    report.local += dr.local_loss;
    report.clamp_events += dr.clamp_events;
    if (cfg_.uses_global()) {
      soft_sequences.push_back(sentence_soft_rows(work[i].dec));
      targets.push_back(batch[i].target);
    }
  }
  report.local /= static_cast<double>(N);

  std::optional<BatchEmbeddings> be;
  GlobalLossResult gl;
  if (cfg_.uses_global()) {
    be.emplace(embed_pair_batch(store_, discriminator_prefix(), soft_sequences, targets));
    gl = global_loss(be->e_p, be->e_g, cfg_.margin, cfg_.gated_hinge);
    report.global = gl.value;
  }
  report.total = cfg_.local_weight * report.local + cfg_.global_weight * report.global;
  if (!std::isfinite(report.total)) throw NumericError("non-finite batch loss");

  // Backward, fixed example order: ground-truth route, soft route, decoder,
  // source encoder.
  const std::string disc = discriminator_prefix();
  const double local_scale = cfg_.local_weight / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Matd* dsoft = nullptr;
    Matd dsoft_buf;
    if (cfg_.uses_global()) {
      const Index row = static_cast<Index>(i);
      RowVecd dg = cfg_.global_weight * gl.de_g.row(row);
      encode_backward(store_, disc, be->g_caches[i], dg);
      RowVecd dp = cfg_.global_weight * gl.de_p.row(row);
      encode_backward(store_, disc, be->p_caches[i], dp, &dsoft_buf);
      dsoft = &dsoft_buf;
    }
    RowVecd df = decode_backward(store_, work[i].dec, local_scale, dsoft);
    encode_backward(store_, "enc.", work[i].src, df);
  }
  return report;
}

Model Model::from_checkpoint(const std::string& path, ModelConfig cfg) {
  ParameterStore raw;
  load_checkpoint(raw, path);
  if (!raw.has("enc.embed") || !raw.has("enc.lstm.Wh"))
    throw DataError("checkpoint lacks encoder parameters: " + path);
  cfg.vocab = raw.value("enc.embed").dim(0);
  cfg.embed = raw.value("enc.embed").dim(1);
  cfg.hidden = raw.value("enc.lstm.Wh").dim(0);
  cfg.conv_width = raw.has("enc.conv") ? raw.value("enc.conv").dim(0) : 0;
  if (raw.has("disc.embed")) cfg.variant = Variant::EddLG;

  Model m(cfg);
  load_checkpoint_into(m.store_, path);
  return m;
}

}  // namespace pairdisc
