#include "pairdisc/sentiment.hpp"

#include <iostream>
#include <set>

#include "pairdisc/checkpoint.hpp"

namespace pairdisc {

Matd embed_phrases(const Model& model, const Vocabulary& vocab,
                   const std::vector<LabeledPhrase>& phrases) {
  Matd out(static_cast<Index>(phrases.size()), model.config().hidden);
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (phrases[i].tokens.empty()) throw DataError("empty phrase at row " + std::to_string(i));
    out.row(static_cast<Index>(i)) = model.encode_sentence(vocab.encode(phrases[i].tokens));
  }
  return out;
}

Matd softmax_rows(const Matd& logits) {
  Matd p(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    RowVecd ex = (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
    p.row(i) = ex / ex.sum();
  }
  return p;
}

double softmax_xent(const LogRegParams& params, const Matd& X, const std::vector<int>& labels) {
  Matd probs = softmax_rows((X * params.W.transpose()).rowwise() + params.b);
  double loss = 0;
  for (Index i = 0; i < X.rows(); ++i)
    loss -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  return loss / static_cast<double>(X.rows());
}

LogRegTrainResult train_logreg(const Matd& X, const std::vector<int>& labels,
                               const LogRegConfig& cfg) {
  if (X.rows() != static_cast<Index>(labels.size()))
    throw std::invalid_argument("train_logreg: row/label count mismatch");
  if (X.rows() == 0) throw std::invalid_argument("train_logreg: no data");
  std::set<int> classes;
  for (int y : labels) {
    if (y < 0 || y >= kSentimentClasses)
      throw DataError("label out of range 0..4: " + std::to_string(y));
    classes.insert(y);
  }
  if (classes.size() < 2)
    std::cerr << "warning: training data contains a single class; the probe will be degenerate\n";

  const Index d = X.cols();
  ParameterStore store;
  store.add("logreg.W", {kSentimentClasses, d});
  store.add("logreg.b", {kSentimentClasses});
  store.seal();  // zero init: zero-epoch probes predict uniformly

  LogRegTrainResult out;
  const std::size_t n = static_cast<std::size_t>(X.rows());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto batches = make_batches(n, static_cast<std::size_t>(cfg.batch_size), cfg.seed,
                                static_cast<std::uint64_t>(epoch), /*drop_short=*/false);
    double epoch_loss = 0;
    for (const auto& idx : batches) {
      auto W = store.value("logreg.W").mat();
      auto b = store.value("logreg.b").mat();
      const Index B = static_cast<Index>(idx.size());
      Matd Xb(B, d);
      for (Index r = 0; r < B; ++r) Xb.row(r) = X.row(static_cast<Index>(idx[static_cast<std::size_t>(r)]));
      Matd probs = softmax_rows((Xb * W.transpose()).rowwise() + b.row(0));

      Matd dlogits = probs;
      double batch_loss = 0;
      for (Index r = 0; r < B; ++r) {
        const int y = labels[idx[static_cast<std::size_t>(r)]];
        batch_loss -= std::log(std::max(probs(r, y), 1e-300));
        dlogits(r, y) -= 1.0;
      }
      dlogits /= static_cast<double>(B);
      store.grad("logreg.W").mat().noalias() += dlogits.transpose() * Xb;
      store.grad("logreg.b").mat().noalias() += dlogits.colwise().sum();
      rmsprop_step(store, cfg.rms);
      epoch_loss += batch_loss / static_cast<double>(B);
    }
    out.epoch_loss.push_back(batches.empty() ? 0.0 : epoch_loss / static_cast<double>(batches.size()));
  }

  out.params.W = store.value("logreg.W").mat();
  out.params.b = store.value("logreg.b").mat().row(0);
  return out;
}

std::vector<int> predict(const LogRegParams& params, const Matd& X, Matd* probs) {
  if (X.cols() != params.W.cols()) throw std::invalid_argument("predict: dimension mismatch");
  Matd p = softmax_rows((X * params.W.transpose()).rowwise() + params.b);
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Index i = 0; i < X.rows(); ++i) {
    Index best = 0;
    p.row(i).maxCoeff(&best);  // first maximum: lowest class id on ties
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  if (probs) *probs = std::move(p);
  return out;
}

double error_rate(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("error_rate: length mismatch");
  if (predictions.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] != labels[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

void save_probe(const std::string& path, const LogRegParams& params, const Model& model,
                const Vocabulary& vocab) {
  ParameterStore store;
  model.store().for_each([&](const std::string& name, const ParamEntry& e) {
    if (name.rfind("enc.", 0) == 0) {
      store.add(name, e.value.shape());
      store.value(name).vec() = e.value.vec();
    }
  });
  store.add("logreg.W", {kSentimentClasses, params.W.cols()});
  store.value("logreg.W").mat() = params.W;
  store.add("logreg.b", {kSentimentClasses});
  store.value("logreg.b").mat() = params.b;
  save_checkpoint(store, path);
  vocab.save(path + ".vocab");
}

Probe load_probe(const std::string& path) {
  ParameterStore raw;
  load_checkpoint(raw, path);
  if (!raw.has("logreg.W") || !raw.has("enc.embed"))
    throw DataError("not a sentiment probe file: " + path);

  ModelConfig mc;
  mc.vocab = raw.value("enc.embed").dim(0);
  mc.embed = raw.value("enc.embed").dim(1);
  mc.hidden = raw.value("enc.lstm.Wh").dim(0);
  mc.conv_width = raw.has("enc.conv") ? raw.value("enc.conv").dim(0) : 0;
  Model model(mc);
  model.store().for_each([&](const std::string& name, ParamEntry& e) {
    if (raw.has(name)) e.value.vec() = raw.value(name).vec();
  });

  Probe probe{LogRegParams{raw.value("logreg.W").mat(), raw.value("logreg.b").mat().row(0)},
              std::move(model), Vocabulary::load(path + ".vocab")};
  if (probe.vocab.size() != probe.model.config().vocab)
    throw DataError("probe vocabulary does not match encoder: " + path);
  return probe;
}

}  // namespace pairdisc
