#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "pairdisc/gradcheck.hpp"
#include "pairdisc/sentiment.hpp"
#include "pairdisc/trainer.hpp"
#include "toy_data.hpp"

using namespace pairdisc;

namespace {

// five well-separated gaussian-ish blobs in R^d
void make_blobs(Index n_per_class, Index d, std::uint64_t seed, Matd& X, std::vector<int>& y) {
  Rng rng(seed);
  X.resize(5 * n_per_class, d);
  y.clear();
  for (int c = 0; c < 5; ++c) {
    RowVecd center = RowVecd::Zero(d);
    center[c % d] = 4.0 * (1 + c / static_cast<int>(d));
    if (c >= d) center[(c + 1) % d] = -4.0;
    for (Index i = 0; i < n_per_class; ++i) {
      RowVecd noise(d);
      for (Index k = 0; k < d; ++k) noise[k] = rng.uniform(-0.5, 0.5);
      X.row(c * n_per_class + i) = center + noise;
      y.push_back(c);
    }
  }
}

}  // namespace

TEST_CASE("zero-epoch training yields the uniform predictor at ln 5") {
  Matd X;
  std::vector<int> y;
  make_blobs(8, 6, 1, X, y);
  LogRegConfig cfg;
  cfg.epochs = 0;
  auto res = train_logreg(X, y, cfg);
  CHECK(res.params.W.norm() == 0.0);
  CHECK(res.params.b.norm() == 0.0);
  CHECK(softmax_xent(res.params, X, y) == doctest::Approx(std::log(5.0)).epsilon(1e-12));

  Matd probs;
  auto preds = predict(res.params, X, &probs);
  for (int p : preds) CHECK(p == 0);  // uniform rows tie, the lowest class wins
  for (Index i = 0; i < probs.rows(); ++i)
    for (Index c = 0; c < 5; ++c) CHECK(probs(i, c) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("separable blobs train to at least 99% accuracy") {
  Matd X;
  std::vector<int> y;
  make_blobs(30, 8, 2, X, y);
  LogRegConfig cfg;
  cfg.rms.learning_rate = 0.02;  // desk-scale rate for the synthetic probe
  cfg.epochs = 60;
  cfg.batch_size = 25;
  cfg.seed = 3;
  auto res = train_logreg(X, y, cfg);
  const double acc = 1.0 - error_rate(predict(res.params, X), y);
  CHECK(acc >= 0.99);
  CHECK(res.epoch_loss.back() < res.epoch_loss.front());
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
  Matd X;
  std::vector<int> y;
  make_blobs(4, 5, 4, X, y);

  ParameterStore store;
  store.add("logreg.W", {5, 5});
  store.add("logreg.b", {5});
  store.seal();
  store.init_uniform(9, -0.5, 0.5);

  auto params_of = [&](const ParameterStore& s) {
    return LogRegParams{Matd(s.value("logreg.W").mat()), RowVecd(s.value("logreg.b").mat().row(0))};
  };
  auto loss = [&](const ParameterStore& s) {
    LossEval ev;
    ev.value = softmax_xent(params_of(s), X, y);
    return ev;
  };

  // analytic gradient
  LogRegParams p = params_of(store);
  Matd probs = softmax_rows((X * p.W.transpose()).rowwise() + p.b);
  Matd dlogits = probs;
  for (Index i = 0; i < X.rows(); ++i) dlogits(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  dlogits /= static_cast<double>(X.rows());
  store.grad("logreg.W").mat() = dlogits.transpose() * X;
  store.grad("logreg.b").mat() = dlogits.colwise().sum();

  auto rep = finite_diff_check(loss, store, 1e-6, all_coords(store));
  CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("softmax rows sum to one and argmax ignores constant shifts") {
  Matd X;
  std::vector<int> y;
  make_blobs(5, 4, 5, X, y);
  LogRegParams p{Matd::Random(5, 4), RowVecd::Random(5)};
  Matd probs;
  auto preds = predict(p, X, &probs);
  for (Index i = 0; i < probs.rows(); ++i)
    CHECK(std::abs(probs.row(i).sum() - 1.0) < 1e-9);

  LogRegParams shifted = p;
  shifted.b.array() += 7.5;  // constant logit shift
  CHECK(predict(shifted, X) == preds);
}

TEST_CASE("bias domination forces one class") {
  Matd X = Matd::Random(6, 4);
  LogRegParams p{Matd::Zero(5, 4), RowVecd::Zero(5)};
  p.b[3] = 50.0;
  for (int c : predict(p, X)) CHECK(c == 3);
}

TEST_CASE("single-class data trains with a warning rather than failing") {
  Matd X = Matd::Random(10, 3);
  std::vector<int> y(10, 2);
  LogRegConfig cfg;
  cfg.epochs = 2;
  CHECK_NOTHROW(train_logreg(X, y, cfg));
  std::vector<int> bad(10, 7);
  CHECK_THROWS_AS(train_logreg(X, bad, cfg), DataError);
}

TEST_CASE("error rate is one minus accuracy") {
  std::vector<int> pred{0, 1, 2, 3, 4};
  std::vector<int> gold{0, 1, 2, 0, 0};
  CHECK(error_rate(pred, gold) == doctest::Approx(0.4));
  CHECK_THROWS_AS(error_rate(pred, std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("frozen encoder: probe training never touches enc parameters") {
  using pairdisc::testing::toy_corpus;
  TrainConfig cfg;
  cfg.embed = 6;
  cfg.hidden = 10;
  cfg.batch_size = 5;
  cfg.epochs = 1;
  cfg.seed = 3;
  Trainer t(cfg, toy_corpus(), {});
  t.run("");

  const std::uint64_t checksum_before = t.model().store().value_checksum();

  std::vector<LabeledPhrase> phrases;
  const auto& bank = pairdisc::testing::word_bank();
  for (int i = 0; i < 25; ++i)
    phrases.push_back({{bank[i % bank.size()], bank[(i + 2) % bank.size()]}, i % 5});

  Matd X = embed_phrases(t.model(), t.vocab(), phrases);
  std::vector<int> labels;
  for (const auto& p : phrases) labels.push_back(p.label);
  LogRegConfig lr_cfg;
  lr_cfg.epochs = 10;
  lr_cfg.rms.learning_rate = 0.01;
  auto res = train_logreg(X, labels, lr_cfg);

  CHECK(t.model().store().value_checksum() == checksum_before);

  // identical phrases embed identically, train or test time
  Matd again = embed_phrases(t.model(), t.vocab(), phrases);
  CHECK(X == again);

  // single-token phrase equals a length-1 encode
  std::vector<LabeledPhrase> single{{{bank[0]}, 0}};
  Matd one = embed_phrases(t.model(), t.vocab(), single);
  RowVecd direct = t.model().encode_sentence(t.vocab().encode({bank[0]}));
  CHECK(one.row(0) == direct);

  // probe round-trip through its save format
  namespace fs = std::filesystem;
  const std::string probe_path = (fs::temp_directory_path() / "pairdisc_probe_test.ckpt").string();
  save_probe(probe_path, res.params, t.model(), t.vocab());
  Probe probe = load_probe(probe_path);
  CHECK(probe.params.W == res.params.W);
  CHECK(probe.params.b == res.params.b);
  Matd reembedded = embed_phrases(probe.model, probe.vocab, phrases);
  CHECK(reembedded == X);
  fs::remove(probe_path);
  fs::remove(probe_path + ".vocab");
}
