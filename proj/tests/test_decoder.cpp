#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pairdisc/decoder.hpp"
#include "pairdisc/encoder.hpp"
#include "pairdisc/gradcheck.hpp"

using namespace pairdisc;

namespace {

ParameterStore make_decoder(Index vocab, Index embed, Index hidden, std::uint64_t seed,
                            double scale) {
  ParameterStore s;
  add_decoder_params(s, vocab, embed, hidden);
  s.seal();
  s.init_uniform(seed, -scale, scale);
  return s;
}

}  // namespace

TEST_CASE("uniform logits give exactly ln V") {
  Matd logits = Matd::Zero(4, 17);
  const double nll = sequence_nll(logits, {3, 5, 9, 1});
  CHECK(nll == doctest::Approx(std::log(17.0)).epsilon(1e-12));

  // zero parameters produce uniform softmaxes through the whole path
  ParameterStore s;
  add_decoder_params(s, 17, 4, 4);
  s.seal();
  DecodeCache cache;
  RowVecd f = RowVecd::Zero(4);
  DecodeResult res = decode_teacher_forced(s, f, {5, 9, 3}, cache);
  CHECK(res.local_loss == doctest::Approx(std::log(17.0)).epsilon(1e-12));
}

TEST_CASE("near-one-hot logits give near-zero loss") {
  const Index V = 9;
  TokenSequence targets{4, 7, 3};
  Matd logits = Matd::Zero(3, V);
  for (Index s = 0; s < 3; ++s) {
    logits.row(s).setConstant(-40.0);
    logits(s, targets[static_cast<std::size_t>(s)]) = 40.0;
  }
  Matd soft;
  const double nll = sequence_nll(logits, targets, &soft);
  CHECK(nll < 1e-12);
  CHECK(soft(0, 4) > 1.0 - 1e-12);
}

TEST_CASE("log floor clamps underflowing targets and counts them") {
  Matd logits = Matd::Zero(1, 3);
  logits << 5000.0, 0.0, 0.0;
  int clamps = 0;
  const double nll = sequence_nll(logits, {1}, nullptr, &clamps);
  CHECK(clamps == 1);
  CHECK(nll == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("soft rows are distributions and STOP is appended") {
  ParameterStore s = make_decoder(11, 4, 6, 1, 0.4);
  DecodeCache cache;
  RowVecd f(6);
  f << 0.2, -0.4, 0.1, 0.9, -0.3, 0.5;
  decode_teacher_forced(s, f, {4, 8, 3, 10}, cache);
  CHECK(cache.soft.rows() == 5);  // T + 1 prediction steps
  for (Index t = 0; t < cache.soft.rows(); ++t)
    CHECK(std::abs(cache.soft.row(t).sum() - 1.0) < 1e-9);
  CHECK(cache.ext_targets.back() == Vocabulary::kStop);
  CHECK(sentence_soft_rows(cache).rows() == 4);
}

TEST_CASE("teacher-forced loss depends only on targets and logits") {
  ParameterStore s = make_decoder(11, 5, 5, 2, 0.4);
  RowVecd f(5);
  f << 1, -1, 0.5, 0.25, -0.75;
  DecodeCache c1, c2;
  const double l1 = decode_teacher_forced(s, f, {3, 4, 5}, c1).local_loss;
  const double l2 = decode_teacher_forced(s, f, {3, 4, 5}, c2).local_loss;
  CHECK(l1 == l2);
  CHECK(c1.soft == c2.soft);
}

TEST_CASE("fproj is present only when e differs from d") {
  ParameterStore a = make_decoder(8, 4, 4, 3, 0.1);
  CHECK(!a.has("dec.fproj"));
  ParameterStore b = make_decoder(8, 3, 5, 3, 0.1);
  CHECK(b.has("dec.fproj"));
  CHECK(b.value("dec.fproj").shape() == std::vector<Index>{5, 3});
}

TEST_CASE("local gradient matches finite differences, e == d and e != d") {
  struct Dims {
    Index v, e, d;
  };
  for (Dims dims : {Dims{10, 5, 5}, Dims{10, 3, 6}}) {
    ParameterStore s = make_decoder(dims.v, dims.e, dims.d, 4, 0.5);
    RowVecd f(dims.d);
    Rng rng(88);
    for (Index i = 0; i < dims.d; ++i) f[i] = rng.uniform(-0.8, 0.8);
    const TokenSequence target{4, 9, 3, 7};

    auto loss = [&](const ParameterStore& st) {
      DecodeCache c;
      LossEval ev;
      ev.value = decode_teacher_forced(st, f, target, c).local_loss;
      return ev;
    };
    s.zero_grads();
    DecodeCache cache;
    decode_teacher_forced(s, f, target, cache);
    decode_backward(s, cache, 1.0, nullptr);
    auto rep = finite_diff_check(loss, s, 1e-5, all_coords(s));
    INFO("dims e=", dims.e, " d=", dims.d);
    CHECK(rep.max_rel_error < 1e-4);
  }
}

TEST_CASE("the soft-route gradient reaches the decoder when local weight is zero") {
  ParameterStore s = make_decoder(9, 4, 4, 5, 0.5);
  RowVecd f(4);
  f << 0.3, -0.6, 0.2, 0.8;
  const TokenSequence target{5, 3, 8};

  DecodeCache cache;
  decode_teacher_forced(s, f, target, cache);
  // varying upstream: a constant row would sit in the softmax Jacobian's
  // null space and correctly produce a zero gradient
  Matd dsoft(3, 9);
  Rng drng(17);
  for (Index i = 0; i < dsoft.size(); ++i) dsoft.data()[i] = drng.uniform(-1, 1);

  s.zero_grads();
  decode_backward(s, cache, 0.0, &dsoft);
  CHECK(std::sqrt(s.grad_sq_norm()) > 1e-9);

  // upstream <dsoft, soft>: finite-difference the scalar against dec params
  auto loss = [&](const ParameterStore& st) {
    DecodeCache c;
    decode_teacher_forced(st, f, target, c);
    LossEval ev;
    ev.value = (sentence_soft_rows(c).array() * dsoft.array()).sum();
    return ev;
  };
  auto rep = finite_diff_check(loss, s, 1e-5, all_coords(s));
  CHECK(rep.max_rel_error < 1e-4);
}

TEST_CASE("zero weights accumulate nothing") {
  ParameterStore s = make_decoder(9, 4, 4, 6, 0.3);
  RowVecd f = RowVecd::Zero(4);
  DecodeCache cache;
  decode_teacher_forced(s, f, {4, 5}, cache);
  s.zero_grads();
  RowVecd df = decode_backward(s, cache, 0.0, nullptr);
  CHECK(std::sqrt(s.grad_sq_norm()) == 0.0);
  CHECK(df.norm() == 0.0);
}

TEST_CASE("greedy generation stops at STOP") {
  ParameterStore s = make_decoder(9, 4, 4, 7, 0.2);
  // bias rigged so STOP dominates every step
  s.value("dec.out.b").vec().setConstant(-10.0);
  s.value("dec.out.b")[Vocabulary::kStop] = 10.0;
  RowVecd f = RowVecd::Zero(4);
  CHECK(generate_greedy(s, f, 12).empty());
}

TEST_CASE("greedy generation is deterministic and capped by t_max") {
  ParameterStore s = make_decoder(9, 4, 4, 8, 0.4);
  s.value("dec.out.b")[Vocabulary::kStop] = -50.0;  // never stop
  RowVecd f(4);
  f << 0.1, 0.2, -0.3, 0.4;
  TokenSequence a = generate_greedy(s, f, 6);
  TokenSequence b = generate_greedy(s, f, 6);
  CHECK(a == b);
  CHECK(a.size() == 6);
}

TEST_CASE("argmax ties break toward the lowest id") {
  ParameterStore s;
  add_decoder_params(s, 7, 3, 3);
  s.seal();  // all-zero logits: every id ties
  RowVecd f = RowVecd::Zero(3);
  TokenSequence out = generate_greedy(s, f, 4);
  CHECK(out == TokenSequence{0, 0, 0, 0});  // id 0 wins each tie
}
