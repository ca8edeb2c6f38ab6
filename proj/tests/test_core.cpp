#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pairdisc/checkpoint.hpp"
#include "pairdisc/gradcheck.hpp"
#include "pairdisc/param_store.hpp"
#include "pairdisc/tensor.hpp"

using namespace pairdisc;

TEST_CASE("tensor shape and data invariants") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(t.vec().norm() == 0.0);
  CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor(std::vector<Index>{}), std::invalid_argument);

  Tensor r3({2, 3, 3});
  CHECK(r3.slice(1).rows() == 3);
  CHECK_THROWS_AS(r3.mat(), std::invalid_argument);
  CHECK_THROWS_AS(r3.slice(2), std::invalid_argument);
}

TEST_CASE("matmul identity") {
  auto I = Tensor::from_rows({{1, 0}, {0, 1}});
  auto B = Tensor::from_rows({{3, 4}, {5, 6}});
  Tensor C = matmul(I, B);
  CHECK(C.mat() == B.mat());
}

TEST_CASE("matmul hand example") {
  auto a = Tensor::from_rows({{1, 2}});
  auto b = Tensor::from_rows({{3}, {4}});
  Tensor c = matmul(a, b);
  CHECK(c.size() == 1);
  CHECK(c[0] == 11.0);
}

TEST_CASE("matmul zero annihilates") {
  Tensor z({3, 2});
  auto b = Tensor::from_rows({{1, -2, 7}, {0, 4, 2}});
  Tensor c = matmul(z, b);
  CHECK(c.vec().norm() == 0.0);
}

TEST_CASE("matmul rejects shape mismatch") {
  Tensor a({2, 3}), b({2, 3});
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("matmul rejects non-finite results") {
  auto a = Tensor::from_rows({{1e308, 1e308}});
  auto b = Tensor::from_rows({{1e10}, {1e10}});
  CHECK_THROWS_AS(matmul(a, b), NumericError);
}

namespace {

ParameterStore scalar_store(double value) {
  ParameterStore s;
  s.add("theta", {1});
  s.value("theta")[0] = value;
  s.seal();
  return s;
}

}  // namespace

TEST_CASE("rmsprop zero gradient preserves values and decays rms") {
  ParameterStore s = scalar_store(1.5);
  s.entry("theta").rms[0] = 0.2;
  RmsPropConfig cfg{0.1, 0.99, 1e-8, 1.0};
  rmsprop_step(s, cfg);
  CHECK(s.value("theta")[0] == 1.5);
  CHECK(s.entry("theta").rms[0] == doctest::Approx(0.99 * 0.2).epsilon(1e-15));
}

TEST_CASE("rmsprop single step matches the update rule") {
  ParameterStore s = scalar_store(0.0);
  s.grad("theta")[0] = 1.0;
  RmsPropConfig cfg{0.1, 0.99, 1e-8, 1.0};
  rmsprop_step(s, cfg);
  CHECK(s.entry("theta").rms[0] == doctest::Approx(0.01).epsilon(1e-15));
  const double expected = -0.1 * 1.0 / (std::sqrt(0.01) + 1e-8);
  CHECK(s.value("theta")[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(s.grad("theta")[0] == 0.0);  // grads zeroed after the step
}

TEST_CASE("rmsprop repeated steps agree with a scalar simulator") {
  ParameterStore s = scalar_store(2.0);
  RmsPropConfig cfg{0.05, 0.9, 1e-8, 1.0};

  double sim_v = 2.0, sim_r = 0.0;
  for (int step = 0; step < 7; ++step) {
    const double g = 0.8;
    s.grad("theta")[0] = g;
    rmsprop_step(s, cfg);
    sim_r = 0.9 * sim_r + 0.1 * g * g;
    sim_v -= 0.05 * g / (std::sqrt(sim_r) + 1e-8);
    CHECK(s.value("theta")[0] == doctest::Approx(sim_v).epsilon(1e-15));
  }
  // the second identical-gradient step moves less than the first
  ParameterStore t = scalar_store(0.0);
  t.grad("theta")[0] = 1.0;
  rmsprop_step(t, cfg);
  const double first = std::abs(t.value("theta")[0]);
  const double before = t.value("theta")[0];
  t.grad("theta")[0] = 1.0;
  rmsprop_step(t, cfg);
  CHECK(std::abs(t.value("theta")[0] - before) < first);
}

TEST_CASE("rmsprop aborts on non-finite gradients naming the parameter") {
  ParameterStore s;
  s.add("enc.weird", {2});
  s.seal();
  s.grad("enc.weird")[1] = std::numeric_limits<double>::quiet_NaN();
  RmsPropConfig cfg;
  try {
    rmsprop_step(s, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("enc.weird") != std::string::npos);
  }
  CHECK(s.value("enc.weird")[0] == 0.0);  // no partial update
}

TEST_CASE("epoch decay factor matches the closed form") {
  const double factor = schedule_decay_factor(1500, 1250);
  const double expected = std::exp(std::log(0.1) / 1875000.0);
  CHECK(std::abs(factor - expected) <= 1e-15 * std::abs(expected));

  RmsPropConfig cfg{0.0008, 0.99, 1e-8, factor};
  RmsPropConfig next = epoch_decay(cfg);
  CHECK(next.learning_rate == 0.0008 * factor);

  cfg.decay_factor = 1.0;
  CHECK(epoch_decay(cfg).learning_rate == cfg.learning_rate);
}

TEST_CASE("1.875M decay applications divide the rate by 10") {
  RmsPropConfig cfg{0.0008, 0.99, 1e-8, schedule_decay_factor(1500, 1250)};
  for (long i = 0; i < 1875000; ++i) cfg = epoch_decay(cfg);
  CHECK(cfg.learning_rate == doctest::Approx(0.00008).epsilon(1e-9));
}

TEST_CASE("finite_diff_check on a quadratic") {
  ParameterStore s;
  s.add("theta", {5});
  s.seal();
  Rng rng(11);
  for (Index i = 0; i < 5; ++i) s.value("theta")[i] = rng.uniform(-2, 2);

  auto loss = [](const ParameterStore& st) {
    LossEval ev;
    ev.value = 0.5 * st.value("theta").vec().squaredNorm();
    return ev;
  };
  s.grad("theta").vec() = s.value("theta").vec();  // analytic gradient of a quadratic
  auto rep = finite_diff_check(loss, s, 1e-5, all_coords(s));
  CHECK(rep.checked == 5);
  CHECK(rep.max_rel_error < 1e-9);
}

TEST_CASE("finite_diff_check skips hinge-kink coordinates") {
  const double h = 1e-5;
  ParameterStore s = scalar_store(0.5 * h);  // max(0, theta): kink within 10h
  auto loss = [](const ParameterStore& st) {
    LossEval ev;
    const double theta = st.value("theta")[0];
    ev.value = std::max(0.0, theta);
    ev.kink_distance = std::abs(theta);
    return ev;
  };
  s.grad("theta")[0] = 1.0;
  auto rep = finite_diff_check(loss, s, h, all_coords(s));
  CHECK(rep.checked == 0);
  CHECK(rep.skipped_kink == 1);

  // far from the kink the same hinge checks cleanly
  s.value("theta")[0] = 2.0;
  rep = finite_diff_check(loss, s, h, all_coords(s));
  CHECK(rep.checked == 1);
  CHECK(rep.max_rel_error < 1e-9);
}

TEST_CASE("finite_diff_check detects a non-deterministic loss") {
  ParameterStore s = scalar_store(1.0);
  int calls = 0;
  auto loss = [&calls](const ParameterStore& st) {
    LossEval ev;
    ev.value = st.value("theta")[0] + 1e-3 * (calls++);
    return ev;
  };
  CHECK_THROWS_AS(finite_diff_check(loss, s, 1e-5, all_coords(s)), std::logic_error);
}

TEST_CASE("parameter store rejects duplicates and post-seal adds") {
  ParameterStore s;
  s.add("a", {2});
  CHECK_THROWS_AS(s.add("a", {2}), std::invalid_argument);
  s.seal();
  CHECK_THROWS_AS(s.add("b", {2}), std::logic_error);
  CHECK_THROWS_AS(s.value("missing"), std::invalid_argument);
}

TEST_CASE("per-name init is independent of the parameter set") {
  ParameterStore a;
  a.add("x", {4});
  a.seal();
  a.init_uniform(42, -0.08, 0.08);

  ParameterStore b;
  b.add("x", {4});
  b.add("y", {4});
  b.seal();
  b.init_uniform(42, -0.08, 0.08);

  CHECK(a.value("x").vec() == b.value("x").vec());
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(b.value("y")[i]) <= 0.08);
    CHECK(b.value("y")[i] != b.value("x")[i]);
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "pairdisc_ckpt_test.bin").string();

  ParameterStore s;
  s.add("enc.embed", {7, 3});
  s.add("enc.lstm.b", {12});
  s.add("k3", {2, 3, 3});
  s.seal();
  s.init_uniform(99, -1, 1);
  s.entry("enc.embed").rms.vec().setConstant(0.125);
  save_checkpoint(s, path);

  ParameterStore loaded;
  load_checkpoint(loaded, path);
  CHECK(loaded.count() == 3);
  CHECK(loaded.value("enc.embed").shape() == std::vector<Index>{7, 3});
  CHECK(loaded.value("enc.embed").vec() == s.value("enc.embed").vec());
  CHECK(loaded.entry("enc.embed").rms.vec() == s.entry("enc.embed").rms.vec());
  CHECK(loaded.value("k3").shape() == std::vector<Index>{2, 3, 3});

  // byte-identical re-serialization
  const std::string path2 = path + ".2";
  save_checkpoint(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("checkpoint rejects bad magic and name mismatches") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "pairdisc_ckpt_bad.bin").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTMAGIC" << std::string(64, '\0');
  }
  ParameterStore s;
  CHECK_THROWS_AS(load_checkpoint(s, path), DataError);

  ParameterStore good;
  good.add("a", {2});
  good.seal();
  save_checkpoint(good, path);

  ParameterStore other;
  other.add("b", {2});
  other.seal();
  CHECK_THROWS_AS(load_checkpoint_into(other, path), DataError);
  fs::remove(path);
}

TEST_CASE("rng shuffle and draws are deterministic") {
  Rng a(123), b(123);
  std::vector<int> va{1, 2, 3, 4, 5, 6, 7}, vb = va;
  a.shuffle(va);
  b.shuffle(vb);
  CHECK(va == vb);
  CHECK(a.uniform() == b.uniform());
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform(-0.08, 0.08);
    CHECK(u >= -0.08);
    CHECK(u < 0.08);
  }
}
