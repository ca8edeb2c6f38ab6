#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "pairdisc/checkpoint.hpp"
#include "pairdisc/cli.hpp"
#include "pairdisc/config.hpp"

using namespace pairdisc;
namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path root;
  Sandbox() : root(fs::temp_directory_path() / "pairdisc_cli_sandbox") {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }
  std::string file(const std::string& name, const std::string& content) const {
    const std::string path = (root / name).string();
    std::ofstream os(path, std::ios::trunc);
    os << content;
    return path;
  }
  std::string path(const std::string& name) const { return (root / name).string(); }
};

std::string toy_tsv() {
  std::string rows;
  const char* words[] = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot"};
  for (int i = 0; i < 8; ++i) {
    rows += std::string(words[i % 6]) + " " + words[(i + 1) % 6] + "\t" + words[(i + 2) % 6] + " " +
            words[(i + 3) % 6] + "\t1\n";
  }
  return rows;
}

const char* kConfig =
    "variant = EDD-LG-shared\n"
    "embed_dim = 6\n"
    "hidden_dim = 8\n"
    "batch_size = 4\n"
    "epochs = 2\n"
    "seed = 5\n"
    "learning_rate = 0.01\n";

}  // namespace

TEST_CASE("unknown subcommands and flags exit with usage errors") {
  CHECK(dispatch({"definitely-not-a-command"}) == 1);
  CHECK(dispatch({}) == 1);
  CHECK(dispatch({"train", "--bogus-flag", "x"}) == 1);
  CHECK(dispatch({"train"}) == 1);  // missing required options
}

TEST_CASE("gradcheck prints PASS and exits 0") {
  CHECK(dispatch({"gradcheck", "--samples", "40"}) == 0);
}

TEST_CASE("train, generate, eval, and sentiment flows") {
  Sandbox box;
  const std::string data = box.file("pairs.tsv", toy_tsv());
  const std::string config = box.file("train.cfg", kConfig);
  const std::string out = box.path("run");

  CHECK(dispatch({"train", "--config", config, "--data", data, "--out", out}) == 0);
  CHECK(fs::exists(out + "/final.ckpt"));
  CHECK(fs::exists(out + "/final.ckpt.vocab"));
  CHECK(fs::exists(out + "/initial.ckpt"));
  CHECK(fs::exists(out + "/metrics.tsv"));
  CHECK(fs::exists(out + "/manifest.txt"));

  KeyValueFile manifest = KeyValueFile::load(out + "/manifest.txt");
  CHECK(manifest.get("status", "") == "done");
  CHECK(manifest.has("train_digest"));
  CHECK(manifest.get("config.seed", "") == "5");

  const std::string inputs = box.file("inputs.txt", "alpha bravo\n\ncharlie delta\n");
  const std::string gen_out = box.path("gen.txt");
  CHECK(dispatch({"generate", "--ckpt", out + "/final.ckpt", "--in", inputs, "--out", gen_out}) == 0);
  std::ifstream gen(gen_out);
  std::string l1, l2, l3;
  std::getline(gen, l1);
  std::getline(gen, l2);
  std::getline(gen, l3);
  CHECK(l2.empty());  // empty input line passes through empty

  CHECK(dispatch({"eval", "--ckpt", out + "/final.ckpt", "--test", data, "--out",
                  box.path("hyps.txt")}) == 0);
  CHECK(fs::exists(box.path("hyps.txt")));

  // hyp/ref mode with matched and mismatched line counts
  const std::string hyp = box.file("hyp.txt", "a b\nc d\n");
  const std::string ref = box.file("ref.txt", "a b\nc d\n");
  CHECK(dispatch({"eval", "--hyp", hyp, "--ref", ref}) == 0);
  const std::string ref_short = box.file("ref1.txt", "a b\n");
  CHECK(dispatch({"eval", "--hyp", hyp, "--ref", ref_short}) == 2);

  // sentiment probe on the trained encoder
  std::string phrases;
  const char* sents[] = {"alpha bravo", "bravo charlie", "charlie delta", "delta echo",
                         "echo foxtrot"};
  for (int i = 0; i < 20; ++i)
    phrases += std::to_string(i) + "\t" + sents[i % 5] + "\t" + std::to_string(i % 5) + "\n";
  const std::string sdata = box.file("phrases.tsv", phrases);
  const std::string probe = box.path("probe.ckpt");
  CHECK(dispatch({"sentiment", "train", "--ckpt", out + "/final.ckpt", "--data", sdata, "--out",
                  probe, "--epochs", "3"}) == 0);
  CHECK(fs::exists(probe));
  CHECK(dispatch({"sentiment", "eval", "--probe", probe, "--data", sdata}) == 0);

  // resume with verified digests; then corrupt the data file
  CHECK(dispatch({"train", "--config", config, "--data", data, "--out", out, "--resume",
                  out + "/final.ckpt"}) == 0);
  box.file("pairs.tsv", toy_tsv() + "extra row\there\t1\n");
  CHECK(dispatch({"train", "--config", config, "--data", data, "--out", out, "--resume",
                  out + "/final.ckpt"}) == 2);
}

TEST_CASE("data errors exit 2") {
  Sandbox box;
  const std::string config = box.file("c.cfg", kConfig);
  CHECK(dispatch({"train", "--config", config, "--data", box.path("missing.tsv"), "--out",
                  box.path("run")}) == 2);
  const std::string bad = box.file("bad.tsv", "only two\tcolumns\n");
  CHECK(dispatch({"train", "--config", config, "--data", bad, "--out", box.path("run")}) == 2);
  const std::string badcfg = box.file("bad.cfg", "unknown_key = 1\n");
  const std::string data = box.file("ok.tsv", toy_tsv());
  CHECK(dispatch({"train", "--config", badcfg, "--data", data, "--out", box.path("run")}) == 2);
}

TEST_CASE("PAIRDISC_SEED overrides the config seed") {
  Sandbox box;
  const std::string data = box.file("pairs.tsv", toy_tsv());
  const std::string config = box.file("train.cfg", kConfig);

  setenv("PAIRDISC_SEED", "777", 1);
  CHECK(dispatch({"train", "--config", config, "--data", data, "--out", box.path("r1")}) == 0);
  unsetenv("PAIRDISC_SEED");
  CHECK(dispatch({"train", "--config", config, "--data", data, "--out", box.path("r2")}) == 0);

  KeyValueFile m1 = KeyValueFile::load(box.path("r1") + "/manifest.txt");
  KeyValueFile m2 = KeyValueFile::load(box.path("r2") + "/manifest.txt");
  CHECK(m1.get("seed", "") == "777");
  CHECK(m2.get("seed", "") == "5");

  std::ifstream f1(box.path("r1") + "/final.ckpt", std::ios::binary);
  std::ifstream f2(box.path("r2") + "/final.ckpt", std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 != b2);  // different seeds, different parameters

  setenv("PAIRDISC_SEED", "not-a-number", 1);
  CHECK(dispatch({"train", "--config", config, "--data", data, "--out", box.path("r3")}) == 2);
  unsetenv("PAIRDISC_SEED");
}
