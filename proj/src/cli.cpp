#include "pairdisc/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pairdisc/checkpoint.hpp"
#include "pairdisc/gradcheck.hpp"
#include "pairdisc/sentiment.hpp"
#include "pairdisc/trainer.hpp"

namespace pairdisc {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::uint64_t seed_override(std::uint64_t seed) {
  if (const char* env = std::getenv("PAIRDISC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw DataError(std::string("PAIRDISC_SEED is not an unsigned integer: ") + env);
    }
  }
  return seed;
}

struct TrainArgs {
  std::string config, data, out, val, split, val_split, resume;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = TrainConfig::from_kv(KeyValueFile::load(a.config), a.config);
  cfg.seed = seed_override(cfg.seed);

  auto train_raw = load_pairs(a.data, cfg.t_max);
  if (!a.split.empty()) train_raw = apply_split(train_raw, load_split_indices(a.split));
  std::vector<RawPair> val_raw;
  if (!a.val.empty()) {
    val_raw = load_pairs(a.val, cfg.t_max);
    if (!a.val_split.empty()) val_raw = apply_split(val_raw, load_split_indices(a.val_split));
  }

  std::filesystem::create_directories(a.out);
  const std::string manifest = a.out + "/manifest.txt";
  if (!a.resume.empty() && std::filesystem::exists(manifest)) verify_manifest_digests(manifest);

  std::vector<std::pair<std::string, std::string>> files{{"train", a.data}};
  if (!a.val.empty()) files.emplace_back("val", a.val);
  if (!a.split.empty()) files.emplace_back("train_split", a.split);
  if (!a.val_split.empty()) files.emplace_back("val_split", a.val_split);
  write_manifest(manifest, cfg, files, "running");

  Trainer trainer(cfg, train_raw, val_raw);
  if (!a.resume.empty()) trainer.resume_from(a.resume);
  auto log = trainer.run(a.out);
  finish_manifest(manifest);

  if (!log.empty()) {
    const auto& last = log.back();
    std::cout << "epoch " << last.epoch << " train_total " << last.train_total << " val_total "
              << last.val_total << "\n";
  }
  std::cout << "final checkpoint: " << a.out << "/final.ckpt\n";
  return 0;
}

int run_generate(const std::string& ckpt, const std::string& in, const std::string& out,
                 int t_max) {
  Model model = Model::from_checkpoint(ckpt, ModelConfig{});
  Vocabulary vocab = Vocabulary::load(ckpt + ".vocab");
  if (vocab.size() != model.config().vocab)
    throw DataError("vocabulary does not match checkpoint: " + ckpt);

  std::ofstream os(out, std::ios::trunc);
  if (!os) throw DataError("cannot write: " + out);
  for (const std::string& line : read_lines(in)) {
    auto tokens = tokenize(line);
    if (tokens.empty()) {
      os << '\n';
      continue;
    }
    os << vocab.decode_to_string(model.generate(vocab.encode(tokens), t_max)) << '\n';
  }
  return 0;
}

std::vector<Sentence> tokenize_lines(const std::vector<std::string>& lines) {
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(tokenize(l));
  return out;
}

void print_report(const MetricReport& rep) {
  std::cout << rep.to_tsv() << rep.to_json() << "\n";
}

int run_eval(const std::string& ckpt, const std::string& test, const std::string& hyp,
             const std::string& ref, const std::string& out_hyp, int t_max, int rouge_order,
             bool smooth) {
  if (!hyp.empty() || !ref.empty()) {
    if (hyp.empty() || ref.empty()) throw DataError("--hyp and --ref must be given together");
    auto hyps = read_lines(hyp);
    auto refs = read_lines(ref);
    if (hyps.size() != refs.size())
      throw DataError("line count mismatch between " + hyp + " (" + std::to_string(hyps.size()) +
                      ") and " + ref + " (" + std::to_string(refs.size()) + ")");
    print_report(score_corpus(tokenize_lines(hyps), tokenize_lines(refs), rouge_order, smooth));
    return 0;
  }
  if (ckpt.empty() || test.empty())
    throw DataError("eval needs either --ckpt and --test, or --hyp and --ref");

  Model model = Model::from_checkpoint(ckpt, ModelConfig{});
  Vocabulary vocab = Vocabulary::load(ckpt + ".vocab");
  auto pairs = encode_pairs(load_pairs(test, t_max), vocab);
  if (pairs.empty()) throw DataError("no flag-1 pairs in " + test);
  EvalResult res = evaluate_pairs(model, vocab, pairs, t_max, rouge_order, smooth);
  if (!out_hyp.empty()) {
    std::ofstream os(out_hyp, std::ios::trunc);
    if (!os) throw DataError("cannot write: " + out_hyp);
    for (const auto& s : res.hypotheses) {
      for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << s[i];
      os << '\n';
    }
  }
  print_report(res.report);
  return 0;
}

int run_sentiment_train(const std::string& ckpt, const std::string& data, const std::string& out,
                        int epochs, int batch, double lr, std::uint64_t seed) {
  Model model = Model::from_checkpoint(ckpt, ModelConfig{});
  Vocabulary vocab = Vocabulary::load(ckpt + ".vocab");
  auto phrases = load_labeled_phrases(data);
  if (phrases.empty()) throw DataError("no phrases in " + data);

  Matd X = embed_phrases(model, vocab, phrases);
  std::vector<int> labels;
  labels.reserve(phrases.size());
  for (const auto& p : phrases) labels.push_back(p.label);

  LogRegConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.rms.learning_rate = lr;
  cfg.seed = seed_override(seed);
  auto result = train_logreg(X, labels, cfg);

  const double train_err = error_rate(predict(result.params, X), labels);
  std::cout << "train_error_rate\t" << train_err << "\n";
  if (!result.epoch_loss.empty())
    std::cout << "final_epoch_loss\t" << result.epoch_loss.back() << "\n";
  save_probe(out, result.params, model, vocab);
  std::cout << "probe: " << out << "\n";
  return 0;
}

int run_sentiment_eval(const std::string& probe_path, const std::string& data) {
  Probe probe = load_probe(probe_path);
  auto phrases = load_labeled_phrases(data);
  if (phrases.empty()) throw DataError("no phrases in " + data);
  Matd X = embed_phrases(probe.model, probe.vocab, phrases);
  std::vector<int> labels;
  labels.reserve(phrases.size());
  for (const auto& p : phrases) labels.push_back(p.label);
  const double err = error_rate(predict(probe.params, X), labels);
  std::cout << "error_rate\t" << err << "\n";
  std::cout << "{\"error_rate\": " << err << ", \"phrases\": " << phrases.size() << "}\n";
  return 0;
}

int run_gradcheck(Index vocab, Index embed, Index hidden, Index conv, int batch, int t_max,
                  std::size_t samples, double h, std::uint64_t seed, double tol) {
  ModelConfig mc;
  mc.vocab = vocab;
  mc.embed = embed;
  mc.hidden = hidden;
  mc.conv_width = conv;
  mc.variant = Variant::EddLGShared;
  Model model(mc);
  init_for_gradcheck(model.store(), seed);

  Rng rng(mix_seed(seed, "gradcheck-data"));
  std::vector<ParaphrasePair> batch_pairs;
  for (int i = 0; i < batch; ++i) {
    ParaphrasePair p;
    const auto len = [&] { return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(t_max))); };
    for (int t = 0, L = len(); t < L; ++t)
      p.source.push_back(Vocabulary::kReserved +
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab - Vocabulary::kReserved))));
    for (int t = 0, L = len(); t < L; ++t)
      p.target.push_back(Vocabulary::kReserved +
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab - Vocabulary::kReserved))));
    batch_pairs.push_back(std::move(p));
  }

  model.store().zero_grads();
  model.batch_backward(batch_pairs);
  auto coords = sample_coords(model.store(), samples, rng);
  auto report = finite_diff_check(
      [&](const ParameterStore&) { return model.batch_loss(batch_pairs); }, model.store(), h,
      coords);

  std::cout << "coordinates checked\t" << report.checked << "\n";
  std::cout << "kink-skipped\t" << report.skipped_kink << "\n";
  std::cout << "max relative error\t" << report.max_rel_error << "\n";
  if (report.checked > 0 && report.max_rel_error < tol) {
    std::cout << "PASS (tolerance " << tol << ")\n";
    return 0;
  }
  std::cout << "FAIL (tolerance " << tol << ")\n";
  return 3;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"paraphrase generation with a pairwise-discriminator encoder-decoder"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", ta.config, "key = value config file")->required();
  train->add_option("--data", ta.data, "paraphrase TSV (q1<TAB>q2<TAB>is_duplicate)")->required();
  train->add_option("--out", ta.out, "run directory")->required();
  train->add_option("--val", ta.val, "validation TSV (defaults to the training set)");
  train->add_option("--split", ta.split, "row-index file selecting training rows");
  train->add_option("--val-split", ta.val_split, "row-index file selecting validation rows");
  train->add_option("--resume", ta.resume, "checkpoint to continue from");

  std::string g_ckpt, g_in, g_out;
  int g_tmax = 30;
  auto* gen = app.add_subcommand("generate", "greedy-decode one paraphrase per input line");
  gen->add_option("--ckpt", g_ckpt)->required();
  gen->add_option("--in", g_in, "input sentences, one per line")->required();
  gen->add_option("--out", g_out, "output file")->required();
  gen->add_option("--tmax", g_tmax, "max generated tokens");

  std::string e_ckpt, e_test, e_hyp, e_ref, e_out;
  int e_tmax = 30, e_rouge = 2;
  bool e_smooth = false;
  auto* ev = app.add_subcommand("eval", "score generations with BLEU/ROUGE/METEOR/TER");
  ev->add_option("--ckpt", e_ckpt, "checkpoint (with --test)");
  ev->add_option("--test", e_test, "paraphrase TSV to generate from and score");
  ev->add_option("--hyp", e_hyp, "hypothesis file (with --ref)");
  ev->add_option("--ref", e_ref, "reference file");
  ev->add_option("--out", e_out, "write generated hypotheses here");
  ev->add_option("--tmax", e_tmax);
  ev->add_option("--rouge-n", e_rouge, "ROUGE order");
  ev->add_flag("--smooth", e_smooth, "add-one BLEU smoothing for toy corpora");

  auto* sent = app.add_subcommand("sentiment", "sentiment probe on frozen embeddings");
  sent->require_subcommand(1);
  std::string s_ckpt, s_data, s_out = "probe.ckpt", s_probe;
  int s_epochs = 50, s_batch = 200;
  double s_lr = 0.00009;
  std::uint64_t s_seed = 7;
  auto* strain = sent->add_subcommand("train", "fit the logistic probe");
  strain->add_option("--ckpt", s_ckpt)->required();
  strain->add_option("--data", s_data, "phrase TSV (id<TAB>phrase<TAB>label)")->required();
  strain->add_option("--out", s_out, "probe output path");
  strain->add_option("--epochs", s_epochs);
  strain->add_option("--batch", s_batch);
  strain->add_option("--lr", s_lr);
  strain->add_option("--seed", s_seed);
  auto* seval = sent->add_subcommand("eval", "error rate of a trained probe");
  seval->add_option("--probe", s_probe)->required();
  seval->add_option("--data", s_data, "phrase TSV")->required();

  Index c_vocab = 20, c_embed = 8, c_hidden = 8, c_conv = 0;
  int c_batch = 3, c_tmax = 5;
  std::size_t c_samples = 200;
  double c_h = 1e-5, c_tol = 1e-4;
  std::uint64_t c_seed = 12345;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the joint loss");
  gc->add_option("--vocab", c_vocab);
  gc->add_option("--embed", c_embed);
  gc->add_option("--hidden", c_hidden);
  gc->add_option("--conv", c_conv, "temporal conv width (0 = off)");
  gc->add_option("--batch", c_batch);
  gc->add_option("--tmax", c_tmax);
  gc->add_option("--samples", c_samples);
  gc->add_option("--step", c_h, "finite-difference step h");
  gc->add_option("--tol", c_tol);
  gc->add_option("--seed", c_seed);

  std::vector<const char*> argv;
  argv.push_back("pairdisc");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return run_train(ta);
    if (gen->parsed()) return run_generate(g_ckpt, g_in, g_out, g_tmax);
    if (ev->parsed()) return run_eval(e_ckpt, e_test, e_hyp, e_ref, e_out, e_tmax, e_rouge, e_smooth);
    if (sent->parsed()) {
      if (strain->parsed()) return run_sentiment_train(s_ckpt, s_data, s_out, s_epochs, s_batch, s_lr, s_seed);
      return run_sentiment_eval(s_probe, s_data);
    }
    if (gc->parsed())
      return run_gradcheck(c_vocab, c_embed, c_hidden, c_conv, c_batch, c_tmax, c_samples, c_h,
                           c_seed, c_tol);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace pairdisc
