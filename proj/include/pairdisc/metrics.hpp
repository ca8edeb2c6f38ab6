#pragma once

#include <string>
#include <vector>

#include "pairdisc/tensor.hpp"

namespace pairdisc {

using Sentence = std::vector<std::string>;

// Corpus-level BLEU-1..BLEU-max_n: modified n-gram precision with brevity
// penalty exp(1 - r/c) when c < r. A zero precision at any order zeroes that
// BLEU-k (classic definition). `smooth` switches on add-one smoothing for
// toy corpora; reported numbers should say which mode produced them.
std::vector<double> bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                         int max_n = 4, bool smooth = false);

// Corpus n-gram recall: clipped matches / reference n-gram count.
double rouge_n(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs, int n);

// Unigram F-mean 10PR/(R+9P) with fragmentation penalty 0.5*(chunks/matches)^3.
// Matching runs an exact stage then a suffix-stripping stem stage; there is
// no synonym stage, so scores are not comparable to WordNet METEOR.
double meteor_lite(const Sentence& hyp, const Sentence& ref);
double meteor_corpus(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs);

// Suffix stripping used by the METEOR stem stage (ing/ed/es/s).
std::string light_stem(const std::string& word);

// Translation error rate: greedy block-shift search (each iteration applies
// the shift that most reduces edit distance, costing 1 edit) until no shift
// helps, then Levenshtein; edits / reference length.
struct TerDetail {
  int shifts = 0;
  int edit_distance = 0;
  double ter = 0;
};
TerDetail ter_detail(const Sentence& hyp, const Sentence& ref);
double ter(const Sentence& hyp, const Sentence& ref);
double ter_corpus(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs);

int levenshtein(const Sentence& a, const Sentence& b);

struct MetricReport {
  std::vector<double> bleu;  // bleu[k-1] = BLEU-k
  double rouge = 0;
  int rouge_order = 2;
  double meteor = 0;
  double ter = 0;

  std::string to_tsv() const;
  std::string to_json() const;
};

MetricReport score_corpus(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                          int rouge_order = 2, bool bleu_smooth = false);

// Nemenyi critical difference q_alpha(k) * sqrt(k(k+1)/(6n)); the embedded
// studentized-range table covers alpha = 0.05, k in [2, 20].
double nemenyi_cd(int k, int n, double alpha = 0.05);

inline bool significantly_different(double rank_a, double rank_b, double cd) {
  return std::abs(rank_a - rank_b) >= cd;
}

}  // namespace pairdisc
