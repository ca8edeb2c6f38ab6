#include "pairdisc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace pairdisc {

namespace {

void check_parallel(std::size_t h, std::size_t r) {
  if (h != r)
    throw DataError("hypothesis/reference count mismatch: " + std::to_string(h) + " vs " +
                    std::to_string(r));
}

std::map<std::string, long> ngram_counts(const Sentence& s, int n) {
  std::map<std::string, long> counts;
  if (static_cast<int>(s.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += s[i + static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

struct NgramTotals {
  long matched = 0;  // clipped
  long hyp = 0;
  long ref = 0;
};

NgramTotals corpus_ngrams(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                          int n) {
  NgramTotals t;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto hc = ngram_counts(hyps[i], n);
    auto rc = ngram_counts(refs[i], n);
    for (const auto& [gram, count] : hc) {
      t.hyp += count;
      auto it = rc.find(gram);
      if (it != rc.end()) t.matched += std::min(count, it->second);
    }
    for (const auto& [gram, count] : rc) t.ref += count;
  }
  return t;
}

}  // namespace

std::vector<double> bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                         int max_n, bool smooth) {
  check_parallel(hyps.size(), refs.size());
  if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");

  long hyp_len = 0, ref_len = 0;
  for (const auto& h : hyps) hyp_len += static_cast<long>(h.size());
  for (const auto& r : refs) ref_len += static_cast<long>(r.size());

  std::vector<double> precisions(static_cast<std::size_t>(max_n));
  for (int n = 1; n <= max_n; ++n) {
    NgramTotals t = corpus_ngrams(hyps, refs, n);
    double num = static_cast<double>(t.matched);
    double den = static_cast<double>(t.hyp);
    if (smooth) {
      num += 1.0;
      den += 1.0;
    }
    precisions[static_cast<std::size_t>(n - 1)] = den > 0 ? num / den : 0.0;
  }

  double bp = 1.0;
  if (hyp_len < ref_len)
    bp = hyp_len > 0 ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                     : 0.0;

  std::vector<double> out(static_cast<std::size_t>(max_n));
  double log_sum = 0;
  bool dead = false;
  for (int k = 1; k <= max_n; ++k) {
    const double p = precisions[static_cast<std::size_t>(k - 1)];
    if (p <= 0) dead = true;
    if (!dead) log_sum += std::log(p);
    out[static_cast<std::size_t>(k - 1)] = dead ? 0.0 : bp * std::exp(log_sum / k);
  }
  return out;
}

double rouge_n(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs, int n) {
  check_parallel(hyps.size(), refs.size());
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
  NgramTotals t = corpus_ngrams(hyps, refs, n);
  return t.ref > 0 ? static_cast<double>(t.matched) / static_cast<double>(t.ref) : 0.0;
}

std::string light_stem(const std::string& word) {
  auto ends_with = [&](const char* suf) {
    const std::size_t n = std::char_traits<char>::length(suf);
    return word.size() >= n && word.compare(word.size() - n, n, suf) == 0;
  };
  if (ends_with("ing") && word.size() >= 5) return word.substr(0, word.size() - 3);
  if (ends_with("ed") && word.size() >= 4) return word.substr(0, word.size() - 2);
  if (ends_with("es") && word.size() >= 4) return word.substr(0, word.size() - 2);
  if (ends_with("s") && !ends_with("ss") && word.size() >= 3) return word.substr(0, word.size() - 1);
  return word;
}

namespace {

// In-order greedy unigram alignment on a key; pairs are (hyp_pos, ref_pos).
void align_stage(const Sentence& hyp, const Sentence& ref, std::vector<int>& hyp_to_ref,
                 std::vector<bool>& ref_used, bool stemmed) {
  auto key = [&](const std::string& w) { return stemmed ? light_stem(w) : w; };
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (hyp_to_ref[i] >= 0) continue;
    const std::string hk = key(hyp[i]);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (ref_used[j]) continue;
      if (hk == key(ref[j])) {
        hyp_to_ref[i] = static_cast<int>(j);
        ref_used[j] = true;
        break;
      }
    }
  }
}

}  // namespace

double meteor_lite(const Sentence& hyp, const Sentence& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  std::vector<int> hyp_to_ref(hyp.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  align_stage(hyp, ref, hyp_to_ref, ref_used, false);
  align_stage(hyp, ref, hyp_to_ref, ref_used, true);

  int matches = 0;
  int chunks = 0;
  int prev_ref = -2;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (hyp_to_ref[i] < 0) {
      prev_ref = -2;
      continue;
    }
    ++matches;
    if (hyp_to_ref[i] != prev_ref + 1) ++chunks;
    prev_ref = hyp_to_ref[i];
  }
  if (matches == 0) return 0.0;

  const double p = static_cast<double>(matches) / static_cast<double>(hyp.size());
  const double r = static_cast<double>(matches) / static_cast<double>(ref.size());
  const double f = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
  return f * (1.0 - 0.5 * frag * frag * frag);
}

double meteor_corpus(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  check_parallel(hyps.size(), refs.size());
  if (hyps.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) sum += meteor_lite(hyps[i], refs[i]);
  return sum / static_cast<double>(hyps.size());
}

int levenshtein(const Sentence& a, const Sentence& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

Sentence apply_shift(const Sentence& s, std::size_t start, std::size_t len, std::size_t dest) {
  Sentence rest;
  rest.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i < start || i >= start + len) rest.push_back(s[i]);
  Sentence out;
  out.reserve(s.size());
  out.insert(out.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(dest));
  out.insert(out.end(), s.begin() + static_cast<std::ptrdiff_t>(start),
             s.begin() + static_cast<std::ptrdiff_t>(start + len));
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(dest), rest.end());
  return out;
}

}  // namespace

TerDetail ter_detail(const Sentence& hyp, const Sentence& ref) {
  if (ref.empty()) throw std::invalid_argument("ter: empty reference");

  Sentence cur = hyp;
  int cur_lev = levenshtein(cur, ref);
  TerDetail out;
  while (cur_lev > 0 && cur.size() > 1) {
    int best_lev = cur_lev;
    Sentence best;
    const std::size_t n = cur.size();
    for (std::size_t start = 0; start < n; ++start) {
      for (std::size_t len = 1; start + len <= n; ++len) {
        for (std::size_t dest = 0; dest <= n - len; ++dest) {
          if (dest == start) continue;
          Sentence cand = apply_shift(cur, start, len, dest);
          const int lev = levenshtein(cand, ref);
          if (lev < best_lev) {
            best_lev = lev;
            best = std::move(cand);
          }
        }
      }
    }
    if (best_lev >= cur_lev) break;
    cur = std::move(best);
    cur_lev = best_lev;
    ++out.shifts;
  }
  out.edit_distance = cur_lev;
  out.ter = static_cast<double>(out.shifts + out.edit_distance) / static_cast<double>(ref.size());
  return out;
}

double ter(const Sentence& hyp, const Sentence& ref) { return ter_detail(hyp, ref).ter; }

double ter_corpus(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  check_parallel(hyps.size(), refs.size());
  long edits = 0, ref_len = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    TerDetail d = ter_detail(hyps[i], refs[i]);
    edits += d.shifts + d.edit_distance;
    ref_len += static_cast<long>(refs[i].size());
  }
  return ref_len > 0 ? static_cast<double>(edits) / static_cast<double>(ref_len) : 0.0;
}

std::string MetricReport::to_tsv() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  for (std::size_t k = 0; k < bleu.size(); ++k) os << "bleu" << (k + 1) << '\t' << bleu[k] << '\n';
  os << "rouge" << rouge_order << '\t' << rouge << '\n';
  os << "meteor\t" << meteor << '\n';
  os << "ter\t" << ter << '\n';
  return os.str();
}

std::string MetricReport::to_json() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "{";
  for (std::size_t k = 0; k < bleu.size(); ++k) os << "\"bleu" << (k + 1) << "\": " << bleu[k] << ", ";
  os << "\"rouge" << rouge_order << "\": " << rouge << ", ";
  os << "\"meteor\": " << meteor << ", ";
  os << "\"meteor_variant\": \"exact+stem, no synonyms\", ";
  os << "\"ter\": " << ter << "}";
  return os.str();
}

MetricReport score_corpus(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                          int rouge_order, bool bleu_smooth) {
  check_parallel(hyps.size(), refs.size());
  MetricReport rep;
  rep.bleu = bleu(hyps, refs, 4, bleu_smooth);
  rep.rouge_order = rouge_order;
  rep.rouge = rouge_n(hyps, refs, rouge_order);
  rep.meteor = meteor_corpus(hyps, refs);
  rep.ter = ter_corpus(hyps, refs);
  return rep;
}

double nemenyi_cd(int k, int n, double alpha) {
  // Two-tailed studentized range values at alpha=0.05 divided by sqrt(2),
  // infinite degrees of freedom, as used for average-rank comparisons.
  static const double q05[] = {
      /* k=2  */ 1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164,
      /* k=11 */ 3.219, 3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544};
  if (alpha != 0.05) throw std::invalid_argument("nemenyi_cd: only alpha=0.05 is tabulated");
  if (k < 2 || k > 20) throw std::invalid_argument("nemenyi_cd: k must be in [2, 20]");
  if (n < 1) throw std::invalid_argument("nemenyi_cd: n must be >= 1");
  const double q = q05[k - 2];
  return q * std::sqrt(static_cast<double>(k) * (k + 1) / (6.0 * n));
}

}  // namespace pairdisc
