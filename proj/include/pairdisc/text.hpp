#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "pairdisc/rng.hpp"
#include "pairdisc/tensor.hpp"

namespace pairdisc {

// Token ids. START/STOP never appear here; the decoder loop adds them.
using TokenSequence = std::vector<int>;

// Lowercases, splits punctuation into single-char tokens, collapses
// whitespace. Bytes >= 0x80 are treated as word characters.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr int kStart = 0;
  static constexpr int kStop = 1;
  static constexpr int kUnk = 2;
  static constexpr int kReserved = 3;

  Vocabulary();

  // Words with count >= min_count, ranked by (count desc, word asc),
  // truncated to at most max_size non-reserved entries.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, int min_count,
                          std::size_t max_size);

  int id(const std::string& word) const;           // kUnk when absent
  const std::string& word(int id) const;           // reserved ids included
  int size() const { return static_cast<int>(words_.size()); }

  TokenSequence encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const TokenSequence& ids) const;
  std::string decode_to_string(const TokenSequence& ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct ParaphrasePair {
  TokenSequence source;
  TokenSequence target;
};

// Tokenized but not yet vocabulary-encoded source/target questions.
struct RawPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

// Tab-separated `question1 TAB question2 TAB is_duplicate`; an optional
// header row is detected by a non-numeric flag field. Only flag==1 rows
// are kept. Sequences are truncated to max_len tokens.
std::vector<RawPair> load_pairs(const std::string& path, int max_len = 30);

struct LabeledPhrase {
  std::vector<std::string> tokens;
  int label = 0;  // 0..4
};

// `phrase_id TAB phrase TAB label`, labels in 0..4, optional header row.
std::vector<LabeledPhrase> load_labeled_phrases(const std::string& path, int max_len = 30);

// One row index per line; selects a subset of a loaded file in file order.
std::vector<std::size_t> load_split_indices(const std::string& path);

template <typename T>
std::vector<T> apply_split(const std::vector<T>& rows, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= rows.size())
      throw DataError("split index " + std::to_string(i) + " out of range (rows=" +
                      std::to_string(rows.size()) + ")");
    out.push_back(rows[i]);
  }
  return out;
}

std::vector<ParaphrasePair> encode_pairs(const std::vector<RawPair>& raw, const Vocabulary& vocab);

// Seeded epoch batching. With drop_short (required when the global loss is
// on) the trailing short batch is dropped; a lone example has no in-batch
// negatives.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::uint64_t seed, std::uint64_t epoch,
                                                   bool drop_short);

}  // namespace pairdisc
