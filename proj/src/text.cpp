#include "pairdisc/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace pairdisc {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && !std::isalnum(c)) {
      flush();
      out.push_back(std::string(1, static_cast<char>(c)));
    } else {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() {
  words_ = {"<s>", "</s>", "<unk>"};
  for (int i = 0; i < kReserved; ++i) index_[words_[i]] = i;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus, int min_count,
                             std::size_t max_size) {
  if (corpus.empty()) throw DataError("vocabulary corpus is empty");
  std::map<std::string, long> counts;
  for (const auto& seq : corpus)
    for (const auto& w : seq) ++counts[w];

  std::vector<std::pair<std::string, long>> ranked;
  for (const auto& [w, c] : counts)
    if (c >= min_count) ranked.emplace_back(w, c);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);

  Vocabulary v;
  for (const auto& [w, c] : ranked) {
    v.index_[w] = static_cast<int>(v.words_.size());
    v.words_.push_back(w);
  }
  return v;
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || id >= size()) throw std::invalid_argument("token id out of range: " + std::to_string(id));
  return words_[static_cast<std::size_t>(id)];
}

TokenSequence Vocabulary::encode(const std::vector<std::string>& tokens) const {
  TokenSequence ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const TokenSequence& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(word(i));
  return out;
}

std::string Vocabulary::decode_to_string(const TokenSequence& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += word(ids[i]);
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write vocabulary: " + path);
  for (const auto& w : words_) os << w << '\n';
  if (!os) throw DataError("write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open vocabulary: " + path);
  Vocabulary v;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno <= kReserved) {
      if (line != v.words_[static_cast<std::size_t>(lineno - 1)])
        throw DataError("vocabulary " + path + " line " + std::to_string(lineno) +
                        ": reserved entry mismatch");
      continue;
    }
    if (line.empty()) throw DataError("vocabulary " + path + " line " + std::to_string(lineno) + ": empty word");
    v.index_[line] = static_cast<int>(v.words_.size());
    v.words_.push_back(line);
  }
  if (lineno < kReserved) throw DataError("vocabulary " + path + ": missing reserved entries");
  return v;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::string::size_type start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

bool parse_int_field(const std::string& s, long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stol(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

void truncate_tokens(std::vector<std::string>& toks, int max_len) {
  if (max_len > 0 && toks.size() > static_cast<std::size_t>(max_len))
    toks.resize(static_cast<std::size_t>(max_len));
}

}  // namespace

std::vector<RawPair> load_pairs(const std::string& path, int max_len) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open pair file: " + path);
  std::vector<RawPair> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() < 3)
      throw DataError(path + " line " + std::to_string(lineno) +
                      ": expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    long flag = 0;
    if (!parse_int_field(cols[2], flag)) {
      if (lineno == 1) continue;  // header row: non-numeric flag field
      throw DataError(path + " line " + std::to_string(lineno) + ": flag column is not an integer");
    }
    if (flag != 1) continue;
    RawPair p{tokenize(cols[0]), tokenize(cols[1])};
    if (p.source.empty() || p.target.empty())
      throw DataError(path + " line " + std::to_string(lineno) + ": empty question");
    truncate_tokens(p.source, max_len);
    truncate_tokens(p.target, max_len);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LabeledPhrase> load_labeled_phrases(const std::string& path, int max_len) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open phrase file: " + path);
  std::vector<LabeledPhrase> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() < 3)
      throw DataError(path + " line " + std::to_string(lineno) +
                      ": expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    long label = 0;
    if (!parse_int_field(cols[2], label)) {
      if (lineno == 1) continue;
      throw DataError(path + " line " + std::to_string(lineno) + ": label is not an integer");
    }
    if (label < 0 || label > 4)
      throw DataError(path + " line " + std::to_string(lineno) + ": label out of range 0..4");
    LabeledPhrase p{tokenize(cols[1]), static_cast<int>(label)};
    if (p.tokens.empty())
      throw DataError(path + " line " + std::to_string(lineno) + ": empty phrase");
    truncate_tokens(p.tokens, max_len);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::size_t> load_split_indices(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open split file: " + path);
  std::vector<std::size_t> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    long v = 0;
    if (!parse_int_field(line, v) || v < 0)
      throw DataError(path + " line " + std::to_string(lineno) + ": expected a non-negative row index");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<ParaphrasePair> encode_pairs(const std::vector<RawPair>& raw, const Vocabulary& vocab) {
  std::vector<ParaphrasePair> out;
  out.reserve(raw.size());
  for (const auto& p : raw) out.push_back({vocab.encode(p.source), vocab.encode(p.target)});
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::uint64_t seed, std::uint64_t epoch,
                                                   bool drop_short) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (drop_short && batch_size < 2)
    throw std::invalid_argument("batch_size must be >= 2 when the global loss is enabled");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, epoch));
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < n; at += batch_size) {
    std::size_t end = std::min(n, at + batch_size);
    if (drop_short && end - at < batch_size) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace pairdisc
