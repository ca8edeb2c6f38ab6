#include "pairdisc/config.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "pairdisc/rng.hpp"

namespace pairdisc {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(origin + " line " + std::to_string(lineno) + ": expected `key = value`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw DataError(origin + " line " + std::to_string(lineno) + ": empty key");
    kv.set(key, value);
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str(), path);
}

bool KeyValueFile::has(const std::string& key) const { return index_.count(key) != 0; }

std::string KeyValueFile::get(const std::string& key, const std::string& fallback) const {
  auto it = index_.find(key);
  return it == index_.end() ? fallback : items_[it->second].second;
}

long KeyValueFile::get_long(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  try {
    std::size_t pos = 0;
    long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  try {
    std::size_t pos = 0;
    std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
  }
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    items_[it->second].second = value;
  } else {
    index_[key] = items_.size();
    items_.emplace_back(key, value);
  }
}

void KeyValueFile::set_long(const std::string& key, long value) { set(key, std::to_string(value)); }

void KeyValueFile::set_double(const std::string& key, double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  set(key, os.str());
}

void KeyValueFile::require_known(const std::vector<std::string>& known,
                                 const std::string& origin) const {
  for (const auto& [key, value] : items_) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw DataError(origin + ": unknown config key '" + key + "'");
  }
}

std::string KeyValueFile::to_text() const {
  std::ostringstream os;
  for (const auto& [key, value] : items_) os << key << " = " << value << '\n';
  return os.str();
}

void KeyValueFile::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write: " + path);
  os << to_text();
  if (!os) throw DataError("write failed: " + path);
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open for digest: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0)
    h = fnv1a({buf, static_cast<std::size_t>(is.gcount())}, h);
  return h;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace pairdisc
