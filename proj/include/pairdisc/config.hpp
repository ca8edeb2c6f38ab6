#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairdisc/tensor.hpp"

namespace pairdisc {

// Flat `key = value` text with '#' comments. Order-preserving for writes.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  long get_long(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_long(const std::string& key, long value);
  void set_double(const std::string& key, double value);

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  // Unlisted keys are configuration typos; fail loudly.
  void require_known(const std::vector<std::string>& known, const std::string& origin) const;

  std::string to_text() const;
  void save(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
  std::map<std::string, std::size_t> index_;
};

std::uint64_t file_digest(const std::string& path);
std::string timestamp_utc();

}  // namespace pairdisc
