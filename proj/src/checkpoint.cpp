#include "pairdisc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace pairdisc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("truncated checkpoint: " + path);
  return v;
}

struct RawEntry {
  std::string name;
  std::vector<Index> shape;
  std::vector<double> values;
  std::vector<double> rms;
};

std::vector<RawEntry> read_entries(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);

  char magic[sizeof(kCheckpointMagic) - 1];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw DataError("bad checkpoint magic: " + path);
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);

  const auto count = get<std::uint64_t>(is, path);
  std::vector<RawEntry> entries(count);
  for (auto& e : entries) {
    const auto name_len = get<std::uint32_t>(is, path);
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    const auto rank = get<std::uint32_t>(is, path);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      e.shape.push_back(static_cast<Index>(get<std::uint64_t>(is, path)));
      n *= static_cast<std::uint64_t>(e.shape.back());
    }
    e.values.resize(n);
    is.read(reinterpret_cast<char*>(e.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
    e.rms.resize(n);
    is.read(reinterpret_cast<char*>(e.rms.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw DataError("truncated checkpoint: " + path);
  }
  return entries;
}

void fill_entry(ParamEntry& dst, const RawEntry& src, const std::string& path) {
  if (static_cast<std::size_t>(dst.value.size()) != src.values.size())
    throw DataError("checkpoint shape mismatch for '" + src.name + "': " + path);
  std::memcpy(dst.value.data(), src.values.data(), src.values.size() * sizeof(double));
  std::memcpy(dst.rms.data(), src.rms.data(), src.rms.size() * sizeof(double));
  dst.grad.vec().setZero();
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, store.count());
  store.for_each([&](const std::string& name, const ParamEntry& e) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.value.rank()));
    for (Index d : e.value.shape()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(e.value.data()),
             static_cast<std::streamsize>(e.value.size()) * sizeof(double));
    os.write(reinterpret_cast<const char*>(e.rms.data()),
             static_cast<std::streamsize>(e.rms.size()) * sizeof(double));
  });
  if (!os) throw DataError("write failed: " + path);
}

void load_checkpoint(ParameterStore& store, const std::string& path) {
  if (store.count() != 0 || store.sealed())
    throw std::logic_error("load_checkpoint requires an empty store");
  for (const RawEntry& raw : read_entries(path)) {
    store.add(raw.name, raw.shape);
    fill_entry(store.entry(raw.name), raw, path);
  }
  store.seal();
}

void load_checkpoint_into(ParameterStore& store, const std::string& path) {
  const auto entries = read_entries(path);
  std::set<std::string> seen;
  for (const RawEntry& raw : entries) {
    if (!store.has(raw.name))
      throw DataError("checkpoint parameter '" + raw.name + "' not in model: " + path);
    fill_entry(store.entry(raw.name), raw, path);
    seen.insert(raw.name);
  }
  for (const std::string& name : store.names())
    if (!seen.count(name))
      throw DataError("model parameter '" + name + "' missing from checkpoint: " + path);
}

}  // namespace pairdisc
