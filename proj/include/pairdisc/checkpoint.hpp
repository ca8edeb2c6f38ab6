#pragma once

#include <string>

#include "pairdisc/param_store.hpp"

namespace pairdisc {

// Versioned binary container for a ParameterStore.
//
//   magic "PAIRDISC" | u32 version | u64 entry count |
//   per entry: u32 name length | name bytes | u32 rank | u64 dims[rank] |
//              f64 values | f64 rms
//
// All integers and doubles little-endian. Round-trips are bit-exact.

inline constexpr char kCheckpointMagic[] = "PAIRDISC";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterStore& store, const std::string& path);

// Loads into an empty, unsealed store: entries are created from the file.
void load_checkpoint(ParameterStore& store, const std::string& path);

// Loads into an already-built store: names and shapes must match exactly.
void load_checkpoint_into(ParameterStore& store, const std::string& path);

}  // namespace pairdisc
