#pragma once

#include <filesystem>
#include <iosfwd>

#include "thermocal/enhance/network.hpp"

namespace thermocal::enhance {

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

/// Binary layout: "THCW", u32 version, u32 tensor count, then per tensor
/// u32 name length, name bytes, u32 rank, u64 dims, little-endian f64 values.
/// Configuration travels as scalar tensors meta.rng_seed, meta.stages, meta.d_k.
void write_weights(std::ostream& out, const NetworkWeights& weights);
NetworkWeights read_weights(std::istream& in);

void save_weights(const std::filesystem::path& path, const NetworkWeights& weights);
NetworkWeights load_weights(const std::filesystem::path& path);

}  // namespace thermocal::enhance
