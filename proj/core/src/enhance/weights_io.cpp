#include "thermocal/enhance/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace thermocal::enhance {

namespace {

constexpr char kMagic[4] = {'T', 'H', 'C', 'W'};

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char b[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(U))) throw InputError("weights file truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

void put_tensor(std::ostream& out, const std::string& name, const std::vector<std::size_t>& dims,
                const std::vector<double>& values) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_le<std::uint64_t>(out, d);
  for (double v : values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

}  // namespace

void write_weights(std::ostream& out, const NetworkWeights& weights) {
  weights.validate();
  for (const auto& t : weights.tensors) {
    for (double v : t.values) {
      if (!std::isfinite(v)) throw OptimizationError("refusing to save non-finite weight in " + t.name);
    }
  }
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kWeightsFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(weights.tensors.size() + 3));
  put_tensor(out, "meta.rng_seed", {1}, {static_cast<double>(weights.rng_seed)});
  put_tensor(out, "meta.stages", {1}, {static_cast<double>(weights.attention.stages)});
  put_tensor(out, "meta.d_k", {1}, {static_cast<double>(weights.attention.d_k)});
  for (const auto& t : weights.tensors) put_tensor(out, t.name, t.dims, t.values);
}

NetworkWeights read_weights(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw InputError("not a THCW weights file");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kWeightsFormatVersion) {
    throw InputError("unsupported weights version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in);
  std::vector<NamedTensor> tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = get_le<std::uint32_t>(in);
    if (name_len > 4096) throw InputError("weights file: implausible tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw InputError("weights file truncated");
    const auto rank = get_le<std::uint32_t>(in);
    if (rank > 8) throw InputError("weights file: implausible rank for " + name);
    std::vector<std::size_t> dims(rank);
    std::size_t n = 1;
    for (auto& d : dims) {
      d = get_le<std::uint64_t>(in);
      if (d > (std::size_t{1} << 32)) throw InputError("weights file: implausible dimension in " + name);
      n *= d;
    }
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    tensors.push_back({std::move(name), std::move(dims), std::move(values)});
  }

  AttentionConfig cfg;
  std::uint64_t seed = 0;
  std::vector<NamedTensor> params;
  for (auto& t : tensors) {
    if (t.name.rfind("meta.", 0) == 0) {
      if (t.values.size() != 1) throw InputError("weights file: meta tensor " + t.name + " is not scalar");
      const double v = t.values[0];
      if (t.name == "meta.rng_seed") seed = static_cast<std::uint64_t>(v);
      else if (t.name == "meta.stages") cfg.stages = static_cast<std::size_t>(v);
      else if (t.name == "meta.d_k") cfg.d_k = static_cast<std::size_t>(v);
    } else {
      params.push_back(std::move(t));
    }
  }
  NetworkWeights w;
  w.attention = cfg;
  w.rng_seed = seed;
  w.tensors = std::move(params);
  try {
    w.validate();
  } catch (const ShapeError& e) {
    throw InputError(std::string("weights file: ") + e.what());
  }
  for (const auto& t : w.tensors) {
    for (double v : t.values) {
      if (!std::isfinite(v)) throw OptimizationError("weights file contains non-finite value in " + t.name);
    }
  }
  return w;
}

void save_weights(const std::filesystem::path& path, const NetworkWeights& weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_weights(out, weights);
  if (!out) throw InputError("failed writing " + path.string());
}

NetworkWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weights file " + path.string());
  return read_weights(in);
}

}  // namespace thermocal::enhance
