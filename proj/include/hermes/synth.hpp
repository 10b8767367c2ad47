#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "hermes/bytes.hpp"
#include "hermes/ecc/hamming.hpp"
#include "hermes/error.hpp"

namespace hermes::synth {

// Best-case datasets for generalized deduplication: every chunk lies within
// one bit flip of an error-free Hamming codeword.
//
// Randomness comes from std::mt19937_64 seeded with `seed`. Bounded integers
// use rejection sampling on raw 64-bit outputs and shuffles are Fisher-Yates
// from the last index down, so output is identical on every platform.
struct SynthParams {
  unsigned m = 7;
  std::uint32_t num_bases = 1;
  std::uint32_t chunks_per_basis = 1;
  std::uint32_t repetitions = 1;
  std::uint64_t seed = 0;

  friend bool operator==(const SynthParams&, const SynthParams&) = default;
};

inline constexpr char kDatasetMagic[4] = {'H', 'S', 'Y', 'N'};
inline constexpr std::uint8_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 4 + 1 + 1 + 4 + 4 + 4 + 8;

struct Dataset {
  SynthParams params;
  std::vector<Bytes> chunks;

  Bytes data() const {
    Bytes out;
    for (const auto& c : chunks) append(out, c);
    return out;
  }
};

// Variants per basis: no flip or a flip at one of the n codeword bits, each
// with the trailing bit clear or set.
inline std::uint64_t max_chunks_per_basis(unsigned m) { return std::uint64_t{1} << (m + 1); }

namespace detail {

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

inline Bytes random_basis(std::mt19937_64& rng, const ecc::HammingConfig& hc) {
  Bytes b(hc.basis_bytes);
  for (std::size_t i = 0; i < hc.k; ++i) set_bit(b, i, (rng() & 1) != 0);
  return b;
}

}  // namespace detail

inline void check_params(const SynthParams& p) {
  if (p.m < ecc::kMinHammingParity || p.m > ecc::kMaxHammingParity) {
    throw ArgumentError("m must be in [3, 15], got " + std::to_string(p.m));
  }
  if (p.num_bases == 0 || p.chunks_per_basis == 0 || p.repetitions == 0) {
    throw ArgumentError("bases, chunks per basis and repetitions must be positive");
  }
  if (p.chunks_per_basis > max_chunks_per_basis(p.m)) {
    throw ArgumentError("at most " + std::to_string(max_chunks_per_basis(p.m)) + " chunks per basis for m=" + std::to_string(p.m));
  }
  const auto k = ecc::hamming_params(p.m).k;
  if (k < 32 && p.num_bases > (std::uint64_t{1} << k)) {
    throw ArgumentError("at most " + std::to_string(std::uint64_t{1} << k) + " bases for m=" + std::to_string(p.m));
  }
}

inline Dataset generate_dataset(const SynthParams& p) {
  check_params(p);
  const auto hc = ecc::hamming_params(p.m);
  std::mt19937_64 rng(p.seed);

  std::vector<Bytes> bases;
  std::unordered_set<std::string> seen;
  while (bases.size() < p.num_bases) {
    Bytes b = detail::random_basis(rng, hc);
    if (seen.insert(key_of(b)).second) bases.push_back(std::move(b));
  }

  std::vector<std::uint32_t> variants(max_chunks_per_basis(p.m));
  Dataset ds{p, {}};
  ds.chunks.reserve(static_cast<std::size_t>(p.num_bases) * p.chunks_per_basis * p.repetitions);
  for (const auto& basis : bases) {
    const Bytes codeword = ecc::hamming_encode(basis, hc);
    for (std::uint32_t i = 0; i < variants.size(); ++i) variants[i] = i;
    // Partial Fisher-Yates: the first chunks_per_basis slots end up a random subset.
    for (std::size_t i = 0; i < p.chunks_per_basis; ++i) {
      std::swap(variants[i], variants[i + detail::uniform_below(rng, variants.size() - i)]);
    }
    for (std::size_t i = 0; i < p.chunks_per_basis; ++i) {
      Bytes chunk = codeword;
      const std::size_t flip = variants[i] >> 1;  // 0: none, else 1-based position
      if (flip != 0) flip_bit(chunk, flip - 1);
      set_bit(chunk, hc.n, (variants[i] & 1) != 0);
      if (ecc::hamming_transform(chunk, hc).basis != basis) {
        throw Error("generated chunk does not map back to its basis");
      }
      ds.chunks.push_back(std::move(chunk));
    }
  }
  const std::size_t distinct = ds.chunks.size();
  for (std::uint32_t r = 1; r < p.repetitions; ++r) {
    for (std::size_t i = 0; i < distinct; ++i) ds.chunks.push_back(ds.chunks[i]);
  }
  detail::shuffle(ds.chunks, rng);
  return ds;
}

inline Bytes serialize(const Dataset& ds) {
  Bytes out(kDatasetMagic, kDatasetMagic + 4);
  out.push_back(kDatasetVersion);
  out.push_back(static_cast<std::uint8_t>(ds.params.m));
  put_be(out, ds.params.num_bases);
  put_be(out, ds.params.chunks_per_basis);
  put_be(out, ds.params.repetitions);
  put_be(out, ds.params.seed);
  for (const auto& c : ds.chunks) append(out, c);
  return out;
}

// Splits a dataset file into its parameters and the raw chunk bytes.
inline std::pair<SynthParams, ByteView> parse_header(ByteView in) {
  if (in.size() < kDatasetHeaderBytes || !std::equal(kDatasetMagic, kDatasetMagic + 4, in.begin())) {
    throw CorruptInput("not a synthetic dataset");
  }
  if (in[4] != kDatasetVersion) throw CorruptInput("unsupported dataset version " + std::to_string(in[4]));
  SynthParams p;
  p.m = in[5];
  p.num_bases = static_cast<std::uint32_t>(get_be(in.subspan(6), 4));
  p.chunks_per_basis = static_cast<std::uint32_t>(get_be(in.subspan(10), 4));
  p.repetitions = static_cast<std::uint32_t>(get_be(in.subspan(14), 4));
  p.seed = get_be(in.subspan(18), 8);
  return {p, in.subspan(kDatasetHeaderBytes)};
}

inline Dataset parse(ByteView in) {
  auto [p, body] = parse_header(in);
  try {
    check_params(p);
  } catch (const ArgumentError& e) {
    throw CorruptInput(std::string("dataset header: ") + e.what());
  }
  const auto n = ecc::hamming_params(p.m).chunk_bytes;
  const std::uint64_t count = std::uint64_t{p.num_bases} * p.chunks_per_basis * p.repetitions;
  if (body.size() != count * n) throw CorruptInput("dataset body length does not match its header");
  Dataset ds{p, {}};
  for (std::size_t off = 0; off < body.size(); off += n) ds.chunks.emplace_back(body.begin() + off, body.begin() + off + n);
  return ds;
}

inline bool is_dataset(ByteView in) {
  return in.size() >= 4 && std::equal(kDatasetMagic, kDatasetMagic + 4, in.begin());
}

}  // namespace hermes::synth
