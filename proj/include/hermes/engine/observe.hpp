#pragma once

#include <unordered_set>

#include "hermes/costmodel.hpp"
#include "hermes/engine/chunker.hpp"
#include "hermes/engine/codec.hpp"

namespace hermes::engine {

// Counts what the cost equations need straight from the data: distinct
// chunks, distinct bases and deviation lengths, keyed by full content rather
// than by fingerprint.
class Observer {
 public:
  explicit Observer(const EngineConfig& cfg)
      : codec_(EngineConfig(cfg.transform, Scheme::gd_vanilla, cfg.fp, cfg.mode, cfg.layout)) {
    p_.n_B = codec_.chunk_bytes();
    p_.k_B = codec_.basis_bytes();
    p_.h_B = cfg.fp.length;
    const auto fixed = codec_.transform().fixed_deviation_bytes();
    p_.h_reduced = fixed < cfg.fp.length ? cfg.fp.length - fixed : 0;
  }

  void add(ByteView chunk) {
    const Split s = codec_.split(chunk);
    ++p_.C;
    p_.deviation_sum += s.deviation.size();
    const bool new_chunk = chunks_.insert(key_of(chunk)).second;
    const bool new_basis = bases_.insert(key_of(s.basis)).second;
    if (new_chunk && !new_basis) p_.dual_deviation_sum += s.deviation.size();
    p_.B_DD = chunks_.size();
    p_.B_GD = bases_.size();
  }

  const costmodel::CostParams& params() const noexcept { return p_; }

 private:
  ChunkCodec codec_;
  costmodel::CostParams p_;
  std::unordered_set<std::string> chunks_;
  std::unordered_set<std::string> bases_;
};

inline costmodel::CostParams observe(ByteView data, const EngineConfig& cfg) {
  Observer o(cfg);
  for (const auto& c : split_into_chunks(data, cfg.chunk_bytes()).chunks) o.add(c);
  return o.params();
}

}  // namespace hermes::engine
