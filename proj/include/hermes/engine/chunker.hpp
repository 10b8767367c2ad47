#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "hermes/bytes.hpp"
#include "hermes/error.hpp"

namespace hermes::engine {

struct ChunkedData {
  std::vector<Bytes> chunks;
  std::size_t original_length = 0;  // bytes before zero padding of the last chunk
};

inline ChunkedData split_into_chunks(ByteView data, std::size_t chunk_bytes) {
  if (chunk_bytes == 0) throw ArgumentError("chunk length must be positive");
  ChunkedData out;
  out.original_length = data.size();
  out.chunks.reserve((data.size() + chunk_bytes - 1) / chunk_bytes);
  for (std::size_t off = 0; off < data.size(); off += chunk_bytes) {
    const std::size_t take = std::min(chunk_bytes, data.size() - off);
    Bytes chunk(chunk_bytes, 0);
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(off), take, chunk.begin());
    out.chunks.push_back(std::move(chunk));
  }
  return out;
}

inline Bytes reassemble(const std::vector<Bytes>& chunks, std::size_t original_length) {
  Bytes out;
  for (const auto& c : chunks) append(out, c);
  if (original_length > out.size()) throw CorruptInput("descriptor length exceeds chunk data");
  out.resize(original_length);
  return out;
}

// Incremental chunker for streams that arrive in arbitrary pieces.
class StreamChunker {
 public:
  explicit StreamChunker(std::size_t chunk_bytes) : chunk_bytes_(chunk_bytes) {
    if (chunk_bytes == 0) throw ArgumentError("chunk length must be positive");
  }

  // Appends data and returns every chunk completed by it.
  std::vector<Bytes> push(ByteView data) {
    total_ += data.size();
    std::vector<Bytes> out;
    for (auto b : data) {
      buffer_.push_back(b);
      if (buffer_.size() == chunk_bytes_) {
        out.push_back(std::move(buffer_));
        buffer_.clear();
        buffer_.reserve(chunk_bytes_);
      }
    }
    return out;
  }

  // Zero-padded final chunk, if any bytes are left over.
  std::optional<Bytes> finish() {
    if (buffer_.empty()) return std::nullopt;
    Bytes last = std::move(buffer_);
    buffer_.clear();
    last.resize(chunk_bytes_, 0);
    return last;
  }

  std::size_t total_bytes() const noexcept { return total_; }

 private:
  std::size_t chunk_bytes_;
  std::size_t total_ = 0;
  Bytes buffer_;
};

}  // namespace hermes::engine
