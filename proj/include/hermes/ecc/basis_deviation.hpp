#pragma once

#include "hermes/bytes.hpp"

namespace hermes::ecc {

// Output of a transformation function. The basis is the part that gets
// deduplicated; the deviation is whatever is needed to get the chunk back.
struct BasisDeviation {
  Bytes basis;
  Bytes deviation;

  friend bool operator==(const BasisDeviation&, const BasisDeviation&) = default;
};

}  // namespace hermes::ecc
