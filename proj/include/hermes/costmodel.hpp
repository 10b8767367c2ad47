#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "hermes/error.hpp"
#include "hermes/fingerprint.hpp"

namespace hermes::costmodel {

// Inputs to the transmission cost equations. Deviation lengths are kept as
// sums so that variable-length (Reed-Solomon) deviations cost nothing extra.
struct CostParams {
  std::uint64_t C = 0;     // chunks sent
  std::uint64_t B_DD = 0;  // distinct chunks
  std::uint64_t B_GD = 0;  // distinct bases
  std::uint64_t n_B = 0;
  std::uint64_t k_B = 0;
  std::uint64_t h_B = 0;          // DD, GD-vanilla and GD-dual identifier bytes per chunk
  std::uint64_t h_reduced = 0;    // GD-reduced fingerprint bytes per chunk
  std::uint64_t deviation_sum = 0;       // sum of d_B(i) over all C chunks
  std::uint64_t dual_deviation_sum = 0;  // sum of d_B(i) over Q

  std::uint64_t q_size() const noexcept { return B_DD - B_GD; }

  // Constant deviation length d_B; GD-reduced gives up d_B fingerprint bytes.
  static CostParams constant(std::uint64_t C, std::uint64_t B_DD, std::uint64_t B_GD, std::uint64_t n_B,
                             std::uint64_t k_B, std::uint64_t h_B, std::uint64_t d_B) {
    CostParams p{C, B_DD, B_GD, n_B, k_B, h_B, h_B >= d_B ? h_B - d_B : 0, C * d_B, 0};
    p.dual_deviation_sum = B_DD >= B_GD ? (B_DD - B_GD) * d_B : 0;
    return p;
  }

  void set_deviations(const std::vector<std::uint64_t>& all, const std::vector<std::uint64_t>& over_q) {
    if (all.size() != C) throw ArgumentError("need one deviation length per chunk");
    if (over_q.size() != q_size()) throw ArgumentError("need one deviation length per chunk in Q");
    deviation_sum = std::accumulate(all.begin(), all.end(), std::uint64_t{0});
    dual_deviation_sum = std::accumulate(over_q.begin(), over_q.end(), std::uint64_t{0});
  }

  void validate() const {
    if (B_GD > B_DD || B_DD > C) throw ArgumentError("need B_GD <= B_DD <= C");
    if (k_B > n_B) throw ArgumentError("need k_B <= n_B");
  }
};

inline std::uint64_t transmission_cost(Scheme scheme, const CostParams& p) {
  p.validate();
  switch (scheme) {
    case Scheme::dd:
      return p.B_DD * p.n_B + p.C * p.h_B;
    case Scheme::gd_vanilla:
      return p.B_GD * p.k_B + p.C * p.h_B + p.deviation_sum;
    case Scheme::gd_reduced:
      return p.B_GD * p.k_B + p.C * p.h_reduced + p.deviation_sum;
    case Scheme::gd_dual:
      return p.B_GD * p.n_B + p.dual_deviation_sum + p.C * p.h_B;
  }
  throw ArgumentError("unknown scheme");
}

inline double compression_ratio(std::uint64_t C, std::uint64_t n_B, std::uint64_t cost) {
  if (cost == 0) throw ArgumentError("compression ratio of an empty transmission");
  return static_cast<double>(C) * static_cast<double>(n_B) / static_cast<double>(cost);
}

namespace detail {
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  const std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}
}  // namespace detail

// DD sends fewer bytes than the raw data iff M_DD exceeds this value.
inline std::uint64_t dd_break_even_matches(std::uint64_t C, std::uint64_t n_B, std::uint64_t h_B) {
  if (n_B == 0) throw ArgumentError("n_B must be positive");
  return C * h_B / n_B;
}

struct Outperformance {
  std::int64_t bound = 0;        // GD-vanilla wins iff M_GD > bound
  std::int64_t min_matches = 0;  // smallest winning M_GD
  std::int64_t extra_over_dd = 0;
};

// Matches GD-vanilla needs to send fewer bytes than DD, given DD's matches
// M_DD = C - B_DD. B_GD is not used.
inline Outperformance gd_vanilla_outperformance(const CostParams& p) {
  if (p.k_B == 0) throw ArgumentError("k_B must be positive");
  if (p.B_DD > p.C || p.k_B > p.n_B) throw ArgumentError("need B_DD <= C and k_B <= n_B");
  const auto C = static_cast<std::int64_t>(p.C);
  const auto n = static_cast<std::int64_t>(p.n_B);
  const auto k = static_cast<std::int64_t>(p.k_B);
  const auto m_dd = static_cast<std::int64_t>(p.C - p.B_DD);
  const std::int64_t num = static_cast<std::int64_t>(p.deviation_sum) + C * (k - n) + m_dd * n;
  Outperformance o;
  o.bound = detail::floor_div(num, k);
  o.min_matches = o.bound + 1;
  o.extra_over_dd = o.min_matches - m_dd;
  return o;
}

struct DominanceReport {
  std::uint64_t dd = 0, reduced = 0, dual = 0;
  std::int64_t reduced_margin = 0;  // T_DD - T_GD-reduced
  std::int64_t dual_margin = 0;     // T_DD - T_GD-dual
  bool holds() const noexcept { return reduced_margin >= 0 && dual_margin >= 0; }
};

inline DominanceReport dominance_check(const CostParams& p) {
  DominanceReport r;
  r.dd = transmission_cost(Scheme::dd, p);
  r.reduced = transmission_cost(Scheme::gd_reduced, p);
  r.dual = transmission_cost(Scheme::gd_dual, p);
  r.reduced_margin = static_cast<std::int64_t>(r.dd) - static_cast<std::int64_t>(r.reduced);
  r.dual_margin = static_cast<std::int64_t>(r.dd) - static_cast<std::int64_t>(r.dual);
  return r;
}

struct SchemeCost {
  Scheme scheme;
  std::uint64_t bytes;
  double ratio;
};

inline std::vector<SchemeCost> cost_report(const CostParams& p) {
  std::vector<SchemeCost> rows;
  for (auto s : kAllSchemes) {
    const auto bytes = transmission_cost(s, p);
    rows.push_back({s, bytes, bytes == 0 ? 0.0 : compression_ratio(p.C, p.n_B, bytes)});
  }
  return rows;
}

inline std::string format_ratio(double r) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.6f", r);
  return buf.data();
}

inline std::string to_csv(const std::vector<SchemeCost>& rows) {
  std::string out = "scheme,bytes,ratio\n";
  for (const auto& r : rows) {
    out += to_string(r.scheme);
    out += ',' + std::to_string(r.bytes) + ',' + format_ratio(r.ratio) + '\n';
  }
  return out;
}

}  // namespace hermes::costmodel
