#pragma once

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hermes/engine/engine.hpp"
#include "hermes/engine/observe.hpp"
#include "hermes/node/node.hpp"
#include "hermes/synth.hpp"

namespace hermes::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitProtocol = 3;

inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return kExitUsage;
  if (dynamic_cast<const net::IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const Error*>(&e)) return kExitProtocol;
  return kExitIo;
}

// ---------------------------------------------------------------- files

inline Bytes read_file(const std::string& path) {
  if (path == "-") {
    std::string s((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
    return to_bytes(s);
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw net::IoError("cannot read " + path);
  return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, ByteView data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw net::IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!f) throw net::IoError("short write on " + path);
}

// Splits CSV text into rows of cells. Quoted cells may hold delimiters,
// doubled quotes and line breaks.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delim = ',') {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = any = true;
    } else if (c == delim) {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw CorruptInput("unterminated quote in CSV input");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct ColumnSelection {
  std::vector<std::string> columns;  // header names or 1-based indices
  char delimiter = ',';
  unsigned width = 1;  // bytes per packed sample
};

// The selected columns as one byte stream: every integer cell packed
// big-endian into `width` bytes, column after column.
inline Bytes csv_columns(std::string_view text, const ColumnSelection& sel) {
  const auto rows = parse_csv(text, sel.delimiter);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  std::vector<std::size_t> index;
  for (const auto& c : sel.columns) {
    std::size_t pos = 0;
    const auto named = std::find(header.begin(), header.end(), c);
    if (named != header.end()) {
      pos = static_cast<std::size_t>(named - header.begin());
    } else {
      std::size_t used = 0;
      unsigned long n = 0;
      try {
        n = std::stoul(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || n == 0 || n > header.size()) throw ArgumentError("no CSV column '" + c + "'");
      pos = n - 1;
    }
    index.push_back(pos);
  }
  const auto layout = preprocess::make_layout(sel.width);
  const std::int64_t lo = -(std::int64_t{1} << (8 * sel.width - 1));
  const std::int64_t hi = sel.width == 8 ? INT64_MAX : (std::int64_t{1} << (8 * sel.width)) - 1;
  Bytes out;
  for (const auto col : index) {
    preprocess::Samples samples;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (col >= rows[r].size()) throw CorruptInput("CSV row " + std::to_string(r + 1) + " is short");
      const auto& cell = rows[r][col];
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (cell.empty() || used != cell.size() || v < lo || v > hi) {
        throw CorruptInput("CSV cell '" + cell + "' is not a " + std::to_string(sel.width) + "-byte integer");
      }
      samples.push_back(v);
    }
    append(out, preprocess::pack(samples, layout));
  }
  return out;
}

// Raw bytes, a synthetic dataset (header dropped) or selected CSV columns.
inline Bytes load_input(const std::string& path, const ColumnSelection& sel) {
  Bytes data = read_file(path);
  if (!sel.columns.empty()) return csv_columns(key_of(data), sel);
  if (synth::is_dataset(data)) {
    const auto body = synth::parse_header(data).second;
    return Bytes(body.begin(), body.end());
  }
  return data;
}

// ---------------------------------------------------------------- configs

struct EngineFlags {
  std::string transform;  // empty: identity over chunk_bytes, or hamming:7
  std::size_t chunk_bytes = 0;
  std::string fp = "crc32:4";
  std::string preprocess = "none";
  unsigned width = 1;
};

inline ecc::Transform resolve_transform(const EngineFlags& f, Scheme scheme) {
  if (f.transform.empty()) {
    if (f.chunk_bytes != 0) {
      if (scheme != Scheme::dd) throw ConfigError("--chunk-bytes without --transform only suits --scheme dd");
      return ecc::Transform::identity(f.chunk_bytes);
    }
    return ecc::Transform::hamming(7);
  }
  auto t = ecc::Transform::parse(f.transform);
  if (f.chunk_bytes != 0 && f.chunk_bytes != t.chunk_bytes()) {
    throw ConfigError("--chunk-bytes " + std::to_string(f.chunk_bytes) + " disagrees with " + f.transform + " (" +
                      std::to_string(t.chunk_bytes()) + " bytes)");
  }
  return t;
}

inline engine::EngineConfig make_config(const EngineFlags& f, Scheme scheme) {
  return engine::EngineConfig(resolve_transform(f, scheme), scheme, parse_fingerprint_config(f.fp),
                              preprocess::parse_mode(f.preprocess), preprocess::make_layout(f.width));
}

inline std::vector<Scheme> parse_schemes(const std::vector<std::string>& names) {
  std::vector<Scheme> out;
  for (const auto& n : names) out.push_back(parse_scheme(n));
  if (out.empty()) out.assign(std::begin(kAllSchemes), std::end(kAllSchemes));
  return out;
}

// ---------------------------------------------------------------- compress

inline constexpr const char* kCompressHeader =
    "scheme,transform,fp,preprocess,input_bytes,chunks,distinct_chunks,bases,payloads,collisions,bytes,ratio";

struct CompressRow {
  Scheme scheme;
  std::string transform;
  std::string fp;
  std::string preprocess;
  std::uint64_t input_bytes = 0;
  costmodel::CostParams observed;
  std::uint64_t payloads = 0;
  std::uint64_t collisions = 0;
  std::uint64_t bytes = 0;
  double ratio = 0;
};

// Encodes and decodes `data` once per scheme against fresh stores.
inline std::vector<CompressRow> compress(ByteView data, const EngineFlags& flags, const std::vector<Scheme>& schemes) {
  std::vector<CompressRow> rows;
  if (data.empty()) return rows;
  for (const auto scheme : schemes) {
    const auto cfg = make_config(flags, scheme);
    engine::Encoder enc(cfg);
    engine::Decoder dec(cfg);
    const auto chunked = engine::split_into_chunks(data, cfg.chunk_bytes());
    for (const auto& c : chunked.chunks) {
      if (dec.decode_token(enc.encode_chunk(c)) != c) throw ValidationError("chunk did not survive " + to_string(scheme));
    }
    CompressRow r{scheme, cfg.transform.to_string(), to_string(cfg.fp), preprocess::to_string(cfg.mode), data.size(),
                  engine::observe(data, cfg)};
    r.payloads = enc.stats().payloads;
    r.collisions = enc.collisions();
    r.bytes = enc.stats().content_bytes();
    r.ratio = costmodel::compression_ratio(r.observed.C, r.observed.n_B, r.bytes);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string to_csv(const std::vector<CompressRow>& rows) {
  std::string out = std::string(kCompressHeader) + '\n';
  for (const auto& r : rows) {
    out += to_string(r.scheme) + ',' + r.transform + ',' + r.fp + ',' + r.preprocess + ',' +
           std::to_string(r.input_bytes) + ',' + std::to_string(r.observed.C) + ',' + std::to_string(r.observed.B_DD) +
           ',' + std::to_string(r.observed.B_GD) + ',' + std::to_string(r.payloads) + ',' + std::to_string(r.collisions) + ',' +
           std::to_string(r.bytes) +
           ',' + costmodel::format_ratio(r.ratio) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------- synth

inline constexpr const char* kSynthHeader =
    "m,chunk_bytes,num_bases,chunks_per_basis,repetitions,seed,chunks,distinct_chunks,bases,chunk_to_basis_ratio,"
    "gd_vanilla_ratio,dd_ratio";

// Writes the dataset file and describes it in one CSV row.
inline std::string synth_report(const synth::Dataset& ds, const std::string& fp) {
  const auto& p = ds.params;
  const auto data = ds.data();
  const engine::EngineConfig cfg(ecc::Transform::hamming(p.m), Scheme::gd_vanilla, parse_fingerprint_config(fp));
  const auto obs = engine::observe(data, cfg);
  const auto gd = costmodel::transmission_cost(Scheme::gd_vanilla, obs);
  const auto dd = costmodel::transmission_cost(Scheme::dd, obs);
  std::string out = std::string(kSynthHeader) + '\n';
  out += std::to_string(p.m) + ',' + std::to_string(cfg.chunk_bytes()) + ',' + std::to_string(p.num_bases) + ',' +
         std::to_string(p.chunks_per_basis) + ',' + std::to_string(p.repetitions) + ',' + std::to_string(p.seed) + ',' +
         std::to_string(obs.C) + ',' + std::to_string(obs.B_DD) + ',' + std::to_string(obs.B_GD) + ',' +
         costmodel::format_ratio(static_cast<double>(obs.B_DD) / static_cast<double>(obs.B_GD)) + ',' +
         costmodel::format_ratio(costmodel::compression_ratio(obs.C, obs.n_B, gd)) + ',' +
         costmodel::format_ratio(costmodel::compression_ratio(obs.C, obs.n_B, dd)) + '\n';
  return out;
}

// ---------------------------------------------------------------- cost

struct CostArgs {
  std::uint64_t C = 1000000;
  std::uint64_t n_B = 128;
  std::uint64_t k_B = 127;
  std::uint64_t h_B = 20;
  std::uint64_t m_dd = 156250;  // DD matches: C - B_DD
  std::optional<std::uint64_t> b_gd;
  std::optional<std::uint64_t> deviation_sum;       // default: C bytes (one per chunk)
  std::optional<std::uint64_t> dual_deviation_sum;  // default: mean deviation times |Q|
  std::optional<std::uint64_t> h_reduced;           // default: h_B minus mean deviation
};

inline costmodel::CostParams cost_params(const CostArgs& a) {
  if (a.m_dd > a.C) throw ArgumentError("--m-dd cannot exceed --chunks");
  costmodel::CostParams p;
  p.C = a.C;
  p.n_B = a.n_B;
  p.k_B = a.k_B;
  p.h_B = a.h_B;
  p.B_DD = a.C - a.m_dd;
  p.B_GD = a.b_gd.value_or(0);
  p.deviation_sum = a.deviation_sum.value_or(a.C);
  const std::uint64_t mean = a.C == 0 ? 0 : p.deviation_sum / a.C;
  p.h_reduced = a.h_reduced.value_or(a.h_B >= mean ? a.h_B - mean : 0);
  p.dual_deviation_sum = a.dual_deviation_sum.value_or(p.B_DD >= p.B_GD ? (p.B_DD - p.B_GD) * mean : 0);
  if (p.k_B > p.n_B || p.n_B == 0 || p.k_B == 0) throw ArgumentError("need 0 < k_B <= n_B");
  if (p.B_GD > p.B_DD) throw ArgumentError("--b-gd cannot exceed the distinct chunk count C - M_DD");
  return p;
}

// One "quantity,value" row per threshold, then per-scheme costs when the
// basis count is known.
inline std::string cost_table(const CostArgs& a) {
  const auto p = cost_params(a);
  const auto o = costmodel::gd_vanilla_outperformance(p);
  std::string out = "quantity,value\n";
  out += "dd_break_even_matches," + std::to_string(costmodel::dd_break_even_matches(p.C, p.n_B, p.h_B)) + '\n';
  out += "gd_vanilla_bound," + std::to_string(o.bound) + '\n';
  out += "gd_vanilla_min_matches," + std::to_string(o.min_matches) + '\n';
  out += "gd_vanilla_extra_over_dd," + std::to_string(o.extra_over_dd) + '\n';
  if (a.b_gd) {
    for (const auto& r : costmodel::cost_report(p)) {
      out += "cost_" + to_string(r.scheme) + ',' + std::to_string(r.bytes) + '\n';
      out += "ratio_" + to_string(r.scheme) + ',' + costmodel::format_ratio(r.ratio) + '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------- bench

inline constexpr const char* kBenchHeader =
    "mode,transform,chunk_bytes,fp,input_bytes,chunks,payload_bytes,echo_bytes,framing_bytes,wire_bytes,"
    "predicted_bytes,ratio,bases_sent,collisions";
inline constexpr const char* kBenchTimingColumns = ",seconds,throughput_bps";

struct BenchArgs {
  std::string input;  // empty: a synthetic dataset per Hamming transform
  ColumnSelection columns;
  synth::SynthParams synth{7, 64, 16, 2, 1};
  std::vector<std::string> transforms{"hamming:7"};
  std::vector<std::string> modes;  // raw and scheme names; empty runs all five
  std::string fp = "crc32:4";
  std::string preprocess = "none";
  unsigned width = 1;
  std::size_t window = protocol::kDefaultWindow;
  bool trace = false;
  bool timing = false;
};

struct BenchRow {
  std::string mode;
  std::string transform;
  std::size_t chunk_bytes = 0;
  std::string fp;
  std::uint64_t input_bytes = 0;
  std::uint64_t chunks = 0;
  node::MetricsSnapshot source;
  std::uint64_t predicted = 0;
  double ratio = 0;
};

namespace detail {

struct TempFile {
  std::string path;
  explicit TempFile(ByteView data) {
    static std::atomic<unsigned> counter{0};
    path = (std::filesystem::temp_directory_path() /
            ("hermes_bench_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)))
               .string();
    write_file(path, data);
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

// Streams `data` from one source node to one sink node over loopback TCP.
inline node::MetricsSnapshot run_pair(const std::string& input, protocol::NodeClass cls, const engine::EngineConfig& cfg,
                                      const BenchArgs& a, Bytes* received) {
  std::optional<TempFile> out;
  if (received) out.emplace(ByteView{});
  node::NodeOptions so;
  so.role = protocol::Role::sink;
  so.cls = cls;
  so.config = cfg;
  so.listen = "127.0.0.1:0";
  so.sessions = 1;
  so.trace = a.trace;
  if (out) so.output = out->path;
  node::Node sink(so);
  sink.start();
  std::string sink_error;
  std::thread t([&] {
    try {
      sink.run();
    } catch (const std::exception& e) {
      sink_error = e.what();
    }
  });
  node::NodeOptions src;
  src.role = protocol::Role::source;
  src.cls = cls;
  src.config = cfg;
  src.upstream = "127.0.0.1:" + std::to_string(sink.port());
  src.input = input;
  src.window = a.window;
  src.trace = a.trace;
  node::Node source(src);
  try {
    source.run();
  } catch (...) {
    sink.stop();
    t.join();
    throw;
  }
  t.join();
  if (!sink_error.empty()) throw ProtocolError(sink_error);
  if (sink.failed_sessions() != 0) throw ProtocolError("sink session failed: " + sink.last_error());
  if (received) *received = read_file(out->path);
  return source.metrics();
}

}  // namespace detail

// Streams the input through a source and a sink once per (transform, mode)
// and reports the source's traffic.
inline std::vector<BenchRow> bench(const BenchArgs& a) {
  std::vector<std::string> modes = a.modes;
  if (modes.empty()) modes = {"raw", "dd", "gd-vanilla", "gd-reduced", "gd-dual"};
  std::optional<Bytes> given;
  if (!a.input.empty()) given = load_input(a.input, a.columns);
  std::vector<BenchRow> rows;
  for (const auto& spec : a.transforms) {
    EngineFlags flags{spec, 0, a.fp, a.preprocess, a.width};
    const auto transform = ecc::Transform::parse(spec);
    Bytes data;
    if (given) {
      data = *given;
    } else {
      const auto* hc = transform.hamming_config();
      if (!hc) throw ConfigError("synthetic bench data needs a hamming transform; pass --input for " + spec);
      auto params = a.synth;
      params.m = hc->m;
      data = synth::generate_dataset(params).data();
    }
    if (data.empty()) continue;
    detail::TempFile file(data);
    for (const auto& mode : modes) {
      const bool raw = mode == "raw";
      const Scheme scheme = raw ? Scheme::gd_vanilla : parse_scheme(mode);
      const auto cfg = make_config(flags, scheme);
      const auto cls = raw ? protocol::NodeClass::basic
                           : (scheme == Scheme::dd ? protocol::NodeClass::dedup : protocol::NodeClass::gd);
      Bytes received;
      BenchRow r;
      r.mode = mode;
      r.transform = spec;
      r.chunk_bytes = cfg.chunk_bytes();
      r.fp = to_string(cfg.fp);
      r.input_bytes = data.size();
      r.source = detail::run_pair(file.path, cls, cfg, a, &received);
      if (received != data) throw ValidationError(mode + " over " + spec + " did not arrive intact");
      const auto obs = engine::observe(data, cfg);
      r.chunks = obs.C;
      r.predicted = raw ? data.size() : costmodel::transmission_cost(scheme, obs);
      r.ratio = static_cast<double>(data.size()) / static_cast<double>(r.source.payload_bytes_sent);
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

inline std::string to_csv(const std::vector<BenchRow>& rows, bool timing) {
  std::string out = kBenchHeader;
  if (timing) out += kBenchTimingColumns;
  out += '\n';
  for (const auto& r : rows) {
    out += r.mode + ',' + r.transform + ',' + std::to_string(r.chunk_bytes) + ',' + r.fp + ',' +
           std::to_string(r.input_bytes) + ',' + std::to_string(r.chunks) + ',' +
           std::to_string(r.source.payload_bytes_sent) + ',' + std::to_string(r.source.echo_bytes_sent) + ',' +
           std::to_string(r.source.framing_bytes_sent) + ',' + std::to_string(r.source.bytes_sent) + ',' +
           std::to_string(r.predicted) + ',' + costmodel::format_ratio(r.ratio) + ',' +
           std::to_string(r.source.bases_sent) + ',' + std::to_string(r.source.collisions);
    if (timing) out += ',' + costmodel::format_ratio(r.source.seconds) + ',' + costmodel::format_ratio(r.source.throughput());
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- front end

namespace detail {

inline std::atomic<node::Node*> g_running_node{nullptr};

extern "C" inline void on_stop_signal(int) {
  if (auto* n = g_running_node.load()) n->stop();
}

inline void add_engine_flags(CLI::App* app, EngineFlags& f) {
  app->add_option("--transform", f.transform, "hamming:M, rs:N,K or identity:N");
  app->add_option("--chunk-bytes", f.chunk_bytes, "chunk length; alone it selects plain chunking for dd");
  app->add_option("--fp", f.fp, "fingerprint ALGO:LEN with ALGO one of crc32, sha1, sha256")->capture_default_str();
  app->add_option("--preprocess", f.preprocess, "none, delta or offset")->capture_default_str();
  app->add_option("--width", f.width, "sample width in bytes for preprocessing and CSV packing")->capture_default_str();
}

// Turns the entries of `node --config F` into flags placed ahead of the
// command-line ones, so that the command line wins.
inline std::vector<std::string> expand_node_config(std::vector<std::string> args) {
  const auto node = std::find(args.begin(), args.end(), "node");
  if (node == args.end()) return args;
  std::string path;
  for (auto it = node + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
    if (it->rfind("--config=", 0) == 0) path = it->substr(9);
  }
  if (path.empty()) return args;
  std::ifstream f(path);
  if (!f) throw net::IoError("cannot read config " + path);
  std::vector<std::string> flags;
  for (const auto& item : CLI::ConfigTOML().from_config(f)) {
    if (!item.parents.empty() && item.parents != std::vector<std::string>{"node"}) continue;
    if (item.name == "config" || item.name == "++" || item.name == "--") continue;
    if (item.name == "trace") {
      if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "1")) flags.push_back("--trace");
      continue;
    }
    flags.push_back("--" + item.name);
    flags.insert(flags.end(), item.inputs.begin(), item.inputs.end());
  }
  args.insert(node + 1, flags.begin(), flags.end());
  return args;
}

}  // namespace detail

// Parses and runs one command line. Reports go to `out`, diagnostics to `err`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized deduplication toolkit", "hermes"};
  app.require_subcommand(1);

  // compress
  auto* compress_cmd = app.add_subcommand("compress", "offline per-scheme compression report");
  std::string compress_input;
  std::vector<std::string> compress_schemes;
  EngineFlags compress_flags;
  compress_flags.fp = "sha1:6";
  ColumnSelection compress_cols;
  compress_cmd->add_option("input", compress_input, "raw file, synthetic dataset or CSV ('-' for stdin)")->required();
  compress_cmd->add_option("--scheme", compress_schemes, "schemes to report (default: all)");
  compress_cmd->add_option("--column", compress_cols.columns, "CSV column by header name or 1-based index");
  compress_cmd->add_option("--delimiter", compress_cols.delimiter, "CSV delimiter");
  detail::add_engine_flags(compress_cmd, compress_flags);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth::SynthParams sp;
  std::string synth_output, synth_fp = "crc32:4";
  synth_cmd->add_option("--m", sp.m, "Hamming parity bits")->capture_default_str();
  synth_cmd->add_option("--bases", sp.num_bases)->capture_default_str();
  synth_cmd->add_option("--chunks-per-basis", sp.chunks_per_basis)->capture_default_str();
  synth_cmd->add_option("--repetitions", sp.repetitions)->capture_default_str();
  synth_cmd->add_option("--seed", sp.seed)->capture_default_str();
  synth_cmd->add_option("--fp", synth_fp, "fingerprint used for the reported ratios")->capture_default_str();
  synth_cmd->add_option("-o,--output", synth_output, "dataset file")->required();

  // cost
  auto* cost_cmd = app.add_subcommand("cost", "analytic costs and thresholds");
  CostArgs ca;
  std::uint64_t b_gd = 0, dev = 0, dual_dev = 0, h_red = 0;
  cost_cmd->add_option("--chunks", ca.C, "C")->capture_default_str();
  cost_cmd->add_option("--n-bytes", ca.n_B)->capture_default_str();
  cost_cmd->add_option("--k-bytes", ca.k_B)->capture_default_str();
  cost_cmd->add_option("--h-bytes", ca.h_B)->capture_default_str();
  cost_cmd->add_option("--m-dd", ca.m_dd, "chunks DD finds already stored")->capture_default_str();
  auto* b_gd_opt = cost_cmd->add_option("--b-gd", b_gd, "distinct bases; enables the per-scheme rows");
  auto* dev_opt = cost_cmd->add_option("--deviation-sum", dev, "deviation bytes over all chunks (default C)");
  auto* dual_opt = cost_cmd->add_option("--dual-deviation-sum", dual_dev);
  auto* h_red_opt = cost_cmd->add_option("--h-reduced", h_red);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "loopback TCP traffic benchmark");
  BenchArgs ba;
  bench_cmd->add_option("--input", ba.input, "data to stream (default: synthetic per transform)");
  bench_cmd->add_option("--column", ba.columns.columns);
  bench_cmd->add_option("--transform", ba.transforms, "repeat to sweep")->capture_default_str();
  bench_cmd->add_option("--scheme", ba.modes, "raw, dd or gd-*; repeat to select (default: all)");
  bench_cmd->add_option("--fp", ba.fp)->capture_default_str();
  bench_cmd->add_option("--preprocess", ba.preprocess)->capture_default_str();
  bench_cmd->add_option("--width", ba.width)->capture_default_str();
  bench_cmd->add_option("--bases", ba.synth.num_bases)->capture_default_str();
  bench_cmd->add_option("--chunks-per-basis", ba.synth.chunks_per_basis)->capture_default_str();
  bench_cmd->add_option("--repetitions", ba.synth.repetitions)->capture_default_str();
  bench_cmd->add_option("--seed", ba.synth.seed)->capture_default_str();
  bench_cmd->add_option("--window", ba.window)->capture_default_str();
  bench_cmd->add_flag("--trace", ba.trace, "log every frame to stderr");
  bench_cmd->add_flag("--timing", ba.timing, "add seconds and throughput columns");

  // node
  auto* node_cmd = app.add_subcommand("node", "run one protocol node");
  node_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string node_config;
  node_cmd->add_option("--config", node_config, "key=value file; command-line flags win");
  std::string role = "sink", cls = "gd", scheme = "gd-vanilla", metrics_format = "csv";
  EngineFlags node_flags;
  node::NodeOptions no;
  node_cmd->add_option("--role", role, "source, intermediate or sink")->capture_default_str();
  node_cmd->add_option("--class", cls, "basic, dedup or gd")->capture_default_str();
  node_cmd->add_option("--scheme", scheme)->capture_default_str();
  detail::add_engine_flags(node_cmd, node_flags);
  node_cmd->add_option("--listen", no.listen, "host:port");
  node_cmd->add_option("--upstream", no.upstream, "host:port");
  node_cmd->add_option("--input", no.input, "source data ('-' for stdin)");
  node_cmd->add_option("--output", no.output, "sink output; session k > 0 writes PATH.k");
  node_cmd->add_option("--snapshot", no.snapshot, "sink store snapshot");
  node_cmd->add_option("--admin", no.admin, "unix socket serving metrics CSV");
  node_cmd->add_option("--sessions", no.sessions, "exit after this many sessions (0: until signalled)");
  node_cmd->add_option("--window", no.window)->capture_default_str();
  node_cmd->add_option("--metrics-format", metrics_format, "csv or json")->capture_default_str();
  node_cmd->add_flag("--trace", no.trace);

  try {
    args = detail::expand_node_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const net::IoError& e) {
    err << "hermes: " << e.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    for (auto* sub : app.get_subcommands()) {
      if (sub->get_help_ptr() && sub->get_help_ptr()->count() > 0) {
        out << sub->help();
        return kExitOk;
      }
    }
    err << "hermes: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (compress_cmd->parsed()) {
      const Bytes data = load_input(compress_input, {compress_cols.columns, compress_cols.delimiter, compress_flags.width});
      auto schemes = parse_schemes(compress_schemes);
      if (compress_schemes.empty() && compress_flags.transform.empty() && compress_flags.chunk_bytes != 0) {
        schemes = {Scheme::dd};
      }
      out << to_csv(compress(data, compress_flags, schemes));
    } else if (synth_cmd->parsed()) {
      parse_fingerprint_config(synth_fp);
      const auto ds = synth::generate_dataset(sp);
      write_file(synth_output, synth::serialize(ds));
      out << synth_report(ds, synth_fp);
    } else if (cost_cmd->parsed()) {
      if (b_gd_opt->count()) ca.b_gd = b_gd;
      if (dev_opt->count()) ca.deviation_sum = dev;
      if (dual_opt->count()) ca.dual_deviation_sum = dual_dev;
      if (h_red_opt->count()) ca.h_reduced = h_red;
      out << cost_table(ca);
    } else if (bench_cmd->parsed()) {
      ba.columns.width = ba.width;
      for (const auto& m : ba.modes) {
        if (m != "raw") parse_scheme(m);
      }
      out << to_csv(bench(ba), ba.timing);
    } else if (node_cmd->parsed()) {
      if (metrics_format != "csv" && metrics_format != "json") throw ConfigError("--metrics-format is csv or json");
      no.role = protocol::parse_role(role);
      no.cls = protocol::parse_class(cls);
      no.config = make_config(node_flags, parse_scheme(scheme));
      node::Node n(no);
      detail::g_running_node = &n;
      struct sigaction sa {};
      sa.sa_handler = detail::on_stop_signal;
      ::sigaction(SIGINT, &sa, nullptr);
      ::sigaction(SIGTERM, &sa, nullptr);
      try {
        n.run();
      } catch (...) {
        detail::g_running_node = nullptr;
        throw;
      }
      detail::g_running_node = nullptr;
      const auto m = n.metrics();
      out << (metrics_format == "json" ? node::to_json_line(m) : node::to_csv(m));
      if (n.failed_sessions() != 0) {
        err << "hermes: " << n.failed_sessions() << " session(s) failed: " << n.last_error() << "\n";
        return kExitProtocol;
      }
    }
  } catch (const std::exception& e) {
    err << "hermes: " << e.what() << "\n";
    return exit_code(e);
  }
  return kExitOk;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), std::cout, std::cerr);
}

}  // namespace hermes::cli
