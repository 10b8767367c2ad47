#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hermes/engine/observe.hpp"
#include "hermes/node/node.hpp"
#include "hermes/synth.hpp"

namespace hermes::node {
namespace {

namespace fs = std::filesystem;
using protocol::NodeClass;
using protocol::Role;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hermes_node_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

void write_file(const std::string& path, ByteView data) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Bytes read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

engine::EngineConfig gd_config(Scheme scheme = Scheme::gd_vanilla) {
  return engine::EngineConfig(ecc::Transform::hamming(7), scheme, parse_fingerprint_config("sha256:16"));
}

Bytes synthetic(std::uint32_t bases, std::uint32_t per_basis, std::uint32_t reps, std::uint64_t seed) {
  return synth::generate_dataset({7, bases, per_basis, reps, seed}).data();
}

NodeOptions sink_options(NodeClass cls, const engine::EngineConfig& cfg, const std::string& output, std::size_t sessions) {
  NodeOptions o;
  o.role = Role::sink;
  o.cls = cls;
  o.config = cfg;
  o.listen = "127.0.0.1:0";
  o.output = output;
  o.sessions = sessions;
  return o;
}

NodeOptions source_options(NodeClass cls, const engine::EngineConfig& cfg, const std::string& input, std::uint16_t port) {
  NodeOptions o;
  o.role = Role::source;
  o.cls = cls;
  o.config = cfg;
  o.upstream = "127.0.0.1:" + std::to_string(port);
  o.input = input;
  return o;
}

// Runs a listening node in the background.
struct Background {
  Node node;
  std::thread thread;
  std::string error;
  explicit Background(NodeOptions o) : node(std::move(o)) {
    node.start();
    thread = std::thread([this] {
      try {
        node.run();
      } catch (const std::exception& e) {
        error = e.what();
      }
    });
  }
  ~Background() {
    if (thread.joinable()) {
      node.stop();
      thread.join();
    }
  }
  void wait() { thread.join(); }
};

TEST(Node, OneMebibyteEndToEnd) {
  TempDir dir;
  const Bytes input = synthetic(256, 64, 4, 11);
  ASSERT_EQ(input.size(), 1u << 20);
  write_file(dir / "in", input);
  const auto cfg = gd_config();

  Background sink(sink_options(NodeClass::gd, cfg, dir / "out", 1));
  Node source(source_options(NodeClass::gd, cfg, dir / "in", sink.node.port()));
  source.run();
  sink.wait();
  EXPECT_EQ(sink.error, "");
  EXPECT_EQ(sink.node.failed_sessions(), 0u);
  EXPECT_EQ(read_file(dir / "out"), input);

  const auto s = source.metrics();
  EXPECT_EQ(s.bases_sent, 256u);
  EXPECT_EQ(s.payload_bytes_sent, costmodel::transmission_cost(cfg.scheme, engine::observe(input, cfg)));
  EXPECT_EQ(s.bytes_sent, s.payload_bytes_sent + s.echo_bytes_sent + s.framing_bytes_sent);
}

TEST(Node, ThreeNodeChain) {
  TempDir dir;
  std::mt19937_64 rng(5);
  Bytes input = synthetic(32, 16, 2, 12);
  for (int i = 0; i < 1001; ++i) input.push_back(static_cast<std::uint8_t>(rng()));
  write_file(dir / "in", input);
  const auto cfg = gd_config(Scheme::gd_reduced);

  Background sink(sink_options(NodeClass::gd, cfg, dir / "out", 1));
  NodeOptions mid;
  mid.role = Role::intermediate;
  mid.cls = NodeClass::gd;
  mid.config = cfg;
  mid.listen = "127.0.0.1:0";
  mid.upstream = "127.0.0.1:" + std::to_string(sink.node.port());
  mid.sessions = 1;
  Background relay(mid);
  Node source(source_options(NodeClass::basic, cfg, dir / "in", relay.node.port()));
  source.run();
  relay.wait();
  sink.wait();
  EXPECT_EQ(relay.error, "");
  EXPECT_EQ(relay.node.failed_sessions(), 0u);
  EXPECT_EQ(sink.node.failed_sessions(), 0u);
  EXPECT_EQ(read_file(dir / "out"), input);
  EXPECT_EQ(source.metrics().payload_bytes_sent, input.size());
  EXPECT_EQ(relay.node.metrics().payload_bytes_sent,
            costmodel::transmission_cost(cfg.scheme, engine::observe(input, cfg)));
}

TEST(Node, BasicRelaySplicesBytes) {
  TempDir dir;
  const Bytes input = synthetic(8, 8, 3, 13);
  write_file(dir / "in", input);
  const auto cfg = gd_config();
  Background sink(sink_options(NodeClass::gd, cfg, dir / "out", 1));
  NodeOptions mid;
  mid.role = Role::intermediate;
  mid.cls = NodeClass::basic;
  mid.config = cfg;
  mid.listen = "127.0.0.1:0";
  mid.upstream = "127.0.0.1:" + std::to_string(sink.node.port());
  mid.sessions = 1;
  Background relay(mid);
  Node source(source_options(NodeClass::gd, cfg, dir / "in", relay.node.port()));
  source.run();
  relay.wait();
  sink.wait();
  EXPECT_EQ(read_file(dir / "out"), input);
  EXPECT_EQ(relay.node.metrics().bytes_sent, source.metrics().bytes_sent);
}

TEST(Node, SixteenConcurrentSources) {
  TempDir dir;
  const auto cfg = gd_config();
  constexpr std::size_t kSources = 16;
  Background sink(sink_options(NodeClass::gd, cfg, dir / "out", kSources));
  std::vector<Bytes> inputs;
  for (std::size_t i = 0; i < kSources; ++i) {
    // Every source shares half of its bases with the others.
    Bytes b = synthetic(16, 8, 2, 100);
    append(b, synthetic(16, 8, 2, 200 + i));
    inputs.push_back(b);
    write_file(dir / ("in" + std::to_string(i)), b);
  }
  std::vector<std::thread> threads;
  std::vector<std::string> errors(kSources);
  for (std::size_t i = 0; i < kSources; ++i) {
    threads.emplace_back([&, i] {
      try {
        Node src(source_options(NodeClass::gd, cfg, dir / ("in" + std::to_string(i)), sink.node.port()));
        src.run();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
  }
  for (auto& t : threads) t.join();
  sink.wait();
  EXPECT_EQ(sink.node.failed_sessions(), 0u) << sink.node.last_error();
  // Outputs are numbered by accept order, so match them as a multiset.
  std::multiset<Bytes> want(inputs.begin(), inputs.end()), got;
  for (std::size_t i = 0; i < kSources; ++i) {
    EXPECT_EQ(errors[i], "");
    got.insert(read_file(session_output_path(dir / "out", i)));
  }
  EXPECT_EQ(got, want);
  EXPECT_EQ(sink.node.context()->stores.primary->size(), 16u + 16u * kSources);
}

TEST(Node, SinkCountsEveryChunk) {
  TempDir dir;
  std::mt19937_64 rng(9);
  Bytes input = synthetic(10, 20, 3, 14);
  for (int i = 0; i < 77; ++i) input.push_back(static_cast<std::uint8_t>(rng()));
  write_file(dir / "in", input);
  const auto cfg = gd_config(Scheme::gd_dual);
  Background sink(sink_options(NodeClass::gd, cfg, dir / "out", 1));
  Node source(source_options(NodeClass::gd, cfg, dir / "in", sink.node.port()));
  source.run();
  sink.wait();
  const auto m = sink.node.metrics();
  const std::uint64_t chunks = (input.size() + 15) / 16;
  EXPECT_EQ(m.store_hits + m.store_misses, chunks);
  EXPECT_EQ(m.chunks_processed, chunks);
  EXPECT_EQ(source.metrics().payload_bytes_sent, costmodel::transmission_cost(cfg.scheme, engine::observe(input, cfg)));
  EXPECT_EQ(read_file(dir / "out"), input);
}

TEST(Node, FreshNodeReportsZeroes) {
  TempDir dir;
  auto o = sink_options(NodeClass::gd, gd_config(), "", 0);
  o.admin = dir / "admin.sock";
  Background sink(o);
  const auto csv = key_of(net::recv_all(net::connect_unix(o.admin)));
  const auto nl = csv.find('\n');
  ASSERT_NE(nl, std::string::npos);
  EXPECT_EQ(csv.substr(0, nl), kMetricsCsvHeader);
  EXPECT_EQ(csv.substr(nl + 1, csv.find(',', nl) - nl - 1), "0");
  const auto m = sink.node.metrics();
  EXPECT_EQ(m.bytes_sent + m.bytes_received + m.chunks_processed + m.store_hits + m.store_misses + m.sessions, 0u);
}

TEST(Node, AdminReportsTraffic) {
  TempDir dir;
  const Bytes input = synthetic(4, 4, 2, 15);
  write_file(dir / "in", input);
  auto o = sink_options(NodeClass::gd, gd_config(), dir / "out", 0);
  o.admin = dir / "admin.sock";
  Background sink(o);
  Node(source_options(NodeClass::gd, gd_config(), dir / "in", sink.node.port())).run();
  // The session thread may still be finishing its last write.
  for (int i = 0; i < 100 && sink.node.metrics().chunks_processed < 32; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  const auto csv = key_of(net::recv_all(net::connect_unix(o.admin)));
  const auto row = csv.substr(csv.find('\n') + 1);
  std::vector<std::string> cols;
  std::stringstream ss(row);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  ASSERT_EQ(cols.size(), 13u);
  EXPECT_EQ(cols[5], "32");  // chunks_processed
  EXPECT_EQ(cols[10], "1");  // sessions
}

TEST(Node, SnapshotSurvivesRestart) {
  TempDir dir;
  const Bytes input = synthetic(12, 8, 2, 16);
  write_file(dir / "in", input);
  for (const auto scheme : {Scheme::gd_vanilla, Scheme::gd_dual}) {
    const auto cfg = gd_config(scheme);
    auto o = sink_options(NodeClass::gd, cfg, dir / "out", 1);
    o.snapshot = dir / ("store" + std::to_string(static_cast<int>(scheme)));
    std::uint64_t first_payload = 0;
    {
      Background sink(o);
      Node src(source_options(NodeClass::gd, cfg, dir / "in", sink.node.port()));
      src.run();
      sink.wait();
      first_payload = src.metrics().payload_bytes_sent;
    }
    ASSERT_TRUE(fs::exists(o.snapshot));
    Background sink(o);
    Node src(source_options(NodeClass::gd, cfg, dir / "in", sink.node.port()));
    src.run();
    sink.wait();
    EXPECT_EQ(read_file(dir / "out"), input);
    EXPECT_GT(first_payload, 0u);
    EXPECT_EQ(src.metrics().bases_sent, 0u);
    EXPECT_LT(src.metrics().payload_bytes_sent, first_payload);
    EXPECT_EQ(sink.node.metrics().store_misses, 0u);
  }
}

TEST(Node, MismatchedConfigFails) {
  TempDir dir;
  write_file(dir / "in", synthetic(2, 2, 1, 17));
  Background sink(sink_options(NodeClass::gd, gd_config(Scheme::gd_vanilla), dir / "out", 1));
  Node src(source_options(NodeClass::gd, gd_config(Scheme::gd_reduced), dir / "in", sink.node.port()));
  EXPECT_THROW(src.run(), ProtocolError);
  sink.wait();
  EXPECT_EQ(sink.node.failed_sessions(), 1u);
}

TEST(Node, RejectsBadOptions) {
  auto o = sink_options(NodeClass::dedup, gd_config(), "", 0);
  EXPECT_THROW(Node{o}, ConfigError);
  o = source_options(NodeClass::gd, gd_config(), "", 1);
  EXPECT_THROW(Node{o}, ConfigError);
  EXPECT_EQ(session_output_path("x", 0), "x");
  EXPECT_EQ(session_output_path("x", 3), "x.3");
}

}  // namespace
}  // namespace hermes::node
