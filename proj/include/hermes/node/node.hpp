#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <list>
#include <mutex>
#include <thread>

#include "hermes/engine/chunker.hpp"
#include "hermes/node/metrics.hpp"
#include "hermes/node/socket.hpp"
#include "hermes/protocol/sink.hpp"
#include "hermes/protocol/source.hpp"

namespace hermes::node {

struct NodeOptions {
  protocol::Role role = protocol::Role::sink;
  protocol::NodeClass cls = protocol::NodeClass::gd;
  engine::EngineConfig config{ecc::Transform::hamming(7), Scheme::gd_vanilla};
  std::string listen;
  std::string upstream;
  std::string input;     // source: file to send ("-" for stdin)
  std::string output;    // sink: session 0 writes here, session k to output.k
  std::string snapshot;  // sink: store file loaded at start, written at shutdown
  std::string admin;     // unix socket answering every connection with metrics CSV
  std::size_t window = protocol::kDefaultWindow;
  std::size_t sessions = 0;  // listeners stop after this many sessions; 0 runs until stop()
  bool trace = false;        // log every frame to stderr
};

inline void validate(const NodeOptions& o) {
  using protocol::Role;
  if (o.cls != protocol::NodeClass::basic) protocol::check_class_scheme(o.cls, o.config.scheme);
  if (o.role != Role::source && o.listen.empty()) throw ConfigError(protocol::to_string(o.role) + " needs --listen");
  if (o.role != Role::sink && o.upstream.empty()) throw ConfigError(protocol::to_string(o.role) + " needs --upstream");
  if (o.role == Role::source && o.input.empty()) throw ConfigError("source needs --input");
  engine::ChunkCodec check(o.config);
}

inline std::string session_output_path(const std::string& base, std::size_t session) {
  return session == 0 ? base : base + "." + std::to_string(session);
}

namespace detail {

// Frame-level connection: buffered writes, incremental reads.
class Channel {
 public:
  Channel(net::Fd fd, Metrics& m, std::string name, bool trace, std::mutex& log_mutex)
      : fd_(std::move(fd)), metrics_(m), name_(std::move(name)), trace_(trace), log_mutex_(log_mutex) {}

  const net::Fd& fd() const noexcept { return fd_; }

  void queue(const protocol::Message& m) {
    log("->", m);
    protocol::encode_message(m, out_);
  }
  void queue(const std::vector<protocol::Message>& ms) {
    for (const auto& m : ms) queue(m);
  }

  // Sends queued frames. Response frames are counted here; data frames are
  // counted through the link statistics of the sending session.
  void flush(bool count_bytes) {
    if (out_.empty()) return;
    net::send_all(fd_, out_);
    if (count_bytes) metrics_.add_sent(out_.size());
    out_.clear();
  }

  // Reads once; false when the peer has closed.
  bool read() {
    Bytes b = net::recv_some(fd_);
    if (b.empty()) return false;
    metrics_.add_received(b.size());
    reader_.push(b);
    return true;
  }

  std::optional<protocol::Message> next() {
    auto m = reader_.next();
    if (m) log("<-", *m);
    return m;
  }

 private:
  void log(const char* dir, const protocol::Message& m) {
    if (!trace_) return;
    std::lock_guard lock(log_mutex_);
    std::cerr << name_ << ' ' << dir << ' ' << protocol::describe(m) << '\n';
  }

  net::Fd fd_;
  Metrics& metrics_;
  std::string name_;
  bool trace_;
  std::mutex& log_mutex_;
  Bytes out_;
  protocol::FrameReader reader_;
};

// Waits for any of the fds to become readable. Returns a mask of readable fds.
inline unsigned wait_readable(std::initializer_list<int> fds, int timeout_ms) {
  pollfd p[2]{};
  std::size_t n = 0;
  for (int fd : fds) p[n++] = pollfd{fd, POLLIN, 0};
  const int rc = ::poll(p, n, timeout_ms);
  if (rc < 0 && errno != EINTR) throw net::IoError(net::errno_text("poll"));
  unsigned mask = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i].revents & (POLLIN | POLLHUP | POLLERR)) mask |= 1u << i;
  }
  return mask;
}

}  // namespace detail

class Node {
 public:
  explicit Node(NodeOptions o) : opts_(std::move(o)) { validate(opts_); }

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  ~Node() {
    stop();
    if (admin_thread_.joinable()) admin_thread_.join();
  }

  // Binds listeners and loads the snapshot; run() may follow from any thread.
  void start() {
    if (started_) return;
    started_ = true;
    if (opts_.role != protocol::Role::source) {
      const auto cls = opts_.role == protocol::Role::intermediate && opts_.cls == protocol::NodeClass::basic
                           ? protocol::NodeClass::basic
                           : opts_.cls;
      ctx_ = std::make_shared<protocol::SinkContext>(cls, opts_.config);
      load_snapshot();
      listener_ = net::listen_tcp(opts_.listen);
      port_ = net::local_port(listener_);
    }
    if (!opts_.admin.empty()) {
      admin_ = net::listen_unix(opts_.admin);
      admin_thread_ = std::thread([this] { serve_admin(); });
    }
  }

  std::uint16_t port() const noexcept { return port_; }
  std::shared_ptr<protocol::SinkContext> context() const { return ctx_; }
  MetricsSnapshot metrics() const { return metrics_.snapshot(); }
  std::size_t failed_sessions() const noexcept { return failed_; }
  std::string last_error() const {
    std::lock_guard lock(log_mutex_);
    return last_error_;
  }

  void stop() { stop_ = true; }

  // Blocks until the node's work is done or stop() is called.
  void run() {
    start();
    if (opts_.role == protocol::Role::source) {
      run_source();
    } else {
      serve();
      save_snapshot();
    }
  }

 private:
  void run_source() {
    std::unique_ptr<std::istream> file;
    std::istream* in = &std::cin;
    if (opts_.input != "-") {
      file = std::make_unique<std::ifstream>(opts_.input, std::ios::binary);
      if (!*file) throw net::IoError("cannot read " + opts_.input);
      in = file.get();
    }
    detail::Channel up(net::connect_tcp(opts_.upstream), metrics_, "up", opts_.trace, log_mutex_);
    protocol::SourceSession session(opts_.cls, opts_.config, opts_.window);
    metrics_.add_session();
    protocol::LinkStats seen_link;
    protocol::ChunkCounters seen_counters;
    const std::size_t nb = session.codec().chunk_bytes();
    std::uint64_t total = 0;
    bool eof = false, closing = false;
    Bytes piece(nb);

    up.queue(session.start());
    while (!session.done()) {
      if (stop_) throw net::IoError("source stopped before the stream finished");
      while (session.can_send() && !eof) {
        in->read(reinterpret_cast<char*>(piece.data()), static_cast<std::streamsize>(nb));
        const auto got = static_cast<std::size_t>(in->gcount());
        if (got < nb) eof = true;
        if (got == 0) break;
        total += got;
        Bytes chunk(piece.begin(), piece.begin() + static_cast<std::ptrdiff_t>(got));
        if (opts_.cls != protocol::NodeClass::basic) chunk.resize(nb, 0);
        up.queue(session.send_chunk(chunk));
      }
      if (eof && !closing && session.ready() && session.drained()) {
        closing = true;
        up.queue(session.finish(total));
      }
      up.flush(false);
      metrics_.add_link(session.stats(), seen_link);
      if (detail::wait_readable({up.fd().get()}, 200) == 0) continue;
      if (!up.read()) throw ProtocolError("upstream closed the connection");
      while (auto m = up.next()) up.queue(session.on_response(*m));
      metrics_.add_counters(session.counters(), seen_counters);
    }
    up.flush(false);
    metrics_.add_link(session.stats(), seen_link);
    metrics_.add_counters(session.counters(), seen_counters);
    metrics_.add_bases_sent(session.counters().payloads);
  }

  void serve() {
    std::list<std::thread> workers;
    std::size_t accepted = 0;
    while (!stop_ && (opts_.sessions == 0 || accepted < opts_.sessions)) {
      net::Fd fd = net::accept_for(listener_, std::chrono::milliseconds(100));
      if (!fd) continue;
      const std::size_t index = accepted++;
      metrics_.add_session();
      workers.emplace_back([this, index, f = std::move(fd)]() mutable {
        try {
          if (opts_.role == protocol::Role::sink) {
            serve_sink(std::move(f), index);
          } else if (opts_.cls == protocol::NodeClass::basic) {
            splice(std::move(f));
          } else {
            relay(std::move(f), index);
          }
        } catch (const std::exception& e) {
          ++failed_;
          std::lock_guard lock(log_mutex_);
          last_error_ = e.what();
          std::cerr << "session " << index << ": " << e.what() << '\n';
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  void serve_sink(net::Fd fd, std::size_t index) {
    std::ofstream out;
    if (!opts_.output.empty()) {
      const auto path = session_output_path(opts_.output, index);
      out.open(path, std::ios::binary | std::ios::trunc);
      if (!out) throw net::IoError("cannot write " + path);
    }
    detail::Channel down(std::move(fd), metrics_, "down#" + std::to_string(index), opts_.trace, log_mutex_);
    protocol::SinkSession session(ctx_, [&](ByteView b) {
      if (out.is_open()) out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    });
    protocol::ChunkCounters seen;
    while (!session.finished() && !session.should_disconnect()) {
      if (stop_) break;
      const int timeout = session.has_parked() ? 2 : 200;
      if (detail::wait_readable({down.fd().get()}, timeout) != 0) {
        if (!down.read()) break;
        while (auto m = down.next()) down.queue(session.handle(*m));
      }
      down.queue(session.poll());
      down.flush(true);
      metrics_.add_counters(session.counters(), seen);
    }
    down.flush(true);
    metrics_.add_counters(session.counters(), seen);
    if (!session.finished()) {
      throw ProtocolError("session ended early" +
                                    (session.last_error().empty() ? std::string() : ": " + session.last_error()));
    }
  }

  // Basic intermediate: bytes in, same bytes out.
  void splice(net::Fd down) {
    net::Fd up = net::connect_tcp(opts_.upstream);
    bool down_open = true, up_open = true;
    while ((down_open || up_open) && !stop_) {
      const unsigned ready = detail::wait_readable({down.get(), up.get()}, 200);
      if ((ready & 1) && down_open) {
        const Bytes b = net::recv_some(down);
        metrics_.add_received(b.size());
        if (b.empty()) {
          down_open = false;
          ::shutdown(up.get(), SHUT_WR);
        } else {
          net::send_all(up, b);
          metrics_.add_sent(b.size());
        }
      }
      if ((ready & 2) && up_open) {
        const Bytes b = net::recv_some(up);
        if (b.empty()) {
          up_open = false;
          ::shutdown(down.get(), SHUT_WR);
        } else {
          net::send_all(down, b);
        }
      }
    }
  }

  // Dedup or gd intermediate: a sink towards the peer below, a source
  // towards the node above.
  void relay(net::Fd fd, std::size_t index) {
    detail::Channel down(std::move(fd), metrics_, "down#" + std::to_string(index), opts_.trace, log_mutex_);
    detail::Channel up(net::connect_tcp(opts_.upstream), metrics_, "up#" + std::to_string(index), opts_.trace, log_mutex_);
    engine::StreamChunker chunker(opts_.config.chunk_bytes());
    std::deque<Bytes> queued;
    protocol::SinkSession sink(ctx_, [&](ByteView b) {
      for (auto& c : chunker.push(b)) queued.push_back(std::move(c));
    }, false);
    protocol::SourceSession source(opts_.cls, opts_.config, opts_.window);
    protocol::LinkStats seen_link;
    protocol::ChunkCounters seen_counters;
    bool flushed = false, closing = false;

    up.queue(source.start());
    while (!sink.finished()) {
      if (stop_ || sink.should_disconnect()) throw ProtocolError("relay session aborted");
      const int timeout = sink.has_parked() ? 2 : 200;
      const unsigned ready = detail::wait_readable({down.fd().get(), up.fd().get()}, timeout);
      if (ready & 1) {
        if (!down.read()) throw ProtocolError("peer closed before CLOSE");
        while (auto m = down.next()) down.queue(sink.handle(*m));
      }
      if (ready & 2) {
        if (!up.read()) throw ProtocolError("upstream closed the connection");
        while (auto m = up.next()) up.queue(source.on_response(*m));
      }
      down.queue(sink.poll());
      if (sink.closing() && !flushed) {
        if (auto last = chunker.finish()) queued.push_back(std::move(*last));
        flushed = true;
      }
      while (source.can_send() && !queued.empty()) {
        up.queue(source.send_chunk(queued.front()));
        queued.pop_front();
      }
      if (flushed && !closing && queued.empty() && source.ready() && source.drained()) {
        closing = true;
        up.queue(source.finish(chunker.total_bytes()));
      }
      if (source.done()) down.queue(sink.acknowledge_close());
      up.flush(false);
      down.flush(true);
      metrics_.add_link(source.stats(), seen_link);
      metrics_.add_counters(sink.counters(), seen_counters);
    }
    metrics_.add_bases_sent(source.counters().payloads);
  }

  void serve_admin() {
    while (!stop_) {
      net::Fd c = net::accept_for(admin_, std::chrono::milliseconds(100));
      if (!c) continue;
      try {
        net::send_all(c, to_bytes(to_csv(metrics_.snapshot())));
      } catch (const net::IoError&) {
      }
    }
    ::unlink(opts_.admin.c_str());
  }

  std::vector<std::string> snapshot_paths() const {
    std::vector<std::string> paths{opts_.snapshot};
    if (ctx_->stores.basis) paths.push_back(opts_.snapshot + ".bases");
    return paths;
  }

  void load_snapshot() {
    if (opts_.snapshot.empty() || opts_.role != protocol::Role::sink) return;
    const auto paths = snapshot_paths();
    if (std::filesystem::exists(paths[0])) ctx_->stores.primary->load(paths[0]);
    if (paths.size() > 1 && std::filesystem::exists(paths[1])) ctx_->stores.basis->load(paths[1]);
  }

  void save_snapshot() {
    if (opts_.snapshot.empty() || opts_.role != protocol::Role::sink) return;
    const auto paths = snapshot_paths();
    ctx_->stores.primary->save(paths[0]);
    if (paths.size() > 1) ctx_->stores.basis->save(paths[1]);
  }

  NodeOptions opts_;
  bool started_ = false;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> failed_{0};
  std::shared_ptr<protocol::SinkContext> ctx_;
  net::Fd listener_;
  net::Fd admin_;
  std::thread admin_thread_;
  std::uint16_t port_ = 0;
  Metrics metrics_;
  mutable std::mutex log_mutex_;
  std::string last_error_;
};

}  // namespace hermes::node
