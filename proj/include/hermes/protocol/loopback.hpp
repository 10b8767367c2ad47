#pragma once

#include <deque>
#include <memory>
#include <vector>

#include "hermes/engine/chunker.hpp"
#include "hermes/protocol/sink.hpp"
#include "hermes/protocol/source.hpp"

namespace hermes::protocol {

// Deterministic in-process network: chains of source -> intermediates -> sink
// joined by in-order frame queues. Sinks of all chains share one store, so
// several chains model several sources feeding one sink.

struct ChainSpec {
  NodeClass source = NodeClass::gd;
  std::vector<NodeClass> intermediates;
  NodeClass sink = NodeClass::gd;
};

struct TracedFrame {
  std::size_t link;  // 0 is the link leaving the source
  bool upstream;     // towards the sink
  Message message;
};

struct ChainResult {
  Bytes output;
  std::vector<LinkStats> links;  // stats of the sender on each link
  std::vector<TracedFrame> trace;
  ChunkCounters source_counters;
  ChunkCounters sink_counters;
};

class Loopback {
 public:
  Loopback(engine::EngineConfig cfg, NodeClass sink_class, std::size_t window = kDefaultWindow)
      : cfg_(std::move(cfg)), window_(window), sink_ctx_(std::make_shared<SinkContext>(sink_class, cfg_)) {}

  std::shared_ptr<SinkContext> sink_context() const { return sink_ctx_; }

  std::size_t add_chain(ByteView input, ChainSpec spec) {
    if (spec.sink != sink_ctx_->cls) throw ConfigError("chain sink class differs from the shared sink");
    auto c = std::make_unique<Chain>();
    c->id = chains_.size();
    c->links.resize(spec.intermediates.size() + 1);
    c->nodes.push_back(std::make_unique<SourceNode>(*this, *c, 0, spec.source, input));
    for (std::size_t i = 0; i < spec.intermediates.size(); ++i) {
      if (spec.intermediates[i] == NodeClass::basic) {
        c->nodes.push_back(std::make_unique<BasicRelay>(*this, *c, i + 1));
      } else {
        c->nodes.push_back(std::make_unique<Relay>(*this, *c, i + 1, spec.intermediates[i]));
      }
    }
    c->nodes.push_back(std::make_unique<SinkNode>(*this, *c, spec.intermediates.size() + 1));
    chains_.push_back(std::move(c));
    return chains_.size() - 1;
  }

  // Runs every chain to completion, delivering one frame per chain per round.
  void run() {
    for (;;) {
      bool progress = false;
      bool all_done = true;
      for (auto& c : chains_) {
        for (auto& n : c->nodes) progress |= n->pump();
        progress |= deliver_one(*c);
        all_done &= c->done();
      }
      if (all_done) return;
      if (!progress) throw ProtocolError("loopback network stalled");
    }
  }

  ChainResult result(std::size_t chain) const {
    const Chain& c = *chains_.at(chain);
    ChainResult r;
    r.output = static_cast<const SinkNode&>(*c.nodes.back()).output;
    r.trace = c.trace;
    for (std::size_t i = 0; i + 1 < c.nodes.size(); ++i) r.links.push_back(c.nodes[i]->up_stats());
    r.source_counters = static_cast<const SourceNode&>(*c.nodes.front()).session.counters();
    r.sink_counters = static_cast<const SinkNode&>(*c.nodes.back()).session.counters();
    return r;
  }

 private:
  struct Chain;

  struct Link {
    std::deque<Message> up, down;
  };

  struct Node {
    Loopback& net;
    Chain& chain;
    std::size_t index;
    Node(Loopback& n, Chain& c, std::size_t i) : net(n), chain(c), index(i) {}
    virtual ~Node() = default;
    virtual bool pump() { return false; }
    virtual void from_below(const Message&) { throw ProtocolError("node has nothing below it"); }
    virtual void from_above(const Message&) { throw ProtocolError("node has nothing above it"); }
    virtual bool done() const = 0;
    virtual LinkStats up_stats() const { return {}; }

    void send_up(Message m) {
      chain.trace.push_back({index, true, m});
      chain.links[index].up.push_back(std::move(m));
    }
    void send_down(Message m) {
      chain.trace.push_back({index - 1, false, m});
      chain.links[index - 1].down.push_back(std::move(m));
    }
    void send_all_down(std::vector<Message> ms) {
      for (auto& m : ms) send_down(std::move(m));
    }
    void send_all_up(std::vector<Message> ms) {
      for (auto& m : ms) send_up(std::move(m));
    }
  };

  struct SourceNode : Node {
    SourceSession session;
    Bytes input;
    std::size_t offset = 0;
    bool closing = false;

    SourceNode(Loopback& n, Chain& c, std::size_t i, NodeClass cls, ByteView in)
        : Node(n, c, i), session(cls, n.cfg_, n.window_), input(in.begin(), in.end()) {
      send_up(session.start());
    }

    bool pump() override {
      bool progress = false;
      const std::size_t nb = session.codec().chunk_bytes();
      while (session.can_send() && offset < input.size()) {
        const std::size_t take = std::min(nb, input.size() - offset);
        Bytes piece(input.begin() + static_cast<std::ptrdiff_t>(offset), input.begin() + static_cast<std::ptrdiff_t>(offset + take));
        if (session.node_class() != NodeClass::basic) piece.resize(nb, 0);
        send_up(session.send_chunk(piece));
        offset += take;
        progress = true;
      }
      if (!closing && session.ready() && offset == input.size() && session.drained()) {
        closing = true;
        send_up(session.finish(input.size()));
        progress = true;
      }
      return progress;
    }

    void from_above(const Message& m) override { send_all_up(session.on_response(m)); }
    bool done() const override { return session.done(); }
    LinkStats up_stats() const override { return session.stats(); }
  };

  struct BasicRelay : Node {
    LinkStats stats;
    using Node::Node;
    void from_below(const Message& m) override {
      stats.sent(m);
      send_up(m);
    }
    void from_above(const Message& m) override { send_down(m); }
    bool done() const override { return true; }
    LinkStats up_stats() const override { return stats; }
  };

  struct Relay : Node {
    std::shared_ptr<SinkContext> ctx;
    engine::StreamChunker chunker;
    std::deque<Bytes> queued;
    SinkSession down;
    SourceSession up;
    bool flushed = false;
    bool closing = false;
    bool acked = false;

    Relay(Loopback& n, Chain& c, std::size_t i, NodeClass cls)
        : Node(n, c, i),
          ctx(std::make_shared<SinkContext>(cls, n.cfg_)),
          chunker(n.cfg_.chunk_bytes()),
          down(ctx, [this](ByteView b) { for (auto& ch : chunker.push(b)) queued.push_back(std::move(ch)); }, false),
          up(cls, n.cfg_, n.window_) {
      send_up(up.start());
    }

    bool pump() override {
      bool progress = false;
      auto parked = down.poll();
      progress |= !parked.empty();
      send_all_down(std::move(parked));
      if (down.closing() && !flushed) {
        if (auto last = chunker.finish()) queued.push_back(std::move(*last));
        flushed = true;
        progress = true;
      }
      while (up.can_send() && !queued.empty()) {
        send_up(up.send_chunk(queued.front()));
        queued.pop_front();
        progress = true;
      }
      if (flushed && !closing && queued.empty() && up.ready() && up.drained()) {
        closing = true;
        send_up(up.finish(chunker.total_bytes()));
        progress = true;
      }
      if (up.done() && !acked) {
        acked = true;
        send_down(down.acknowledge_close());
        progress = true;
      }
      return progress;
    }

    void from_below(const Message& m) override {
      send_all_down(down.handle(m));
      if (down.should_disconnect()) throw ProtocolError("relay dropped its peer: " + down.last_error());
    }
    void from_above(const Message& m) override { send_all_up(up.on_response(m)); }
    bool done() const override { return acked; }
    LinkStats up_stats() const override { return up.stats(); }
  };

  struct SinkNode : Node {
    Bytes output;
    SinkSession session;

    SinkNode(Loopback& n, Chain& c, std::size_t i)
        : Node(n, c, i), session(n.sink_ctx_, [this](ByteView b) { append(output, b); }) {}

    bool pump() override {
      auto parked = session.poll();
      const bool progress = !parked.empty();
      send_all_down(std::move(parked));
      return progress;
    }
    void from_below(const Message& m) override {
      send_all_down(session.handle(m));
      if (session.should_disconnect()) throw ProtocolError("sink dropped its peer: " + session.last_error());
    }
    bool done() const override { return session.finished(); }
  };

  struct Chain {
    std::size_t id = 0;
    std::vector<Link> links;
    std::vector<std::unique_ptr<Node>> nodes;
    std::vector<TracedFrame> trace;
    std::size_t cursor = 0;

    bool done() const {
      for (const auto& n : nodes) {
        if (!n->done()) return false;
      }
      return true;
    }
  };

  // Delivers the next queued frame of a chain, rotating over its queues.
  static bool deliver_one(Chain& c) {
    const std::size_t queues = c.links.size() * 2;
    for (std::size_t k = 0; k < queues; ++k) {
      const std::size_t q = (c.cursor + k) % queues;
      Link& link = c.links[q / 2];
      auto& dq = q % 2 == 0 ? link.up : link.down;
      if (dq.empty()) continue;
      Message m = std::move(dq.front());
      dq.pop_front();
      c.cursor = q + 1;
      if (q % 2 == 0) {
        c.nodes[q / 2 + 1]->from_below(m);
      } else {
        c.nodes[q / 2]->from_above(m);
      }
      return true;
    }
    return false;
  }

  engine::EngineConfig cfg_;
  std::size_t window_;
  std::shared_ptr<SinkContext> sink_ctx_;
  std::vector<std::unique_ptr<Chain>> chains_;
};

// One source, optional intermediates, one sink.
inline ChainResult run_chain(ByteView input, const engine::EngineConfig& cfg, ChainSpec spec,
                             std::size_t window = kDefaultWindow) {
  Loopback net(cfg, spec.sink, window);
  net.add_chain(input, std::move(spec));
  net.run();
  return net.result(0);
}

}  // namespace hermes::protocol
