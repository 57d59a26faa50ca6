#pragma once

// Simulated network: a fixed topology of components, synchronous
// request/response delivery in FIFO order, and a message trace. The counting
// application has no edges; any attempt to declare one is rejected.

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "ivote/types.hpp"

namespace ivote {

enum class Node { client, verification_app, vfs, log_server, vss, vcs, vca };

inline const char* to_string(Node n) {
  switch (n) {
    case Node::client: return "client";
    case Node::verification_app: return "va";
    case Node::vfs: return "vfs";
    case Node::log_server: return "ls";
    case Node::vss: return "vss";
    case Node::vcs: return "vcs";
    case Node::vca: return "vca";
  }
  return "unknown";
}

inline std::optional<Node> parse_node(std::string_view s) {
  for (auto n : {Node::client, Node::verification_app, Node::vfs, Node::log_server, Node::vss,
                 Node::vcs, Node::vca}) {
    if (s == to_string(n)) return n;
  }
  return std::nullopt;
}

struct MessageRecord {
  std::uint64_t sequence = 0;
  SimTime time = 0;
  Node from = Node::client;
  Node to = Node::client;
  std::string kind;
};

class Network {
 public:
  // Edges of the deployed system: clients and the verification app reach
  // only the forwarding server, which talks to storage and the log server;
  // storage also logs and queries the validity service.
  static Network standard() {
    Network net;
    net.connect(Node::client, Node::vfs);
    net.connect(Node::verification_app, Node::vfs);
    net.connect(Node::vfs, Node::vss);
    net.connect(Node::vfs, Node::log_server);
    net.connect(Node::vss, Node::log_server);
    net.connect(Node::vss, Node::vcs);
    return net;
  }

  void connect(Node a, Node b) {
    if (a == Node::vca || b == Node::vca) {
      throw Error(ErrorCode::air_gap, std::string("the counting application is air-gapped; edge ") +
                                          to_string(a) + "-" + to_string(b) + " refused");
    }
    if (a == b) throw Error(ErrorCode::validation, "self-edge refused");
    edges_.insert(key(a, b));
  }

  [[nodiscard]] bool connected(Node a, Node b) const { return edges_.contains(key(a, b)); }

  void deliver(Node from, Node to, std::string_view kind, SimTime now) {
    if (!connected(from, to)) {
      throw Error(ErrorCode::air_gap, std::string("no network edge ") + to_string(from) + "-" +
                                          to_string(to));
    }
    trace_.push_back({next_++, now, from, to, std::string(kind)});
  }

  [[nodiscard]] const std::vector<MessageRecord>& trace() const { return trace_; }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }

 private:
  static std::pair<Node, Node> key(Node a, Node b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
  }

  std::set<std::pair<Node, Node>> edges_;
  std::vector<MessageRecord> trace_;
  std::uint64_t next_ = 1;
};

// Typed endpoint of one edge. Requests are recorded on the network before
// the peer handles them and replies after.
template <typename Peer>
class Channel {
 public:
  Channel(Network& net, Node from, Node to, Peer& peer)
      : net_(&net), from_(from), to_(to), peer_(&peer) {
    if (!net.connected(from, to)) {
      throw Error(ErrorCode::air_gap, std::string("no network edge ") + to_string(from) + "-" +
                                          to_string(to));
    }
  }

  template <typename F>
  decltype(auto) request(std::string_view kind, SimTime now, F&& handler) {
    net_->deliver(from_, to_, kind, now);
    if constexpr (std::is_void_v<decltype(handler(*peer_))>) {
      handler(*peer_);
      net_->deliver(to_, from_, reply_kind(kind), now);
    } else {
      auto reply = handler(*peer_);
      net_->deliver(to_, from_, reply_kind(kind), now);
      return reply;
    }
  }

 private:
  static std::string reply_kind(std::string_view kind) { return std::string(kind) + ".reply"; }

  Network* net_;
  Node from_;
  Node to_;
  Peer* peer_;
};

// Per-component guard for the simulated clock.
class ClockObserver {
 public:
  void observe(SimTime now, const char* who) {
    if (now < last_) {
      throw Error(ErrorCode::sequencing, std::string(who) + " observed time " +
                                             std::to_string(now) + " after " +
                                             std::to_string(last_));
    }
    last_ = now;
  }
  [[nodiscard]] SimTime last() const { return last_; }

 private:
  SimTime last_ = std::numeric_limits<SimTime>::min();
};

}  // namespace ivote
