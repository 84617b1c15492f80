#pragma once

// Label-switching forwarding plane: 32-bit shim header codec, FEC
// classifier (FTN), incoming label map (ILM) and NHLFE action table.
// Handoffs are enacted by atomically rewiring the next hop of an LSP.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace handoff::mpls {

// 32-bit shim: label(20) | tc(3) | bottom_of_stack(1) | ttl(8),
// most-significant field first.
struct ShimHeader {
  std::uint32_t label = 0;
  std::uint8_t tc = 0;
  bool bottom_of_stack = false;
  std::uint8_t ttl = 0;

  friend bool operator==(const ShimHeader&, const ShimHeader&) = default;
};

inline constexpr std::uint32_t kMaxLabel = (1u << 20) - 1;

inline std::uint32_t encode(const ShimHeader& h) {
  if (h.label > kMaxLabel)
    throw std::invalid_argument("mpls: label exceeds 20 bits");
  if (h.tc > 7) throw std::invalid_argument("mpls: tc exceeds 3 bits");
  return (h.label << 12) | (static_cast<std::uint32_t>(h.tc) << 9) |
         (h.bottom_of_stack ? (1u << 8) : 0u) |
         static_cast<std::uint32_t>(h.ttl);
}

inline ShimHeader decode(std::uint32_t word) {
  ShimHeader h;
  h.label = word >> 12;
  h.tc = static_cast<std::uint8_t>((word >> 9) & 0x7);
  h.bottom_of_stack = (word >> 8) & 0x1;
  h.ttl = static_cast<std::uint8_t>(word & 0xff);
  return h;
}

struct FiveTuple {
  std::uint32_t src_ip = 0;
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t proto = 0;
};

// Classification rule; unset fields are wildcards.
struct Fec {
  std::optional<std::uint32_t> src_ip;
  std::optional<std::uint32_t> dst_ip;
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;
  std::optional<std::uint8_t> proto;

  bool matches(const FiveTuple& t) const {
    return (!src_ip || *src_ip == t.src_ip) &&
           (!dst_ip || *dst_ip == t.dst_ip) &&
           (!src_port || *src_port == t.src_port) &&
           (!dst_port || *dst_port == t.dst_port) &&
           (!proto || *proto == t.proto);
  }

  void validate() const {
    if (!src_ip && !dst_ip && !src_port && !dst_port && !proto)
      throw std::invalid_argument("mpls: FEC with all fields wildcard");
  }
};

enum class LabelOp { push, pop, swap };

struct NhlfeEntry {
  LabelOp op = LabelOp::push;
  std::optional<std::uint32_t> out_label;  // required for push/swap
  std::string next_hop;
  std::string lsp_id;

  void validate() const {
    if (op == LabelOp::pop) {
      if (out_label)
        throw std::invalid_argument("mpls: POP entry carries an out_label");
    } else if (!out_label || *out_label > kMaxLabel) {
      throw std::invalid_argument("mpls: PUSH/SWAP entry needs a valid label");
    }
  }
};

struct Packet {
  FiveTuple tuple;
  std::vector<ShimHeader> stack;  // front() is the top of stack
  std::vector<std::uint8_t> payload;
};

struct ForwardingTables {
  std::vector<std::pair<Fec, std::size_t>> ftn;       // first match wins
  std::unordered_map<std::uint32_t, std::size_t> ilm; // label -> NHLFE idx
  std::vector<NhlfeEntry> nhlfe;
};

inline constexpr std::uint8_t kDefaultTtl = 64;

// First-match FEC classification; nullopt means pass-through.
inline std::optional<std::size_t> ftn_classify(const ForwardingTables& t,
                                               const FiveTuple& tuple) {
  for (const auto& [fec, idx] : t.ftn)
    if (fec.matches(tuple)) return idx;
  return std::nullopt;
}

// Exact-match label lookup; nullopt means discard.
inline std::optional<std::size_t> ilm_lookup(const ForwardingTables& t,
                                             std::uint32_t top_label) {
  auto it = t.ilm.find(top_label);
  if (it == t.ilm.end()) return std::nullopt;
  return it->second;
}

// Applies one label operation in place and returns the next hop.
// PUSH stacks a fresh header (tc 0, default TTL); SWAP rewrites the top
// label, keeps tc, decrements TTL; POP strips the top header.
inline std::string nhlfe_apply(const NhlfeEntry& e, Packet& pkt) {
  e.validate();
  switch (e.op) {
    case LabelOp::push: {
      ShimHeader h;
      h.label = *e.out_label;
      h.tc = 0;
      h.ttl = kDefaultTtl;
      h.bottom_of_stack = pkt.stack.empty();
      pkt.stack.insert(pkt.stack.begin(), h);
      break;
    }
    case LabelOp::swap: {
      if (pkt.stack.empty())
        throw std::runtime_error("mpls: SWAP on empty label stack");
      ShimHeader& top = pkt.stack.front();
      if (top.ttl == 0)
        throw std::runtime_error("mpls: SWAP on expired TTL");
      top.label = *e.out_label;
      --top.ttl;
      break;
    }
    case LabelOp::pop: {
      if (pkt.stack.empty())
        throw std::runtime_error("mpls: POP on empty label stack");
      pkt.stack.erase(pkt.stack.begin());
      break;
    }
  }
  return e.next_hop;
}

enum class Verdict { forwarded, pass_through, discarded };

struct ForwardResult {
  Verdict verdict = Verdict::discarded;
  std::string next_hop;
};

// Snapshot-swapped table holder: the packet path reads one immutable
// table version; rewires publish a fresh version in a single store.
class Forwarder {
 public:
  Forwarder() : tables_(std::make_shared<const ForwardingTables>()) {}
  explicit Forwarder(ForwardingTables t)
      : tables_(std::make_shared<const ForwardingTables>(std::move(t))) {}

  std::shared_ptr<const ForwardingTables> snapshot() const { return tables_; }

  // Ingress path: classify, then apply the selected NHLFE entry.
  ForwardResult ingress(Packet& pkt) const {
    auto t = snapshot();
    auto idx = ftn_classify(*t, pkt.tuple);
    if (!idx) return {Verdict::pass_through, {}};
    return {Verdict::forwarded, nhlfe_apply(t->nhlfe.at(*idx), pkt)};
  }

  // Transit/egress path: ILM lookup on the top label, then the action.
  ForwardResult forward(Packet& pkt) const {
    auto t = snapshot();
    if (pkt.stack.empty())
      throw std::runtime_error("mpls: labeled forward on unlabeled packet");
    if (pkt.stack.front().ttl == 0) return {Verdict::discarded, {}};
    auto idx = ilm_lookup(*t, pkt.stack.front().label);
    if (!idx) return {Verdict::discarded, {}};
    return {Verdict::forwarded, nhlfe_apply(t->nhlfe.at(*idx), pkt)};
  }

  // Redirects every NHLFE entry of `lsp_id` whose next hop is `from`
  // to `to`. The update is a whole-table swap, so concurrent packet
  // processing never observes a half-rewired LSP.
  void rewire_lsp(const std::string& lsp_id, const std::string& from,
                  const std::string& to) {
    auto fresh = std::make_shared<ForwardingTables>(*tables_);
    bool known = false;
    for (auto& e : fresh->nhlfe) {
      if (e.lsp_id != lsp_id) continue;
      known = true;
      if (e.next_hop == from) e.next_hop = to;
    }
    if (!known)
      throw std::invalid_argument("mpls: unknown lsp id " + lsp_id);
    tables_ = std::move(fresh);
  }

 private:
  std::shared_ptr<const ForwardingTables> tables_;
};

}  // namespace handoff::mpls
