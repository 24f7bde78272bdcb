#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "flexagg/pcpm.hpp"

namespace flexagg {

/// Wire record exchanged between the aggregator (id 0) and agents (1..K).
/// Aggregator -> agent: payload = [step length, predicted duals...].
/// Agent -> aggregator: payload = the agent's fresh local iterate.
struct Message {
  std::uint32_t version = 1;
  std::uint32_t round = 0;
  std::int32_t sender = 0;
  std::vector<double> payload;
};

/// Length-prefixed binary framing: u64 total length, then u32 version,
/// u32 round, i32 sender, u64 count, count doubles. Lossless for doubles.
std::vector<std::uint8_t> encode_message(const Message& m);
Message decode_message(const std::vector<std::uint8_t>& bytes);

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(int from, int to, const Message& m) = 0;
  /// Non-blocking poll; empty when nothing is deliverable yet.
  virtual std::optional<Message> receive(int to) = 0;
};

/// Deterministic in-memory transport. Messages are serialized through the
/// wire framing, delivered in order per receiver, optionally after a fixed
/// latency (measured in receive polls); selected messages can be dropped to
/// exercise the stall path.
class InProcessTransport : public Transport {
 public:
  void set_latency(int polls) { latency_ = polls; }
  void drop(int from, int to, std::uint32_t round) { drops_.insert({from, to, round}); }

  void send(int from, int to, const Message& m) override;
  std::optional<Message> receive(int to) override;

  long messages_sent() const { return sent_; }

 private:
  struct Queued {
    std::vector<std::uint8_t> bytes;
    long deliver_at;
  };
  std::map<int, std::deque<Queued>> inbox_;
  std::set<std::tuple<int, int, std::uint32_t>> drops_;
  long clock_ = 0;
  long sent_ = 0;
  int latency_ = 0;
};

/// Run the proximal multiplier protocol over a transport: identical
/// arithmetic to pcpm_solve, so iterates and the trace match bitwise on the
/// same inputs. Round 0 carries initial agent states; each later round is a
/// dual broadcast followed by one local iterate per agent. Throws
/// ProtocolError naming the first missing (agent, round).
PcpmResult run_agents(const AgentPartition& partition, Transport& transport,
                      const PcpmOptions& opts = {});

}  // namespace flexagg
