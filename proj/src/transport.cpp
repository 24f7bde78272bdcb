#include "flexagg/transport.hpp"

#include <cstring>
#include <sstream>

namespace flexagg {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ProtocolError("truncated message");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_message(const Message& m) {
  std::vector<std::uint8_t> body;
  put<std::uint32_t>(body, m.version);
  put<std::uint32_t>(body, m.round);
  put<std::int32_t>(body, m.sender);
  put<std::uint64_t>(body, m.payload.size());
  for (double d : m.payload) put<double>(body, d);
  std::vector<std::uint8_t> out;
  put<std::uint64_t>(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Message decode_message(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  const auto len = take<std::uint64_t>(bytes, pos);
  if (len + sizeof(std::uint64_t) != bytes.size()) throw ProtocolError("bad message framing");
  Message m;
  m.version = take<std::uint32_t>(bytes, pos);
  if (m.version != 1) throw ProtocolError("unsupported message version");
  m.round = take<std::uint32_t>(bytes, pos);
  m.sender = take<std::int32_t>(bytes, pos);
  const auto count = take<std::uint64_t>(bytes, pos);
  m.payload.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) m.payload[i] = take<double>(bytes, pos);
  return m;
}

void InProcessTransport::send(int from, int to, const Message& m) {
  ++sent_;
  if (drops_.count({from, to, m.round})) return;
  inbox_[to].push_back({encode_message(m), clock_ + latency_});
}

std::optional<Message> InProcessTransport::receive(int to) {
  ++clock_;
  auto& q = inbox_[to];
  if (q.empty() || q.front().deliver_at > clock_) return std::nullopt;
  Message m = decode_message(q.front().bytes);
  q.pop_front();
  return m;
}

namespace {

Message expect(Transport& transport, int to, std::uint32_t round, int from_hint, int budget) {
  for (int attempt = 0; attempt < budget; ++attempt) {
    auto m = transport.receive(to);
    if (!m) continue;
    if (m->round != round) {
      std::ostringstream msg;
      msg << "protocol stalled: expected round " << round << " but received round " << m->round
          << " from " << m->sender;
      throw ProtocolError(msg.str());
    }
    return *m;
  }
  std::ostringstream msg;
  msg << "protocol stalled: missing message for round " << round << " (waiting on sender "
      << from_hint << ")";
  throw ProtocolError(msg.str());
}

std::vector<double> to_payload(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_payload(const std::vector<double>& p) {
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

}  // namespace

PcpmResult run_agents(const AgentPartition& part, Transport& transport, const PcpmOptions& opts) {
  const int K = part.n_agents();
  const int budget = 16 * (K + 1) + 256;

  // round 0: every agent reports its initial state
  for (int k = 0; k < K; ++k) {
    Message m;
    m.round = 0;
    m.sender = k + 1;
    m.payload = to_payload(part.agents[static_cast<std::size_t>(k)].y_init);
    transport.send(k + 1, 0, m);
  }
  std::vector<Eigen::VectorXd> y(static_cast<std::size_t>(K));
  {
    std::vector<bool> seen(static_cast<std::size_t>(K), false);
    for (int k = 0; k < K; ++k) {
      const Message m = expect(transport, 0, 0, k + 1, budget);
      const int idx = m.sender - 1;
      if (idx < 0 || idx >= K || seen[static_cast<std::size_t>(idx)])
        throw ProtocolError("protocol stalled: duplicate or unknown sender at round 0");
      seen[static_cast<std::size_t>(idx)] = true;
      y[static_cast<std::size_t>(idx)] = from_payload(m.payload);
    }
  }

  // Same state and update order as pcpm_solve; only the data path differs.
  Eigen::VectorXd y0;
  {
    Eigen::VectorXd s = part.offset;
    for (int k = 0; k < K; ++k) s += part.agents[static_cast<std::size_t>(k)].coupling * y[static_cast<std::size_t>(k)];
    y0 = pcpm_project_y0(part, s);
  }
  Eigen::VectorXd mu = pcpm_initial_dual(part, y0);
  double rho = opts.rho;
  int halvings = 0;
  double best_coupling = std::numeric_limits<double>::infinity();
  int best_iter = 0;

  PcpmResult res;
  for (int l = 1; l <= opts.max_iter; ++l) {
    Eigen::VectorXd s = part.offset;
    for (int k = 0; k < K; ++k) s += part.agents[static_cast<std::size_t>(k)].coupling * y[static_cast<std::size_t>(k)];
    const Eigen::VectorXd nu = mu + rho * (s - y0);

    for (int k = 0; k < K; ++k) {
      Message m;
      m.round = static_cast<std::uint32_t>(l);
      m.sender = 0;
      m.payload.reserve(static_cast<std::size_t>(nu.size()) + 1);
      m.payload.push_back(rho);
      for (Eigen::Index i = 0; i < nu.size(); ++i) m.payload.push_back(nu[i]);
      transport.send(0, k + 1, m);
    }

    for (int k = 0; k < K; ++k) {
      const Message m = expect(transport, k + 1, static_cast<std::uint32_t>(l), 0, budget);
      const double rho_k = m.payload[0];
      const Eigen::VectorXd nu_k =
          Eigen::Map<const Eigen::VectorXd>(m.payload.data() + 1,
                                            static_cast<Eigen::Index>(m.payload.size()) - 1);
      const Eigen::VectorXd y_next = pcpm_agent_step(part.agents[static_cast<std::size_t>(k)],
                                                     y[static_cast<std::size_t>(k)], nu_k, rho_k,
                                                     opts.subproblem_tol);
      Message reply;
      reply.round = static_cast<std::uint32_t>(l);
      reply.sender = k + 1;
      reply.payload = to_payload(y_next);
      transport.send(k + 1, 0, reply);
    }

    const Eigen::VectorXd y0_next = pcpm_aggregator_step(part, y0, nu, rho);
    {
      std::vector<bool> seen(static_cast<std::size_t>(K), false);
      for (int k = 0; k < K; ++k) {
        const Message m = expect(transport, 0, static_cast<std::uint32_t>(l), k + 1, budget);
        const int idx = m.sender - 1;
        if (idx < 0 || idx >= K || seen[static_cast<std::size_t>(idx)])
          throw ProtocolError("protocol stalled: duplicate or unknown sender");
        seen[static_cast<std::size_t>(idx)] = true;
        y[static_cast<std::size_t>(idx)] = from_payload(m.payload);
      }
    }
    y0 = y0_next;

    Eigen::VectorXd s2 = part.offset;
    for (int k = 0; k < K; ++k) s2 += part.agents[static_cast<std::size_t>(k)].coupling * y[static_cast<std::size_t>(k)];
    const Eigen::VectorXd r = s2 - y0;
    mu += rho * r;
    const double coupling = r.norm();
    const double dual_delta = rho * coupling;

    res.trace.push_back({l, dual_delta, coupling, partition_objective(part, y)});
    res.iterations = l;
    res.dual_delta = dual_delta;
    res.coupling_residual = coupling;

    if (dual_delta <= opts.eps && coupling <= opts.coupling_tol) {
      res.y0 = y0;
      res.y_agents = y;
      res.objective = partition_objective(part, y);
      return res;
    }
    if (coupling < best_coupling) {
      best_coupling = coupling;
      best_iter = l;
    } else if (l - best_iter >= 20 && coupling > 10.0 * best_coupling) {
      if (++halvings > opts.max_halvings)
        throw NumericalError("step length too large: residual diverging after " +
                             std::to_string(opts.max_halvings) + " halvings");
      rho *= 0.5;
      best_coupling = coupling;
      best_iter = l;
    }
  }
  std::ostringstream msg;
  msg << "PCPM not converged after " << opts.max_iter << " iterations (dual delta "
      << res.dual_delta << ", coupling residual " << res.coupling_residual << ")";
  throw NumericalError(msg.str());
}

}  // namespace flexagg
