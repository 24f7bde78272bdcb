#include "flexagg/pcpm.hpp"

#include <future>
#include <sstream>

namespace flexagg {

namespace {

/// Weighted isotonic regression (pool adjacent violators): nondecreasing z
/// minimizing sum w_i (z_i - target_i)^2.
std::vector<double> pav(const std::vector<double>& target, const std::vector<double>& weight) {
  struct Block {
    double value, weight;
    int count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < target.size(); ++i) {
    blocks.push_back({target[i], weight[i], 1});
    while (blocks.size() >= 2 && blocks[blocks.size() - 2].value >= blocks.back().value) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
      a.weight += b.weight;
      a.count += b.count;
    }
  }
  std::vector<double> z;
  z.reserve(target.size());
  for (const auto& b : blocks)
    for (int i = 0; i < b.count; ++i) z.push_back(b.value);
  return z;
}

Eigen::VectorXd coupled_sum(const AgentPartition& part, const std::vector<Eigen::VectorXd>& y) {
  Eigen::VectorXd s = part.offset;
  for (std::size_t k = 0; k < part.agents.size(); ++k) s += part.agents[k].coupling * y[k];
  return s;
}

}  // namespace

Eigen::VectorXd pcpm_agent_step(const AgentBlock& agent, const Eigen::VectorXd& y_prev,
                                const Eigen::VectorXd& nu, double rho, double tol) {
  ConvexProgram prog = agent.local;
  std::vector<Eigen::Triplet<double>> ident;
  for (int i = 0; i < agent.nv; ++i) ident.emplace_back(i, i, 1.0 / rho);
  Eigen::SparseMatrix<double> prox(agent.nv, agent.nv);
  prox.setFromTriplets(ident.begin(), ident.end());
  prog.quad = prog.quad + prox;
  prog.lin += agent.coupling.transpose() * nu - y_prev / rho;
  return solve_convex(prog, {tol, 200}).x;
}

Eigen::VectorXd pcpm_aggregator_step(const AgentPartition& part, const Eigen::VectorXd& y0_prev,
                                     const Eigen::VectorXd& nu, double rho) {
  const int dim = part.y0.dim();
  Eigen::VectorXd target(dim), weight(dim);
  for (int i = 0; i < dim; ++i) {
    const double a = part.f0_quad[i] + 0.5 / rho;
    const double bcoef = part.f0_lin[i] - nu[i] - y0_prev[i] / rho -
                         2.0 * part.f0_quad[i] * part.f0_center[i];
    target[i] = -bcoef / (2.0 * a);
    weight[i] = a;
  }
  Eigen::VectorXd y0(dim);
  for (int i = 0; i < dim; ++i)
    y0[i] = std::min(std::max(target[i], part.y0_lo[i]), part.y0_hi[i]);
  for (const auto& chain : part.p0_chains) {
    std::vector<double> t, w;
    for (int idx : chain) {
      t.push_back(target[idx]);
      w.push_back(weight[idx]);
    }
    const auto z = pav(t, w);
    for (std::size_t i = 0; i < chain.size(); ++i) y0[chain[i]] = z[i];
  }
  return y0;
}

Eigen::VectorXd pcpm_initial_dual(const AgentPartition& part, const Eigen::VectorXd& y0) {
  // Interior stationarity of the aggregator subproblem at a fixed point
  // gives mu = grad f0(y0); starting there instead of zero skips the long
  // dual ramp (the initial dual is the aggregator's to choose).
  Eigen::VectorXd mu = part.f0_lin;
  for (int i = 0; i < part.y0.dim(); ++i)
    if (part.f0_quad[i] != 0.0) mu[i] += 2.0 * part.f0_quad[i] * (y0[i] - part.f0_center[i]);
  return mu;
}

Eigen::VectorXd pcpm_project_y0(const AgentPartition& part, const Eigen::VectorXd& y) {
  Eigen::VectorXd out(part.y0.dim());
  for (int i = 0; i < part.y0.dim(); ++i)
    out[i] = std::min(std::max(y[i], part.y0_lo[i]), part.y0_hi[i]);
  for (const auto& chain : part.p0_chains) {
    std::vector<double> t, w;
    for (int idx : chain) {
      t.push_back(y[idx]);
      w.push_back(1.0);
    }
    const auto z = pav(t, w);
    for (std::size_t i = 0; i < chain.size(); ++i) out[chain[i]] = z[i];
  }
  return out;
}

PcpmResult pcpm_solve(const AgentPartition& part, const PcpmOptions& opts) {
  const int K = part.n_agents();
  std::vector<Eigen::VectorXd> y(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) y[static_cast<std::size_t>(k)] = part.agents[static_cast<std::size_t>(k)].y_init;
  Eigen::VectorXd y0 = pcpm_project_y0(part, coupled_sum(part, y));
  Eigen::VectorXd mu = pcpm_initial_dual(part, y0);

  double rho = opts.rho;
  int halvings = 0;
  double best_coupling = std::numeric_limits<double>::infinity();
  int best_iter = 0;

  PcpmResult res;
  for (int l = 1; l <= opts.max_iter; ++l) {
    const Eigen::VectorXd nu = mu + rho * (coupled_sum(part, y) - y0);

    std::vector<std::future<Eigen::VectorXd>> jobs;
    jobs.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
      jobs.push_back(std::async(std::launch::async, [&, k] {
        return pcpm_agent_step(part.agents[static_cast<std::size_t>(k)],
                               y[static_cast<std::size_t>(k)], nu, rho, opts.subproblem_tol);
      }));
    const Eigen::VectorXd y0_next = pcpm_aggregator_step(part, y0, nu, rho);
    for (int k = 0; k < K; ++k) y[static_cast<std::size_t>(k)] = jobs[static_cast<std::size_t>(k)].get();
    y0 = y0_next;

    const Eigen::VectorXd r = coupled_sum(part, y) - y0;
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
    } else if (!std::isfinite(coupling) ||
               (l - best_iter >= 20 && coupling > 1e4 * std::max(best_coupling, 1e-12))) {
      // genuine blowup, not the startup transient
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
      << res.dual_delta << ", coupling residual " << res.coupling_residual << "); trace tail:";
  for (std::size_t i = res.trace.size() >= 3 ? res.trace.size() - 3 : 0; i < res.trace.size(); ++i)
    msg << " [" << res.trace[i].iteration << "] " << res.trace[i].coupling_residual;
  throw NumericalError(msg.str());
}

}  // namespace flexagg
