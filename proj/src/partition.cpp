#include "flexagg/partition.hpp"

#include "trajectory_program.hpp"

namespace flexagg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Append a whole program into a builder at a variable offset.
void append_program(ProgramBuilder& b, const ConvexProgram& p, int offset) {
  for (int k = 0; k < p.quad.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.quad, k); it; ++it)
      if (it.row() <= it.col())
        b.obj_quad(offset + static_cast<int>(it.row()), offset + static_cast<int>(it.col()),
                   it.row() == it.col() ? 0.5 * it.value() : it.value());
  for (int i = 0; i < p.lin.size(); ++i)
    if (p.lin[i] != 0.0) b.obj_lin(offset + i, p.lin[i]);
  b.obj_const(p.constant);
  // rows are stored column-major; gather terms per row
  std::vector<ProgramBuilder::Terms> eq_rows(static_cast<std::size_t>(p.eq.rows()));
  for (int k = 0; k < p.eq.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.eq, k); it; ++it)
      eq_rows[static_cast<std::size_t>(it.row())].push_back(
          {offset + static_cast<int>(it.col()), it.value()});
  for (std::size_t r = 0; r < eq_rows.size(); ++r) b.add_eq(eq_rows[r], p.eq_rhs[static_cast<Eigen::Index>(r)]);
  std::vector<ProgramBuilder::Terms> ineq_rows(static_cast<std::size_t>(p.ineq.rows()));
  for (int k = 0; k < p.ineq.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.ineq, k); it; ++it)
      ineq_rows[static_cast<std::size_t>(it.row())].push_back(
          {offset + static_cast<int>(it.col()), it.value()});
  for (std::size_t r = 0; r < ineq_rows.size(); ++r)
    b.add_le(ineq_rows[r], p.ineq_rhs[static_cast<Eigen::Index>(r)]);
  for (const auto& d : p.disks) b.add_disk(offset + d.ip, offset + d.iq, d.radius);
}

}  // namespace

AgentPartition partition_for_pcpm(const CompactModel& model, const ObjectiveSpec& spec,
                                  bool joint_rows) {
  AgentPartition part;
  part.kind = spec.kind;
  part.compact = &model;
  const int n_traj = detail::n_traj_for(spec.kind);
  const int T = model.horizon;
  part.y0.n_traj = n_traj;
  part.y0.T = T;
  part.y0.nv = static_cast<int>(model.v_sens.rows());
  part.y0.ni = static_cast<int>(model.i_sens.rows());

  for (const auto& dv : detail::device_views(model)) {
    AgentBlock agent;
    agent.id = dv.id;
    agent.dev = dv.dev;
    agent.cols = dv.cols;
    const int ncols = static_cast<int>(dv.cols.size());
    agent.nv = n_traj * T * ncols;
    const auto var = [&](int traj, int t, int local) { return (traj * T + t) * ncols + local; };

    ProgramBuilder b(agent.nv);
    append_device_constraints(b, model, dv, n_traj, joint_rows, var);
    if (spec.kind != ObjectiveSpec::Kind::mpa && spec.cost)
      append_device_cost(b, model, dv, *spec.cost, detail::base_traj_for(spec.kind), var);
    agent.local = b.build();

    std::vector<Eigen::Triplet<double>> w;
    for (int traj = 0; traj < n_traj; ++traj)
      for (int t = 0; t < T; ++t)
        for (int local = 0; local < ncols; ++local) {
          const int col = dv.cols[static_cast<std::size_t>(local)];
          const int j = var(traj, t, local);
          for (int r = 0; r < part.y0.nv; ++r)
            if (model.v_sens(r, col) != 0.0)
              w.emplace_back(part.y0.v_start(traj, t) + r, j, model.v_sens(r, col));
          for (int r = 0; r < part.y0.ni; ++r)
            if (model.i_sens(r, col) != 0.0)
              w.emplace_back(part.y0.i_start(traj, t) + r, j, model.i_sens(r, col));
          if (model.p0_sens[col] != 0.0)
            w.emplace_back(part.y0.p0_index(traj, t), j, model.p0_sens[col]);
        }
    agent.coupling.resize(part.y0.dim(), agent.nv);
    agent.coupling.setFromTriplets(w.begin(), w.end());

    // deterministic feasible start: minimum-norm point of the local set
    ConvexProgram init = agent.local;
    {
      std::vector<Eigen::Triplet<double>> ident;
      for (int i = 0; i < agent.nv; ++i) ident.emplace_back(i, i, 1.0);
      init.quad.setZero();
      init.quad.setFromTriplets(ident.begin(), ident.end());
      init.lin = Eigen::VectorXd::Zero(agent.nv);
      init.constant = 0.0;
    }
    agent.y_init = solve_convex(init, {1e-9, 200}).x;
    part.agents.push_back(std::move(agent));
  }

  part.offset.resize(part.y0.dim());
  part.y0_lo = Eigen::VectorXd::Constant(part.y0.dim(), -kInf);
  part.y0_hi = Eigen::VectorXd::Constant(part.y0.dim(), kInf);
  for (int traj = 0; traj < n_traj; ++traj) {
    for (int t = 0; t < T; ++t) {
      part.offset.segment(part.y0.v_start(traj, t), part.y0.nv) = model.v_base.col(t);
      part.offset.segment(part.y0.i_start(traj, t), part.y0.ni) = model.i_base.col(t);
      part.offset[part.y0.p0_index(traj, t)] = model.p0_base[t];
      part.y0_lo.segment(part.y0.v_start(traj, t), part.y0.nv) = model.v_lower;
      part.y0_hi.segment(part.y0.v_start(traj, t), part.y0.nv) = model.v_upper;
      for (int r = 0; r < part.y0.ni; ++r) {
        if (model.i_lower[r] > 0.0) part.y0_lo[part.y0.i_start(traj, t) + r] = model.i_lower[r];
        if (model.i_upper[r] < 1e8) part.y0_hi[part.y0.i_start(traj, t) + r] = model.i_upper[r];
      }
    }
  }

  part.f0_lin = Eigen::VectorXd::Zero(part.y0.dim());
  part.f0_quad = Eigen::VectorXd::Zero(part.y0.dim());
  part.f0_center = Eigen::VectorXd::Zero(part.y0.dim());
  switch (spec.kind) {
    case ObjectiveSpec::Kind::mpa:
      for (int t = 0; t < T; ++t) {
        part.f0_lin[part.y0.p0_index(0, t)] += 1.0 / T;
        part.f0_lin[part.y0.p0_index(1, t)] -= 1.0 / T;
      }
      break;
    case ObjectiveSpec::Kind::epa:
      for (int t = 0; t < T; ++t) {
        const double pt = spec.cost->price_at(t);
        const double ru = spec.cost->reward_up_at(t);
        const double rd = spec.cost->reward_down_at(t);
        part.f0_lin[part.y0.p0_index(1, t)] += pt + ru - rd;
        part.f0_lin[part.y0.p0_index(2, t)] -= ru;
        part.f0_lin[part.y0.p0_index(0, t)] += rd;
      }
      break;
    case ObjectiveSpec::Kind::pd:
      for (int t = 0; t < T; ++t) {
        part.f0_lin[part.y0.p0_index(0, t)] += spec.cost ? spec.cost->price_at(t) : 0.0;
        if (spec.rho.size() && spec.rho[t] > 0.0) {
          part.f0_quad[part.y0.p0_index(0, t)] = spec.rho[t];
          part.f0_center[part.y0.p0_index(0, t)] = spec.p_reg[t];
        }
      }
      break;
  }
  if (spec.kind != ObjectiveSpec::Kind::pd) {
    for (int t = 0; t < T; ++t) {
      std::vector<int> chain;
      for (int traj = 0; traj < n_traj; ++traj) chain.push_back(part.y0.p0_index(traj, t));
      part.p0_chains.push_back(std::move(chain));
    }
  }
  return part;
}

ConvexProgram reassemble_program(const AgentPartition& part) {
  int n_agent_vars = 0;
  for (const auto& a : part.agents) n_agent_vars += a.nv;
  const int y0_off = n_agent_vars;
  ProgramBuilder b(n_agent_vars + part.y0.dim());

  int off = 0;
  std::vector<int> offsets;
  for (const auto& a : part.agents) {
    offsets.push_back(off);
    append_program(b, a.local, off);
    off += a.nv;
  }
  for (int i = 0; i < part.y0.dim(); ++i) {
    b.add_box(y0_off + i, part.y0_lo[i], part.y0_hi[i]);
    if (part.f0_lin[i] != 0.0) b.obj_lin(y0_off + i, part.f0_lin[i]);
    if (part.f0_quad[i] != 0.0)
      b.obj_square({{y0_off + i, 1.0}}, -part.f0_center[i], part.f0_quad[i]);
  }
  for (const auto& chain : part.p0_chains)
    for (std::size_t a = 0; a + 1 < chain.size(); ++a)
      b.add_ge({{y0_off + chain[a + 1], 1.0}, {y0_off + chain[a], -1.0}}, 0.0);

  // coupling: y0 - sum_k W_k y_k = offset
  std::vector<ProgramBuilder::Terms> rows(static_cast<std::size_t>(part.y0.dim()));
  for (int i = 0; i < part.y0.dim(); ++i) rows[static_cast<std::size_t>(i)].push_back({y0_off + i, 1.0});
  for (std::size_t k = 0; k < part.agents.size(); ++k) {
    const auto& w = part.agents[k].coupling;
    for (int c = 0; c < w.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(w, c); it; ++it)
        rows[static_cast<std::size_t>(it.row())].push_back(
            {offsets[k] + static_cast<int>(it.col()), -it.value()});
  }
  for (int i = 0; i < part.y0.dim(); ++i) b.add_eq(rows[static_cast<std::size_t>(i)], part.offset[i]);
  return b.build();
}

std::vector<std::vector<Eigen::VectorXd>> assemble_trajectories(
    const AgentPartition& part, const std::vector<Eigen::VectorXd>& y_agents) {
  const auto& m = *part.compact;
  const int n_traj = part.y0.n_traj;
  const int T = part.y0.T;
  std::vector<std::vector<Eigen::VectorXd>> trajs(
      static_cast<std::size_t>(n_traj),
      std::vector<Eigen::VectorXd>(static_cast<std::size_t>(T),
                                   Eigen::VectorXd::Zero(m.vars_per_step())));
  for (std::size_t k = 0; k < part.agents.size(); ++k) {
    const auto& agent = part.agents[k];
    const int ncols = static_cast<int>(agent.cols.size());
    for (int traj = 0; traj < n_traj; ++traj)
      for (int t = 0; t < T; ++t)
        for (int local = 0; local < ncols; ++local)
          trajs[static_cast<std::size_t>(traj)][static_cast<std::size_t>(t)]
               [agent.cols[static_cast<std::size_t>(local)]] =
                   y_agents[k][(traj * T + t) * ncols + local];
  }
  return trajs;
}

double partition_objective(const AgentPartition& part,
                           const std::vector<Eigen::VectorXd>& y_agents) {
  double f_agents = 0.0;
  for (std::size_t k = 0; k < part.agents.size(); ++k)
    f_agents += part.agents[k].local.objective_at(y_agents[k]);
  // f0 evaluated on the coupled image of the agent variables
  Eigen::VectorXd s = part.offset;
  for (std::size_t k = 0; k < part.agents.size(); ++k) s += part.agents[k].coupling * y_agents[k];
  double f0 = part.f0_lin.dot(s);
  for (int i = 0; i < part.y0.dim(); ++i) {
    if (part.f0_quad[i] == 0.0) continue;
    const double dev = s[i] - part.f0_center[i];
    f0 += part.f0_quad[i] * dev * dev;
  }
  return f_agents + f0;
}

}  // namespace flexagg
