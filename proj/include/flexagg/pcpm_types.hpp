#pragma once

namespace flexagg {

struct PcpmOptions {
  double rho = 0.1;            // proximal step length (p.u.-scaled problems)
  double eps = 1e-5;           // dual-change stopping threshold
  double coupling_tol = 1e-4;  // coupling residual must also fall below this
  int max_iter = 200;
  int max_halvings = 4;        // automatic step-length backoff on divergence
  double subproblem_tol = 1e-9;
};

struct PcpmTraceRow {
  int iteration = 0;
  double dual_delta = 0.0;
  double coupling_residual = 0.0;
  double objective = 0.0;
};

}  // namespace flexagg
