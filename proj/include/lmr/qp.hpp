#pragma once

#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lmr {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct BoxQpResult {
  Eigen::VectorXd x;
  double objective = 0.0;  // 1/2 x'Hx + g'x
  int iterations = 0;
  int active = 0;  // bounds active at the solution, fixed variables excluded
};

/// min 1/2 x'Hx + g'x  s.t.  lo <= x <= hi, H symmetric positive definite.
/// Primal active-set method on the bound constraints; variables with
/// lo == hi stay fixed. `x0` is clipped into the box and used as start.
/// Throws Errc::infeasible when lo > hi anywhere and Errc::solver_failure
/// when the iteration budget runs out.
BoxQpResult solve_box_qp(const SparseMatrix& H, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, const Eigen::VectorXd& x0 = {}, int max_iterations = -1);

struct QpProblem {
  Eigen::MatrixXd P;  // n x n, positive semidefinite
  Eigen::VectorXd q;
  Eigen::MatrixXd E;  // equality rows, may be empty
  Eigen::VectorXd e;
  Eigen::MatrixXd G;  // inequality rows Gx <= h, may be empty
  Eigen::VectorXd h;
};

struct QpSettings {
  int max_iterations = 60;
  double tolerance = 1e-9;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // inequality multipliers
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;

  std::string diagnostics() const;
};

/// Mehrotra predictor-corrector interior point method. Never throws on
/// non-convergence; check `converged`.
QpResult solve_qp(const QpProblem& problem, const QpSettings& settings = {});

}  // namespace lmr
