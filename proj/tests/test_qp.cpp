#include "doctest.h"

#include <random>

#include "lmr/error.hpp"
#include "lmr/qp.hpp"
#include "test_support.hpp"

using namespace lmr;
using lmr::testing::uniform;

namespace {

SparseMatrix sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

// Random banded SPD matrix.
Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, int band) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - band); j <= i; ++j) A(i, j) = uniform(rng, -1.0, 1.0);
  }
  return A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("box QP small cases") {
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd g(2);
  g << -2.0, 0.5;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd hi = Eigen::VectorXd::Ones(2);
  const auto r = solve_box_qp(sparse(H), g, lo, hi);
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.x[1] == doctest::Approx(0.0));
  CHECK(r.active == 2);

  // Fixed variable stays put, the other responds to the coupling.
  H << 2.0, 1.0, 1.0, 2.0;
  g << 0.0, 0.0;
  lo << 0.5, -10.0;
  hi << 0.5, 10.0;
  const auto f = solve_box_qp(sparse(H), g, lo, hi);
  CHECK(f.x[0] == 0.5);
  CHECK(f.x[1] == doctest::Approx(-0.25));

  lo << 1.0, 0.0;
  hi << 0.0, 1.0;
  try {
    solve_box_qp(sparse(H), g, lo, hi);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::infeasible);
  }
}

TEST_CASE("box QP satisfies KKT and agrees with the interior point solver") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const int n = 30;
    const Eigen::MatrixXd H = random_spd(rng, n, 3);
    Eigen::VectorXd g(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      g[i] = uniform(rng, -5.0, 5.0);
      lo[i] = uniform(rng, -1.0, 0.0);
      hi[i] = lo[i] + uniform(rng, 0.0, 1.5);
    }
    const auto box = solve_box_qp(sparse(H), g, lo, hi);

    // KKT: the projected gradient vanishes.
    const Eigen::VectorXd grad = H * box.x + g;
    for (int i = 0; i < n; ++i) {
      CHECK(box.x[i] >= lo[i]);
      CHECK(box.x[i] <= hi[i]);
      const double proj = std::clamp(box.x[i] - grad[i], lo[i], hi[i]) - box.x[i];
      CHECK(std::abs(proj) < 1e-8);
    }

    QpProblem pb;
    pb.P = H;
    pb.q = g;
    pb.E.resize(0, n);
    pb.G.resize(2 * n, n);
    pb.G << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
    pb.h.resize(2 * n);
    pb.h << hi, -lo;
    const auto ipm = solve_qp(pb, QpSettings{80, 1e-12});
    REQUIRE(ipm.converged);
    CHECK((ipm.x - box.x).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(ipm.objective == doctest::Approx(box.objective).epsilon(1e-8));
  }
}

TEST_CASE("interior point solver on textbook problems") {
  // min 1/2 |x|^2  s.t.  x0 + x1 = 1
  QpProblem eq;
  eq.P = Eigen::MatrixXd::Identity(2, 2);
  eq.q = Eigen::VectorXd::Zero(2);
  eq.E = Eigen::MatrixXd::Ones(1, 2);
  eq.e = Eigen::VectorXd::Ones(1);
  eq.G.resize(0, 2);
  const auto r = solve_qp(eq);
  REQUIRE(r.converged);
  CHECK(r.x[0] == doctest::Approx(0.5));
  CHECK(r.x[1] == doctest::Approx(0.5));
  CHECK(r.y[0] == doctest::Approx(-0.5));

  // min 1/2 (x - 3)^2  s.t.  x <= 1: multiplier equals the gradient, 2.
  QpProblem in;
  in.P = Eigen::MatrixXd::Identity(1, 1);
  in.q = Eigen::VectorXd::Constant(1, -3.0);
  in.E.resize(0, 1);
  in.G = Eigen::MatrixXd::Ones(1, 1);
  in.h = Eigen::VectorXd::Ones(1);
  const auto s = solve_qp(in);
  REQUIRE(s.converged);
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s.z[0] == doctest::Approx(2.0).epsilon(1e-6));

  // Linear program as a degenerate QP: min -x0 - x1 on the unit simplex.
  QpProblem lp;
  lp.P = Eigen::MatrixXd::Zero(2, 2);
  lp.q = -Eigen::VectorXd::Ones(2);
  lp.E.resize(0, 2);
  lp.G.resize(3, 2);
  lp.G << 1, 1, -1, 0, 0, -1;
  lp.h.resize(3);
  lp.h << 1, 0, 0;
  const auto l = solve_qp(lp);
  REQUIRE(l.converged);
  CHECK(l.objective == doctest::Approx(-1.0).epsilon(1e-7));
}
