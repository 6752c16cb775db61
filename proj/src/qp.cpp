#include "lmr/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "lmr/error.hpp"

namespace lmr {

namespace {

enum class Bound : unsigned char { free, lower, upper, fixed };

}  // namespace

BoxQpResult solve_box_qp(const SparseMatrix& H, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, const Eigen::VectorXd& x0, int max_iterations) {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n || lo.size() != n || hi.size() != n) {
    throw Error(Errc::invalid_argument, "box QP dimension mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) throw Error(Errc::infeasible, "box QP lower bound above upper bound at " + std::to_string(i));
  }
  if (max_iterations < 0) max_iterations = static_cast<int>(10 * n + 100);

  Eigen::VectorXd x = x0.size() == n ? x0 : Eigen::VectorXd::Zero(n);
  std::vector<Bound> state(static_cast<std::size_t>(n), Bound::free);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = std::clamp(x[i], lo[i], hi[i]);
    if (lo[i] == hi[i]) state[static_cast<std::size_t>(i)] = Bound::fixed;
  }

  const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
  const double mult_tol = 1e-11 * scale;
  std::vector<Eigen::Index> free_idx;
  std::vector<Eigen::Index> position(static_cast<std::size_t>(n));
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;

  BoxQpResult res;
  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::VectorXd grad = H * x + g;

    free_idx.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == Bound::free) {
        position[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(free_idx.size());
        free_idx.push_back(i);
      }
    }

    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    if (!free_idx.empty()) {
      const auto nf = static_cast<Eigen::Index>(free_idx.size());
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(H.nonZeros()));
      Eigen::VectorXd rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        const Eigen::Index col = free_idx[static_cast<std::size_t>(a)];
        rhs[a] = -grad[col];
        for (SparseMatrix::InnerIterator itr(H, col); itr; ++itr) {
          if (state[static_cast<std::size_t>(itr.row())] == Bound::free) {
            trips.emplace_back(position[static_cast<std::size_t>(itr.row())], a, itr.value());
          }
        }
      }
      SparseMatrix Hff(nf, nf);
      Hff.setFromTriplets(trips.begin(), trips.end());
      ldlt.compute(Hff);
      if (ldlt.info() != Eigen::Success) throw Error(Errc::solver_failure, "box QP factorisation failed");
      const Eigen::VectorXd pf = ldlt.solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) step[free_idx[static_cast<std::size_t>(a)]] = pf[a];
    }

    double alpha = 1.0;
    for (const Eigen::Index i : free_idx) {
      if (step[i] < 0.0) alpha = std::min(alpha, (lo[i] - x[i]) / step[i]);
      if (step[i] > 0.0) alpha = std::min(alpha, (hi[i] - x[i]) / step[i]);
    }
    alpha = std::max(alpha, 0.0);
    if (alpha < 1.0) {
      x += alpha * step;
      for (const Eigen::Index i : free_idx) {
        if (step[i] < 0.0 && x[i] <= lo[i] + 1e-12 * std::max(1.0, std::abs(lo[i]))) {
          x[i] = lo[i];
          state[static_cast<std::size_t>(i)] = Bound::lower;
        } else if (step[i] > 0.0 && x[i] >= hi[i] - 1e-12 * std::max(1.0, std::abs(hi[i]))) {
          x[i] = hi[i];
          state[static_cast<std::size_t>(i)] = Bound::upper;
        }
      }
      continue;
    }

    // At the minimum of the current face: release the worst bound, if any.
    x += step;
    const Eigen::VectorXd grad_new = H * x + g;
    Eigen::Index worst = -1;
    double worst_mult = -mult_tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Bound b = state[static_cast<std::size_t>(i)];
      const double mult = b == Bound::lower ? grad_new[i] : b == Bound::upper ? -grad_new[i] : 0.0;
      if (mult < worst_mult) {
        worst_mult = mult;
        worst = i;
      }
    }
    if (worst < 0) {
      res.x = x;
      res.objective = 0.5 * x.dot(H * x) + g.dot(x);
      res.active = static_cast<int>(std::count_if(state.begin(), state.end(), [](Bound b) {
        return b == Bound::lower || b == Bound::upper;
      }));
      return res;
    }
    state[static_cast<std::size_t>(worst)] = Bound::free;
  }
  throw Error(Errc::solver_failure, "box QP did not converge in " + std::to_string(max_iterations) + " iterations");
}

std::string QpResult::diagnostics() const {
  std::ostringstream os;
  os << "iterations=" << iterations << " primal_residual=" << primal_residual << " dual_residual=" << dual_residual
     << " gap=" << gap;
  return os.str();
}

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  }
  return a;
}

}  // namespace

QpResult solve_qp(const QpProblem& pb, const QpSettings& settings) {
  const Eigen::Index n = pb.q.size();
  const Eigen::Index me = pb.E.rows();
  const Eigen::Index mi = pb.G.rows();
  if (pb.P.rows() != n || pb.P.cols() != n || (me > 0 && pb.E.cols() != n) || pb.e.size() != me ||
      (mi > 0 && pb.G.cols() != n) || pb.h.size() != mi) {
    throw Error(Errc::invalid_argument, "QP dimension mismatch");
  }

  QpResult res;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd s(mi);
  Eigen::VectorXd z(mi);
  for (Eigen::Index i = 0; i < mi; ++i) {
    s[i] = std::max(pb.h[i], 1.0);
    z[i] = 1.0;
  }

  const double scale_d = 1.0 + pb.q.lpNorm<Eigen::Infinity>();
  const double scale_p = 1.0 + std::max(pb.e.size() ? pb.e.lpNorm<Eigen::Infinity>() : 0.0,
                                        pb.h.size() ? pb.h.lpNorm<Eigen::Infinity>() : 0.0);

  Eigen::MatrixXd kkt(n + me, n + me);
  Eigen::VectorXd rhs(n + me);
  for (int it = 0; it < settings.max_iterations; ++it) {
    const Eigen::VectorXd rd = pb.P * x + pb.q + (me ? Eigen::VectorXd(pb.E.transpose() * y) : Eigen::VectorXd::Zero(n)) +
                               (mi ? Eigen::VectorXd(pb.G.transpose() * z) : Eigen::VectorXd::Zero(n));
    const Eigen::VectorXd re = me ? Eigen::VectorXd(pb.E * x - pb.e) : Eigen::VectorXd();
    const Eigen::VectorXd ri = mi ? Eigen::VectorXd(pb.G * x + s - pb.h) : Eigen::VectorXd();
    const double mu = mi ? s.dot(z) / static_cast<double>(mi) : 0.0;

    res.iterations = it;
    res.dual_residual = rd.lpNorm<Eigen::Infinity>();
    res.primal_residual = std::max(me ? re.lpNorm<Eigen::Infinity>() : 0.0, mi ? ri.lpNorm<Eigen::Infinity>() : 0.0);
    res.gap = mu;
    if (res.dual_residual <= settings.tolerance * scale_d && res.primal_residual <= settings.tolerance * scale_p &&
        mu <= settings.tolerance) {
      res.converged = true;
      break;
    }

    const Eigen::VectorXd d = mi ? Eigen::VectorXd(z.cwiseQuotient(s)) : Eigen::VectorXd();
    kkt.setZero();
    kkt.topLeftCorner(n, n) = pb.P;
    if (mi) kkt.topLeftCorner(n, n) += pb.G.transpose() * d.asDiagonal() * pb.G;
    if (me) {
      kkt.topRightCorner(n, me) = pb.E.transpose();
      kkt.bottomLeftCorner(me, n) = pb.E;
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);

    // Solves the Newton system for complementarity target rc = s.*z - target.
    auto newton = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& ds,
                      Eigen::VectorXd& dz) {
      rhs.head(n) = -rd;
      if (mi) rhs.head(n) -= pb.G.transpose() * ((z.cwiseProduct(ri) - rc).cwiseQuotient(s));
      if (me) rhs.tail(me) = -re;
      const Eigen::VectorXd sol = lu.solve(rhs);
      dx = sol.head(n);
      dy = sol.tail(me);
      if (mi) {
        ds = -ri - pb.G * dx;
        dz = (-rc + z.cwiseProduct(ri) + z.cwiseProduct(pb.G * dx)).cwiseQuotient(s);
      }
    };

    Eigen::VectorXd dx, dy, ds, dz;
    if (mi == 0) {
      newton(Eigen::VectorXd(), dx, dy, ds, dz);
      x += dx;
      y += dy;
      continue;
    }
    newton(s.cwiseProduct(z), dx, dy, ds, dz);
    const double ap = max_step(s, ds);
    const double ad = max_step(z, dz);
    const double mu_aff = (s + ap * ds).dot(z + ad * dz) / static_cast<double>(mi);
    const double sigma = std::pow(mu_aff / mu, 3);

    const Eigen::VectorXd rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(mi, sigma * mu);
    newton(rc, dx, dy, ds, dz);
    const double step_p = std::min(1.0, 0.99 * max_step(s, ds));
    const double step_d = std::min(1.0, 0.99 * max_step(z, dz));
    x += step_p * dx;
    s += step_p * ds;
    y += step_d * dy;
    z += step_d * dz;
    res.iterations = it + 1;
  }
  res.x = x;
  res.y = y;
  res.z = z;
  res.objective = 0.5 * x.dot(pb.P * x) + pb.q.dot(x);
  return res;
}

}  // namespace lmr
