#pragma once

// Small dense semidefinite programs in standard form
//
//   minimize <C, X>  subject to  <A_i, X> = b_i,  X >= 0 (block diagonal)
//   maximize b^T y   subject to  Z = C - sum_i y_i A_i >= 0
//
// solved by an infeasible primal-dual path-following method with the HKM
// direction and Mehrotra's predictor-corrector. Blocks are stored as one
// dense matrix; every iterate stays block diagonal because all data is.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agentrisk/error.hpp"

namespace agentrisk {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

struct SdpProblem {
  std::vector<int> block_sizes;
  MatX c;                   // full block-diagonal cost
  std::vector<MatX> a;      // full block-diagonal constraint matrices
  VecX b;

  int dim() const {
    int n = 0;
    for (int s : block_sizes) n += s;
    return n;
  }
  int block_offset(int k) const {
    int off = 0;
    for (int i = 0; i < k; ++i) off += block_sizes[static_cast<std::size_t>(i)];
    return off;
  }
};

enum class SdpStatus { optimal, max_iter, infeasible };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::max_iter: return "max-iter";
    case SdpStatus::infeasible: return "infeasible";
  }
  return "?";
}

struct SdpSolution {
  SdpStatus status = SdpStatus::max_iter;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  MatX x;
  MatX z;
  VecX y;

  MatX block(const SdpProblem& p, int k) const {
    const int off = p.block_offset(k), n = p.block_sizes[static_cast<std::size_t>(k)];
    return x.block(off, off, n, n);
  }
};

namespace detail {

inline MatX sym(const MatX& m) { return 0.5 * (m + m.transpose()); }

inline double inner(const MatX& a, const MatX& b) { return (a.array() * b.array()).sum(); }

// Largest alpha in (0, inf] with X + alpha dX PSD, given chol(X) = L L^T.
inline double max_step(const Eigen::LLT<MatX>& chol, const MatX& dx) {
  const MatX l = chol.matrixL();
  MatX t = l.triangularView<Eigen::Lower>().solve(dx);
  t = l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
  const Eigen::SelfAdjointEigenSolver<MatX> eig(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

}  // namespace detail

struct SdpOptions {
  double tol = 1e-9;
  int max_iter = 100;
  // Accepted instead of tol when the factorizations break down close to the
  // optimum, where X or Z is numerically singular.
  double breakdown_tol = 1e-7;
};

inline SdpSolution solve_sdp(const SdpProblem& prob, const SdpOptions& opt = {}) {
  const int n = prob.dim();
  const int m = static_cast<int>(prob.a.size());
  detail::require(n > 0 && m > 0 && prob.b.size() == m, "malformed SDP");
  detail::require(prob.c.rows() == n && prob.c.cols() == n, "cost matrix has wrong size");
  for (const auto& a : prob.a) detail::require(a.rows() == n && a.cols() == n, "constraint matrix has wrong size");

  auto op_a = [&](const MatX& x) {
    VecX v(m);
    for (int i = 0; i < m; ++i) v(i) = detail::inner(prob.a[static_cast<std::size_t>(i)], x);
    return v;
  };
  auto op_at = [&](const VecX& y) {
    MatX s = MatX::Zero(n, n);
    for (int i = 0; i < m; ++i) s += y(i) * prob.a[static_cast<std::size_t>(i)];
    return s;
  };

  double a_norm = 0.0;
  for (const auto& a : prob.a) a_norm = std::max(a_norm, a.norm());
  const double b_norm = prob.b.norm(), c_norm = prob.c.norm();
  const double xi = std::max({10.0, std::sqrt(static_cast<double>(n)), (1.0 + b_norm) / (1.0 + a_norm)});
  const double eta = std::max({10.0, std::sqrt(static_cast<double>(n)), c_norm});

  SdpSolution sol;
  MatX x = xi * MatX::Identity(n, n);
  MatX z = eta * MatX::Identity(n, n);
  VecX y = VecX::Zero(m);

  for (int it = 0; it < opt.max_iter; ++it) {
    sol.iterations = it;
    const VecX rp = prob.b - op_a(x);
    const MatX rd = detail::sym(prob.c - z - op_at(y));
    const double pobj = detail::inner(prob.c, x), dobj = prob.b.dot(y);
    const double mu = detail::inner(x, z) / n;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    sol.gap = std::abs(pobj - dobj);
    sol.primal_residual = rp.norm() / (1.0 + b_norm);
    sol.dual_residual = rd.norm() / (1.0 + c_norm);
    sol.x = x;
    sol.z = z;
    sol.y = y;
    if (!std::isfinite(pobj) || !std::isfinite(dobj)) break;

    const double rel_gap = sol.gap / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (rel_gap <= opt.tol && sol.primal_residual <= opt.tol && sol.dual_residual <= opt.tol) {
      sol.status = SdpStatus::optimal;
      return sol;
    }
    // Primal objective running off to -infinity with a feasible primal: the
    // dual (moment side) has no feasible point.
    if (sol.primal_residual <= 1e-6 && pobj < -1e8 * (1.0 + std::abs(dobj))) {
      sol.status = SdpStatus::infeasible;
      return sol;
    }

    const Eigen::LLT<MatX> xchol(x), zchol(z);
    if (xchol.info() != Eigen::Success || zchol.info() != Eigen::Success) break;
    const MatX zinv = zchol.solve(MatX::Identity(n, n));

    // Schur complement M_ij = tr(A_i X A_j Z^-1).
    std::vector<MatX> xaz(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) xaz[static_cast<std::size_t>(j)] = x * prob.a[static_cast<std::size_t>(j)] * zinv;
    MatX schur(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        schur(i, j) = detail::inner(prob.a[static_cast<std::size_t>(i)], xaz[static_cast<std::size_t>(j)].transpose());
    const Eigen::LDLT<MatX> schur_fact(detail::sym(schur));
    if (schur_fact.info() != Eigen::Success) break;

    const MatX x_rd_zinv = x * rd * zinv;
    // Direction for complementarity target R: dX = sym((R - X dZ) Z^-1).
    auto direction = [&](const MatX& r, MatX& dx, MatX& dz, VecX& dy) {
      const VecX rhs = rp + op_a(x_rd_zinv) - op_a(r * zinv);
      dy = schur_fact.solve(rhs);
      dz = detail::sym(rd - op_at(dy));
      dx = detail::sym((r - x * dz) * zinv);
    };

    MatX dxa, dza, dx, dz;
    VecX dya, dy;
    direction(-x * z, dxa, dza, dya);
    const double ap = std::min(1.0, detail::max_step(xchol, dxa));
    const double ad = std::min(1.0, detail::max_step(zchol, dza));
    const double mu_aff = detail::inner(x + ap * dxa, z + ad * dza) / n;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
    direction(sigma * mu * MatX::Identity(n, n) - x * z - dxa * dza, dx, dz, dy);

    const double step_p = std::min(1.0, 0.95 * detail::max_step(xchol, dx));
    const double step_d = std::min(1.0, 0.95 * detail::max_step(zchol, dz));
    x = detail::sym(x + step_p * dx);
    z = detail::sym(z + step_d * dz);
    y += step_d * dy;
    sol.iterations = it + 1;
  }
  const double rel_gap = sol.gap / (1.0 + std::abs(sol.primal_objective) + std::abs(sol.dual_objective));
  if (sol.iterations < opt.max_iter && rel_gap <= opt.breakdown_tol && sol.primal_residual <= opt.breakdown_tol &&
      sol.dual_residual <= opt.breakdown_tol)
    sol.status = SdpStatus::optimal;
  if (sol.status != SdpStatus::optimal && sol.status != SdpStatus::infeasible) sol.status = SdpStatus::max_iter;
  return sol;
}

}  // namespace agentrisk
