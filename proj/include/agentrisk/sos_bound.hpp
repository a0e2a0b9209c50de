#pragma once

// Univariate SOS bound on P(g <= 0) from E[g^k], k <= d, with g = Q(x) - 1.
// Find p of degree d with p >= 0 on R and p >= 1 on (-inf, 0], minimizing
// E[p(g)]. Nonnegativity is certified by Gram matrices:
//   p = z^T P z,   p - 1 = s1 - x s2,   P, S1, S2 PSD.

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "agentrisk/cheb_bounds.hpp"
#include "agentrisk/distributions.hpp"
#include "agentrisk/frames.hpp"
#include "agentrisk/sdp.hpp"

namespace agentrisk {

struct MomentVector {
  int d = 0;
  std::vector<double> m;  // m[k] = E[g^k]
  double scale = 1.0;     // moments are of g / scale
};

struct MonomialTerm {
  int a = 0, b = 0;  // x^a y^b
  double coef = 0.0;
};

/// Expansion of (x^T Q x + offset)^k as a list of monomials.
inline std::vector<MonomialTerm> form_power_terms(const Ellipsoid& q, double offset, int k) {
  detail::require(k >= 0, "power must be nonnegative");
  const Mat2& Q = q.matrix();
  const double t[3] = {Q(0, 0), 2.0 * Q(0, 1), Q(1, 1)};
  std::vector<double> coef(static_cast<std::size_t>((2 * k + 1) * (2 * k + 1)), 0.0);
  auto at = [&](int a, int b) -> double& { return coef[static_cast<std::size_t>(a * (2 * k + 1) + b)]; };
  // multinomial over x^2, xy, y^2 and the constant
  for (int i = 0; i <= k; ++i)
    for (int j = 0; i + j <= k; ++j)
      for (int l = 0; i + j + l <= k; ++l) {
        const int e = k - i - j - l;
        const double mult = std::exp(std::lgamma(k + 1.0) - std::lgamma(i + 1.0) - std::lgamma(j + 1.0) -
                                     std::lgamma(l + 1.0) - std::lgamma(e + 1.0));
        at(2 * i + j, j + 2 * l) += std::round(mult) * detail::int_pow(t[0], i) * detail::int_pow(t[1], j) *
                                    detail::int_pow(t[2], l) * detail::int_pow(offset, e);
      }
  std::vector<MonomialTerm> out;
  for (int d = 0; d <= 2 * k; ++d)
    for (int b = 0; b <= d; ++b) {
      const double c = at(d - b, b);
      if (c != 0.0) out.push_back({d - b, b, c});
    }
  return out;
}

/// E[(Q(x) - 1)^k] for k = 0..d by multinomial expansion over the table.
inline MomentVector moments_of_g(const Ellipsoid& q, const MomentTable& x_moments, int d) {
  detail::require(d >= 1, "degree must be positive");
  if (x_moments.max_order() < 2 * d) {
    throw ValidationError("degree-" + std::to_string(d) + " moments of g need position moments up to order " +
                          std::to_string(2 * d) + ", table has " + std::to_string(x_moments.max_order()));
  }
  MomentVector mv;
  mv.d = d;
  mv.m.assign(static_cast<std::size_t>(d) + 1, 0.0);
  mv.m[0] = 1.0;
  for (int k = 1; k <= d; ++k) {
    double s = 0.0;
    for (const auto& t : form_power_terms(q, -1.0, k)) s += t.coef * x_moments(t.a, t.b);
    mv.m[static_cast<std::size_t>(k)] = s;
  }
  return mv;
}

/// Rescale to moments of g / sqrt(E[g^2]).
inline MomentVector normalize_moments(const MomentVector& mv) {
  detail::require(mv.m.size() >= 3, "normalization needs the second moment");
  const double m2 = mv.m[2];
  if (!(m2 > 0.0)) throw ValidationError("second moment of g must be positive to normalize");
  const double c = std::sqrt(m2);
  MomentVector out = mv;
  out.scale = mv.scale * c;
  double ck = 1.0;
  for (std::size_t k = 1; k < out.m.size(); ++k) {
    ck *= c;
    out.m[k] = mv.m[k] / ck;
  }
  return out;
}

struct SosProgram {
  int d = 0;
  int p_size = 0, s1_size = 0, s2_size = 0;
  SdpProblem sdp;
};

inline std::tuple<int, int, int> sos_gram_sizes(int d) {
  detail::require(d >= 2, "SOS degree must be at least 2");
  const int n = d / 2;
  if (d % 2 == 0) return {n + 1, n + 1, n};
  return {n + 1, n + 1, n + 1};
}

inline SosProgram build_sos_program(const MomentVector& mv) {
  const int d = mv.d;
  detail::require(static_cast<int>(mv.m.size()) == d + 1, "moment vector length does not match degree");
  const auto [np, n1, n2] = sos_gram_sizes(d);
  SosProgram prog;
  prog.d = d;
  prog.p_size = np;
  prog.s1_size = n1;
  prog.s2_size = n2;
  SdpProblem& s = prog.sdp;
  s.block_sizes = {np, n1, n2};
  const int n = np + n1 + n2;
  const int o1 = np, o2 = np + n1;

  // objective <Hankel(m), P> = sum_k coef_k(p) m_k
  s.c = MatX::Zero(n, n);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j)
      if (i + j <= d) s.c(i, j) = mv.m[static_cast<std::size_t>(i + j)];

  // coefficient of x^k: p_k - s1_k + s2_{k-1} = [k == 0]
  s.b = VecX::Zero(d + 1);
  s.b(0) = 1.0;
  for (int k = 0; k <= d; ++k) {
    MatX a = MatX::Zero(n, n);
    for (int i = 0; i < np; ++i)
      if (k - i >= 0 && k - i < np) a(i, k - i) += 1.0;
    for (int i = 0; i < n1; ++i)
      if (k - i >= 0 && k - i < n1) a(o1 + i, o1 + k - i) -= 1.0;
    for (int i = 0; i < n2; ++i)
      if (k - 1 - i >= 0 && k - 1 - i < n2) a(o2 + i, o2 + k - 1 - i) += 1.0;
    s.a.push_back(a);
  }
  return prog;
}

/// Coefficients of p (ascending powers) from a solution's P block.
inline std::vector<double> sos_polynomial(const SosProgram& prog, const SdpSolution& sol) {
  const MatX p = sol.block(prog.sdp, 0);
  std::vector<double> c(static_cast<std::size_t>(2 * prog.p_size - 1), 0.0);
  for (int i = 0; i < prog.p_size; ++i)
    for (int j = 0; j < prog.p_size; ++j) c[static_cast<std::size_t>(i + j)] += p(i, j);
  return c;
}

/// Hankel moment matrix PSD check; a violated one means no distribution has these moments.
inline bool hankel_psd(const std::vector<double>& m, double tol = 1e-9) {
  const int n = static_cast<int>(m.size() - 1) / 2 + 1;
  MatX h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = m[static_cast<std::size_t>(i + j)];
  const Eigen::SelfAdjointEigenSolver<MatX> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol * std::max(1.0, h.cwiseAbs().maxCoeff());
}

struct SosResult {
  SdpSolution solution;
  SosProgram program;
  MomentVector moments;  // normalized
};

inline SosResult solve_sos(const MomentVector& normalized, const SdpOptions& opt = {}) {
  SosResult r;
  r.moments = normalized;
  r.program = build_sos_program(normalized);
  if (!hankel_psd(normalized.m)) {
    r.solution.status = SdpStatus::infeasible;
    return r;
  }
  r.solution = solve_sdp(r.program.sdp, opt);
  return r;
}

/// Degree-d SOS bound; falls back to degree d - 2 (and finally the quadratic
/// Chebyshev bound) when the solver does not certify an optimum.
inline RiskBound sos_risk_bound(const Ellipsoid& q, const MomentTable& x_moments, int d) {
  const MomentVector raw = moments_of_g(q, x_moments, d);
  RiskBound out;
  out.method = "sos-d" + std::to_string(d);
  out.moments_used = 2 * d;
  if (!(raw.m[2] > 0.0)) {
    // g == 0 almost surely: the boundary itself, which collides
    out.value = 1.0;
    out.diagnostics = "degenerate: E[g^2] = 0";
    return out;
  }
  const SosResult res = solve_sos(normalize_moments(raw));
  if (res.solution.status != SdpStatus::optimal) {
    // any lower-degree bound uses a subset of the same moments
    RiskBound fb = d > 2 ? sos_risk_bound(q, x_moments, d - 2) : cheb_bound_quadratic(q, x_moments);
    fb.diagnostics = "fallback=" + fb.method + " solver=" + to_string(res.solution.status) +
                     (fb.diagnostics.empty() ? "" : " " + fb.diagnostics);
    fb.method = out.method;
    return fb;
  }
  out.value = std::clamp(res.solution.primal_objective, 0.0, 1.0);
  out.diagnostics = "iterations=" + std::to_string(res.solution.iterations);
  return out;
}

}  // namespace agentrisk
