#pragma once

// Unicycle agent driven by random speed and heading increments:
//   x' = x + v cos(theta), y' = y + v sin(theta), v' = v + w_v, theta' = theta + w_theta
// made polynomial with c = cos(theta), s = sin(theta), c_w = cos(w_theta),
// s_w = sin(w_theta). Speed and heading are sums of independent increments,
// so their moments are known in closed form at every step.

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "agentrisk/distributions.hpp"
#include "agentrisk/frames.hpp"
#include "agentrisk/treering.hpp"

namespace agentrisk {

struct DubinsState {
  double x = 0.0, y = 0.0, v = 0.0, theta = 0.0;
};

/// Control-form prediction: known initial state and per-step independent
/// increment distributions; step t moves the state from t to t + 1.
struct ControlPrediction {
  DubinsState initial;
  std::vector<ScalarMixture> w_v;
  std::vector<ScalarMixture> w_theta;

  int steps() const { return static_cast<int>(w_v.size()); }
  void validate() const {
    detail::require(w_v.size() == w_theta.size(), "speed and heading increments differ in length");
    detail::require(std::isfinite(initial.x) && std::isfinite(initial.y) && std::isfinite(initial.v) &&
                        std::isfinite(initial.theta),
                    "initial state must be finite");
  }
};

struct DubinsOptions {
  // Track x - r_t, y - r_t about a deterministic reference path r_t, which keeps
  // high-order moments well conditioned far from the origin.
  bool centered = false;
  // Speed never changes (no w_v): v is a constant independent of everything.
  bool constant_speed = false;
};

struct DubinsSystem {
  PolySystem sys;
  DependenceGraph graph;
  DubinsOptions options;
  VarId x, y, v, c, s, w_v, c_w, s_w;
  VarId dx = -1, dy = -1;  // reference increments when centered
};

inline DubinsSystem dubins_system(const DubinsOptions& opt = {}) {
  DubinsSystem d;
  d.options = opt;
  PolySystem& sys = d.sys;
  d.x = sys.declare("x");
  d.y = sys.declare("y");
  d.v = sys.declare("v");
  d.c = sys.declare("c");
  d.s = sys.declare("s");
  d.w_v = sys.declare("w_v");
  d.c_w = sys.declare("c_w");
  d.s_w = sys.declare("s_w");
  if (opt.centered) {
    d.dx = sys.declare("dx");
    d.dy = sys.declare("dy");
  }
  const Poly x = Poly::var(d.x), y = Poly::var(d.y), v = Poly::var(d.v), c = Poly::var(d.c),
             s = Poly::var(d.s), wv = Poly::var(d.w_v), cw = Poly::var(d.c_w), sw = Poly::var(d.s_w);
  Poly nx = x + v * c, ny = y + v * s;
  if (opt.centered) {
    nx -= Poly::var(d.dx);
    ny -= Poly::var(d.dy);
  }
  sys.set_update(d.x, nx);
  sys.set_update(d.y, ny);
  sys.set_update(d.v, opt.constant_speed ? v : v + wv);
  sys.set_update(d.c, c * cw - s * sw);
  sys.set_update(d.s, s * cw + c * sw);

  sys.add_known_group({d.v});
  sys.add_known_group({d.c, d.s});
  sys.add_known_group({d.w_v});
  sys.add_known_group({d.c_w, d.s_w});
  if (opt.centered) {
    sys.add_known_group({d.dx});
    sys.add_known_group({d.dy});
  }

  d.graph = DependenceGraph(static_cast<int>(sys.names.size()));
  d.graph.add_edge(d.x, d.y);
  if (!opt.constant_speed) {
    d.graph.add_edge(d.x, d.v);
    d.graph.add_edge(d.y, d.v);
  }
  d.graph.add_edge(d.x, d.s);
  d.graph.add_edge(d.x, d.c);
  d.graph.add_edge(d.y, d.s);
  d.graph.add_edge(d.y, d.c);
  d.graph.add_edge(d.c, d.s);
  d.graph.add_edge(d.c_w, d.s_w);
  return d;
}

/// Closed-form moments of the known groups at each step of a prediction.
class DubinsMomentProvider {
 public:
  DubinsMomentProvider(const DubinsSystem& d, ControlPrediction pred)
      : d_(d), pred_(std::move(pred)) {
    pred_.validate();
    const int T = pred_.steps();
    constexpr int K = kMaxMomentOrder;
    std::vector<double> vm(K + 1);
    for (int k = 0; k <= K; ++k) vm[k] = detail::int_pow(pred_.initial.v, k);
    v_moments_.push_back(vm);
    std::array<Complex, 2 * K + 1> cf{};
    for (int k = -K; k <= K; ++k) cf[k + K] = std::exp(Complex(0.0, k * pred_.initial.theta));
    heading_cf_.push_back(cf);
    for (int t = 0; t < T; ++t) {
      wv_moments_.push_back(pred_.w_v[t].raw_moments(K));
      if (!d_.options.constant_speed) vm = convolve_moments(vm, wv_moments_.back());
      v_moments_.push_back(vm);
      for (int k = -K; k <= K; ++k) cf[k + K] *= pred_.w_theta[t].char_fn(static_cast<double>(k));
      heading_cf_.push_back(cf);
    }
    reference_.push_back({pred_.initial.x, pred_.initial.y});
    for (int t = 0; t < T; ++t) {
      const Vec2 inc = v_moments_[t][1] * Vec2(heading(t, 1, 0), heading(t, 0, 1));
      increments_.push_back(inc);
      reference_.push_back(reference_.back() + inc);
    }
  }

  const ControlPrediction& prediction() const { return pred_; }

  /// Deterministic reference path r_t, t = 0..T (the mean path).
  const std::vector<Vec2>& reference() const { return reference_; }

  double operator()(int t, const MultiIndex& alpha) const {
    if (alpha.is_zero()) return 1.0;
    detail::require(t >= 0 && t <= pred_.steps(), "step outside the prediction horizon");
    if (alpha.degree() > kMaxMomentOrder)
      throw ValidationError("known moment degree exceeds cap " + std::to_string(kMaxMomentOrder));
    const VarId lead = alpha.entries().front().first;
    if (lead == d_.v) return v_moments_[t][alpha.exponent(d_.v)];
    if (lead == d_.c || lead == d_.s) return heading(t, alpha.exponent(d_.c), alpha.exponent(d_.s));
    require_noise_step(t);
    if (lead == d_.w_v) return wv_moments_[t][alpha.exponent(d_.w_v)];
    if (lead == d_.c_w || lead == d_.s_w)
      return cached(noise_trig_, t, alpha.exponent(d_.c_w), alpha.exponent(d_.s_w),
                    [&] { return trig_moment(pred_.w_theta[t], alpha.exponent(d_.c_w), alpha.exponent(d_.s_w)); });
    if (lead == d_.dx) return detail::int_pow(increments_[t].x(), alpha.exponent(d_.dx));
    if (lead == d_.dy) return detail::int_pow(increments_[t].y(), alpha.exponent(d_.dy));
    throw ValidationError("no moment provider for " + alpha.to_string(d_.sys.names));
  }

  KnownMomentFn as_function() const {
    return [this](int t, const MultiIndex& a) { return (*this)(t, a); };
  }

  /// E[cos^m(theta_t) sin^n(theta_t)].
  double heading(int t, int m, int n) const {
    return cached(heading_trig_, t, m, n, [&] {
      return trig_moment_from_cf([&](int k) { return heading_cf_[t][k + kMaxMomentOrder]; }, m, n);
    });
  }

 private:
  using Key = std::tuple<int, int, int>;

  void require_noise_step(int t) const {
    detail::require(t < pred_.steps(), "no control increment at the final step");
  }

  template <class F>
  double cached(std::map<Key, double>& memo, int t, int m, int n, F&& compute) const {
    const std::lock_guard<std::mutex> lock(mutex_);
    const Key key{t, m, n};
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double v = compute();
    memo.emplace(key, v);
    return v;
  }

  DubinsSystem d_;
  ControlPrediction pred_;
  std::vector<std::vector<double>> v_moments_, wv_moments_;
  std::vector<std::array<Complex, 2 * kMaxMomentOrder + 1>> heading_cf_;
  std::vector<Vec2> reference_, increments_;
  mutable std::map<Key, double> heading_trig_, noise_trig_;
  mutable std::mutex mutex_;
};

/// Moments of the position about a reference point.
struct PositionMoments {
  Vec2 reference = Vec2::Zero();
  MomentTable moments;  // raw moments of (x, y) - reference

  /// Raw moments of (x, y) - p.
  MomentTable about(const Vec2& p) const { return translate_moments(moments, p - reference, moments.max_order()); }
};

inline MomentTable position_table(const MomentState& st, const DubinsSystem& d, int order) {
  MomentTable out(order);
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b)
      if (a + b > 0) out(a, b) = st.at(MultiIndex{{d.x, a}, {d.y, b}});
  return out;
}

/// Deterministic initial state as moments of the tracked monomials.
inline MomentState dubins_initial_state(const MomentDynamics& dyn, const DubinsSystem& d, const DubinsState& s0) {
  const bool centered = d.options.centered;
  return initial_state(dyn, [&](const MultiIndex& m) {
    double v = 1.0;
    for (const auto& [id, e] : m.entries()) {
      double base = 0.0;
      if (id == d.x) base = centered ? 0.0 : s0.x;
      else if (id == d.y) base = centered ? 0.0 : s0.y;
      else if (id == d.v) base = s0.v;
      else if (id == d.c) base = std::cos(s0.theta);
      else if (id == d.s) base = std::sin(s0.theta);
      else throw ValidationError("initial state has no value for " + d.sys.names[id]);
      v *= detail::int_pow(base, e);
    }
    return v;
  });
}

/// Derived dynamics for one order, shareable across predictions.
struct DubinsPropagator {
  DubinsSystem system;
  MomentDynamics dynamics;
  int order = 0;

  DubinsPropagator(int order_, const DubinsOptions& opt = {})
      : system(dubins_system(opt)), order(order_) {
    detail::require(order_ >= 1 && order_ <= kMaxMomentOrder,
                    "position moment order must be in 1.." + std::to_string(kMaxMomentOrder));
    dynamics = derive_position_moments(system.sys, system.graph, order_);
  }

  /// Position moments at t = 1..T.
  std::vector<PositionMoments> run(const ControlPrediction& pred) const {
    const DubinsMomentProvider provider(system, pred);
    const auto states = propagate(dynamics, dubins_initial_state(dynamics, system, pred.initial),
                                  provider.as_function(), pred.steps());
    std::vector<PositionMoments> out;
    out.reserve(static_cast<std::size_t>(pred.steps()));
    for (int t = 1; t <= pred.steps(); ++t) {
      PositionMoments pm;
      pm.reference = system.options.centered ? provider.reference()[t] : Vec2::Zero();
      pm.moments = position_table(states[t], system, order);
      out.push_back(std::move(pm));
    }
    return out;
  }
};

}  // namespace agentrisk
