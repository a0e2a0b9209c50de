#pragma once

// Per-step marginal risk for each agent, mixed over prediction modes, and the
// time-independent product form over the horizon.

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "agentrisk/cheb_bounds.hpp"
#include "agentrisk/dubins.hpp"
#include "agentrisk/frames.hpp"
#include "agentrisk/mc_oracle.hpp"
#include "agentrisk/qfmvg.hpp"
#include "agentrisk/sos_bound.hpp"

namespace agentrisk {

enum class Method { imhof, ltz, chebyshev_quad, chebyshev_halfspace, sos, mc };

struct MethodSpec {
  Method kind = Method::imhof;
  int sos_degree = 2;

  std::string name() const {
    switch (kind) {
      case Method::imhof: return "imhof";
      case Method::ltz: return "ltz";
      case Method::chebyshev_quad: return "chebyshev-quad";
      case Method::chebyshev_halfspace: return "chebyshev-halfspace";
      case Method::sos: return "sos-d" + std::to_string(sos_degree);
      case Method::mc: return "mc";
    }
    return "?";
  }

  bool is_upper_bound() const {
    return kind == Method::chebyshev_quad || kind == Method::chebyshev_halfspace || kind == Method::sos;
  }

  /// Position moment order the method consumes.
  int moment_order() const {
    switch (kind) {
      case Method::chebyshev_quad: return 4;
      case Method::sos: return 2 * sos_degree;
      default: return 2;
    }
  }
};

/// Accepts imhof, ltz, chebyshev-quad, chebyshev-halfspace, sos, sos-d{2,4,6}, mc.
inline MethodSpec parse_method(const std::string& s, int default_sos_degree = 2) {
  auto check_degree = [](int d) {
    if (d != 2 && d != 4 && d != 6) throw ValidationError("SOS degree must be 2, 4 or 6 (got " + std::to_string(d) + ")");
    return d;
  };
  if (s == "imhof") return {Method::imhof};
  if (s == "ltz") return {Method::ltz};
  if (s == "chebyshev-quad") return {Method::chebyshev_quad};
  if (s == "chebyshev-halfspace") return {Method::chebyshev_halfspace};
  if (s == "mc") return {Method::mc};
  if (s == "sos") return {Method::sos, check_degree(default_sos_degree)};
  if (s.rfind("sos-d", 0) == 0 && s.size() == 6 && std::isdigit(static_cast<unsigned char>(s[5])))
    return {Method::sos, check_degree(s[5] - '0')};
  throw ValidationError("unknown method '" + s + "'");
}

struct EngineOptions {
  double tol = 1e-8;  // Imhof absolute accuracy
  int halfspaces = 12;
  std::int64_t mc_samples = 100000;
  std::uint64_t seed = 0;
};

struct ModeRisk {
  double weight = 1.0;
  double value = 0.0;
};

struct MarginalRisk {
  int t = 0;
  std::vector<ModeRisk> per_mode;
  double mixed = 0.0;
  std::string method;
  bool is_upper_bound = false;
  std::optional<double> std_error;  // Monte Carlo only
};

struct TrajectoryRisk {
  int horizon = 0;
  std::vector<MarginalRisk> marginals;
  double total = 0.0;
};

inline MarginalRisk mix_modes(int t, std::vector<ModeRisk> per_mode, const MethodSpec& m) {
  MarginalRisk r;
  r.t = t;
  r.method = m.name();
  r.is_upper_bound = m.is_upper_bound();
  double s = 0.0;
  for (auto& pm : per_mode) {
    pm.value = std::clamp(pm.value, 0.0, 1.0);
    s += pm.weight * pm.value;
  }
  r.per_mode = std::move(per_mode);
  r.mixed = std::clamp(s, 0.0, 1.0);
  return r;
}

/// Risk of one Gaussian mode at one ego pose.
inline double gaussian_mode_risk(const Gaussian2D& g, const EgoPose& ego, const Ellipsoid& q, const MethodSpec& m,
                                 const EngineOptions& opt) {
  const auto [local, qs] = to_ego_frame(g, ego, q);
  switch (m.kind) {
    case Method::imhof: return quadratic_form_cdf(qs, local, 1.0, QfMethod::imhof, opt.tol).probability;
    case Method::ltz: return quadratic_form_cdf(qs, local, 1.0, QfMethod::ltz).probability;
    case Method::chebyshev_halfspace:
      return cheb_bound_halfspace(ellipse_to_halfspaces(qs, opt.halfspaces), local.mean(), local.covariance()).value;
    case Method::chebyshev_quad: return cheb_bound_quadratic(qs, gaussian2d_raw_moments(local, 4)).value;
    case Method::sos: return sos_risk_bound(qs, gaussian2d_raw_moments(local, 2 * m.sos_degree), m.sos_degree).value;
    case Method::mc: break;
  }
  throw ValidationError("method " + m.name() + " is not evaluated per mode");
}

/// Marginal risk at step t for a position-form mixture.
inline MarginalRisk marginal_risk(int t, const Gaussian2DMixture& step, const EgoPose& ego, const Ellipsoid& q,
                                  const MethodSpec& m, const EngineOptions& opt = {}) {
  std::vector<ModeRisk> modes;
  for (std::size_t k = 0; k < step.size(); ++k) {
    double v;
    if (m.kind == Method::mc) {
      const auto est = mc_position_risk({Gaussian2DMixture({step.components()[k]}, {1.0})}, {ego}, q, opt.mc_samples,
                                        opt.seed + 7919 * static_cast<std::uint64_t>(t) + k);
      v = est.per_step[0].probability;
    } else {
      v = gaussian_mode_risk(step.components()[k], ego, q, m, opt);
    }
    modes.push_back({step.weights()[k], v});
  }
  MarginalRisk r = mix_modes(t, std::move(modes), m);
  if (m.kind == Method::mc) r.std_error = std::sqrt(r.mixed * (1 - r.mixed) / static_cast<double>(opt.mc_samples));
  return r;
}

/// Marginal bound at step t from position moments (control form).
inline MarginalRisk marginal_risk(int t, const PositionMoments& pm, const EgoPose& ego, const Ellipsoid& q,
                                  const MethodSpec& m, const EngineOptions& opt = {}) {
  const Ellipsoid qs = rotate_form(q, ego.theta);
  const MomentTable local = pm.about(ego.position);
  double v;
  switch (m.kind) {
    case Method::chebyshev_halfspace:
      v = cheb_bound_halfspace(ellipse_to_halfspaces(qs, opt.halfspaces), local).value;
      break;
    case Method::chebyshev_quad: v = cheb_bound_quadratic(qs, local).value; break;
    case Method::sos: v = sos_risk_bound(qs, local, m.sos_degree).value; break;
    default:
      throw ValidationError("method " + m.name() + " needs Gaussian position predictions; control-form agents support "
                            "chebyshev-quad, chebyshev-halfspace, sos and mc");
  }
  return mix_modes(t, {{1.0, v}}, m);
}

/// R = 1 - prod_t (1 - p_t). With mode persistence the product is taken per
/// mode (one mode held over the horizon) and then mixed.
inline TrajectoryRisk trajectory_risk(std::vector<MarginalRisk> marginals, bool mode_persistence = false) {
  if (marginals.empty()) throw ValidationError("trajectory risk needs at least one timestep");
  TrajectoryRisk r;
  r.horizon = static_cast<int>(marginals.size());
  if (!mode_persistence) {
    double survive = 1.0;
    for (const auto& m : marginals) survive *= 1.0 - m.mixed;
    r.total = std::clamp(1.0 - survive, 0.0, 1.0);
  } else {
    const auto& first = marginals.front().per_mode;
    double total = 0.0;
    for (std::size_t k = 0; k < first.size(); ++k) {
      double survive = 1.0;
      for (const auto& m : marginals) {
        detail::require(m.per_mode.size() == first.size(), "persistent modes need the same mode count at every step");
        survive *= 1.0 - m.per_mode[k].value;
      }
      total += first[k].weight * (1.0 - survive);
    }
    r.total = std::clamp(total, 0.0, 1.0);
  }
  r.marginals = std::move(marginals);
  return r;
}

inline double multi_agent_bound(const std::vector<TrajectoryRisk>& per_agent) {
  double s = 0.0;
  for (const auto& a : per_agent) s += a.total;
  return std::min(1.0, s);
}

struct PositionPrediction {
  bool mode_persistence = false;
  std::vector<Gaussian2DMixture> steps;
};

struct AgentPrediction {
  std::string id;
  std::variant<PositionPrediction, ControlPrediction> form;

  bool is_control() const { return std::holds_alternative<ControlPrediction>(form); }
  int horizon() const {
    return is_control() ? std::get<ControlPrediction>(form).steps()
                        : static_cast<int>(std::get<PositionPrediction>(form).steps.size());
  }
};

// Highest position-moment order propagated for control-form agents. The
// derived system grows quickly with order (order 8: about 1800 tracked
// moments; order 12: about 9700 moments and 12 million terms).
inline constexpr int kMaxControlMomentOrder = 8;

/// Derivations are costly relative to evaluation; one per order per process.
inline const DubinsPropagator& control_propagator(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<DubinsPropagator>> cache;
  if (order > kMaxControlMomentOrder)
    throw ValidationError("control-form agents support position moments up to order " +
                          std::to_string(kMaxControlMomentOrder) + " (sos-d" +
                          std::to_string(kMaxControlMomentOrder / 2) + "); requested order " + std::to_string(order));
  const std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<DubinsPropagator>(order, DubinsOptions{true, false});
  return *slot;
}

struct AgentRisk {
  TrajectoryRisk risk;
  std::optional<McEstimate> mc_trajectory;  // per-sample union, Monte Carlo only
};

inline AgentRisk assess_agent(const AgentPrediction& agent, const std::vector<EgoPose>& ego, const Ellipsoid& q,
                              const MethodSpec& m, const EngineOptions& opt = {}) {
  if (agent.horizon() != static_cast<int>(ego.size()))
    throw ValidationError("agent '" + agent.id + "' horizon " + std::to_string(agent.horizon()) +
                          " differs from ego trajectory length " + std::to_string(ego.size()));
  AgentRisk out;
  std::vector<MarginalRisk> marg;
  bool persistence = false;
  if (const auto* pos = std::get_if<PositionPrediction>(&agent.form)) {
    persistence = pos->mode_persistence;
    if (m.kind == Method::mc) {
      const auto est = mc_position_risk(pos->steps, ego, q, opt.mc_samples, opt.seed, persistence);
      out.mc_trajectory = est.trajectory;
      // persistent modes need per-mode marginals, sampled separately below
      if (!persistence) {
        for (std::size_t t = 0; t < ego.size(); ++t) {
          MarginalRisk r = mix_modes(static_cast<int>(t), {{1.0, est.per_step[t].probability}}, m);
          r.std_error = est.per_step[t].std_error;
          marg.push_back(std::move(r));
        }
      }
    }
    if (marg.empty()) {
      for (std::size_t t = 0; t < ego.size(); ++t)
        marg.push_back(marginal_risk(static_cast<int>(t), pos->steps[t], ego[t], q, m, opt));
    }
  } else {
    const auto& ctl = std::get<ControlPrediction>(agent.form);
    if (m.kind == Method::mc) {
      const auto est = mc_control_risk(ctl, ego, q, opt.mc_samples, opt.seed);
      for (std::size_t t = 0; t < ego.size(); ++t) {
        MarginalRisk r = mix_modes(static_cast<int>(t), {{1.0, est.per_step[t].probability}}, m);
        r.std_error = est.per_step[t].std_error;
        marg.push_back(std::move(r));
      }
      out.mc_trajectory = est.trajectory;
    } else {
      if (m.kind == Method::imhof || m.kind == Method::ltz)
        throw ValidationError("agent '" + agent.id + "': method " + m.name() +
                              " needs Gaussian position predictions, not control-form moments");
      const auto moments = control_propagator(m.moment_order()).run(ctl);
      for (std::size_t t = 0; t < ego.size(); ++t)
        marg.push_back(marginal_risk(static_cast<int>(t), moments[t], ego[t], q, m, opt));
    }
  }
  out.risk = trajectory_risk(std::move(marg), persistence);
  return out;
}

}  // namespace agentrisk
