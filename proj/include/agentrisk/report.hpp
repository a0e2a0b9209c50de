#pragma once

// Runs a scenario through a list of methods and renders the results as JSON,
// CSV or a comparison table.

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "agentrisk/scenario.hpp"

namespace agentrisk {

struct AgentReport {
  std::string id;
  TrajectoryRisk risk;
  std::optional<McEstimate> mc_trajectory;
};

struct MethodReport {
  MethodSpec method;
  std::vector<AgentReport> agents;
  double multi_agent_bound = 0.0;  // union bound over agents
  double seconds = 0.0;            // wall time for all agents
};

struct RiskReport {
  int horizon = 0;
  EngineOptions options;
  std::vector<MethodReport> methods;
};

/// Splits "imhof,ltz,sos-d4" into method specs; an empty list is an error.
inline std::vector<MethodSpec> parse_method_list(const std::string& list, int default_sos_degree = 2) {
  std::vector<MethodSpec> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_method(item.substr(b, e - b + 1), default_sos_degree));
  }
  if (out.empty()) throw ValidationError("no methods given");
  return out;
}

inline RiskReport run_assess(const Scenario& s, const std::vector<MethodSpec>& methods, const EngineOptions& opt = {}) {
  if (methods.empty()) throw ValidationError("no methods given");
  RiskReport rep;
  rep.horizon = s.horizon();
  rep.options = opt;
  for (const auto& m : methods) {
    MethodReport mr;
    mr.method = m;
    std::vector<TrajectoryRisk> totals;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& a : s.agents) {
      AgentRisk r = assess_agent(a, s.ego_trajectory, s.ellipsoid, m, opt);
      for (const auto& mg : r.risk.marginals)
        if (!(mg.mixed >= -1e-12 && mg.mixed <= 1.0 + 1e-12))
          throw NumericalError("agent '" + a.id + "' step " + std::to_string(mg.t) + ": " + m.name() +
                               " produced " + std::to_string(mg.mixed) + ", outside [0, 1]");
      totals.push_back(r.risk);
      mr.agents.push_back({a.id, std::move(r.risk), r.mc_trajectory});
    }
    mr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    mr.multi_agent_bound = multi_agent_bound(totals);
    rep.methods.push_back(std::move(mr));
  }
  return rep;
}

inline Json report_to_json(const RiskReport& r) {
  Json methods = Json::array();
  for (const auto& m : r.methods) {
    Json agents = Json::array();
    for (const auto& a : m.agents) {
      Json steps = Json::array();
      for (const auto& mg : a.risk.marginals) {
        Json modes = Json::array();
        for (const auto& pm : mg.per_mode) modes.push_back({{"weight", pm.weight}, {"value", pm.value}});
        Json js{{"t", mg.t}, {"value", mg.mixed}, {"per_mode", modes}};
        if (mg.std_error) js["std_error"] = *mg.std_error;
        steps.push_back(js);
      }
      Json ja{{"id", a.id}, {"total", a.risk.total}, {"steps", steps}};
      if (a.mc_trajectory)
        ja["mc_trajectory"] = {{"probability", a.mc_trajectory->probability},
                               {"std_error", a.mc_trajectory->std_error},
                               {"samples", a.mc_trajectory->samples},
                               {"seed", a.mc_trajectory->seed}};
      agents.push_back(ja);
    }
    methods.push_back({{"method", m.method.name()},
                       {"is_upper_bound", m.method.is_upper_bound()},
                       {"seconds", m.seconds},
                       {"multi_agent_bound", m.multi_agent_bound},
                       {"agents", agents}});
  }
  return {{"horizon", r.horizon},
          {"options",
           {{"tol", r.options.tol},
            {"halfspaces", r.options.halfspaces},
            {"mc_samples", r.options.mc_samples},
            {"seed", r.options.seed}}},
          {"methods", methods}};
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// One row per agent, step and method.
inline std::string report_to_csv(const RiskReport& r) {
  std::ostringstream os;
  os << "agent,t,method,value,is_upper_bound,std_error\n";
  for (const auto& m : r.methods)
    for (const auto& a : m.agents)
      for (const auto& mg : a.risk.marginals)
        os << a.id << ',' << mg.t << ',' << m.method.name() << ',' << detail::fmt_double(mg.mixed) << ','
           << (m.method.is_upper_bound() ? "true" : "false") << ','
           << (mg.std_error ? detail::fmt_double(*mg.std_error) : "") << '\n';
  return os.str();
}

/// Trajectory risk per agent and method, then timing and the largest
/// per-step deviation from the first method listed.
inline std::string report_to_table(const RiskReport& r) {
  std::ostringstream os;
  os << std::fixed;
  const int w = 22;
  os << std::left << std::setw(w) << "agent";
  for (const auto& m : r.methods) os << std::right << std::setw(w) << m.method.name();
  os << "\n";
  const std::size_t n_agents = r.methods.empty() ? 0 : r.methods.front().agents.size();
  for (std::size_t i = 0; i < n_agents; ++i) {
    os << std::left << std::setw(w) << r.methods.front().agents[i].id;
    for (const auto& m : r.methods) os << std::right << std::setw(w) << std::setprecision(6) << m.agents[i].risk.total;
    os << "\n";
  }
  os << std::left << std::setw(w) << "union over agents";
  for (const auto& m : r.methods) os << std::right << std::setw(w) << std::setprecision(6) << m.multi_agent_bound;
  os << "\n\n";
  os << std::left << std::setw(w) << "method" << std::right << std::setw(14) << "time [ms]" << std::setw(14)
     << "bound" << "  max |d| vs " << (r.methods.empty() ? "" : r.methods.front().method.name()) << "\n";
  for (const auto& m : r.methods) {
    double dev = 0.0;
    for (std::size_t i = 0; i < n_agents; ++i)
      for (std::size_t t = 0; t < m.agents[i].risk.marginals.size(); ++t)
        dev = std::max(dev, std::abs(m.agents[i].risk.marginals[t].mixed -
                                     r.methods.front().agents[i].risk.marginals[t].mixed));
    os << std::left << std::setw(w) << m.method.name() << std::right << std::setw(14) << std::setprecision(3)
       << 1e3 * m.seconds << std::setw(14) << (m.method.is_upper_bound() ? "yes" : "no") << std::setw(14)
       << std::scientific << std::setprecision(3) << dev << std::fixed << "\n";
  }
  return os.str();
}

}  // namespace agentrisk
