#pragma once

// Scenario files: the planned ego trajectory, the collision ellipse and each
// agent's prediction, as JSON.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "agentrisk/risk_engine.hpp"

namespace agentrisk {

using Json = nlohmann::json;

struct Scenario {
  std::vector<EgoPose> ego_trajectory;
  Ellipsoid ellipsoid = Ellipsoid::identity();
  std::vector<AgentPrediction> agents;

  int horizon() const { return static_cast<int>(ego_trajectory.size()); }
};

namespace detail {

// Prefixes any validation failure with where it happened.
template <class F>
auto at_path(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  } catch (const Json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline const Json& field(const Json& obj, const char* key) {
  if (!obj.is_object()) throw ValidationError("expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

inline double number(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(std::string("field '") + key + "' must be finite");
  return d;
}

inline const Json& array(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_array()) throw ValidationError(std::string("field '") + key + "' must be an array");
  return v;
}

inline Vec2 vec2(const Json& v) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ValidationError("expected a 2-vector of numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline Mat2 mat2(const Json& v) {
  if (!v.is_array() || v.size() != 2) throw ValidationError("expected a 2x2 matrix");
  Mat2 m;
  m.row(0) = vec2(v[0]).transpose();
  m.row(1) = vec2(v[1]).transpose();
  return m;
}

inline ScalarMixture scalar_modes(const Json& modes) {
  if (!modes.is_array() || modes.empty()) throw ValidationError("expected a nonempty array of modes");
  std::vector<ScalarComponent> comps;
  std::vector<double> weights;
  for (std::size_t k = 0; k < modes.size(); ++k)
    at_path("mode " + std::to_string(k), [&] {
      weights.push_back(number(modes[k], "weight"));
      comps.push_back(ScalarComponent::gaussian(number(modes[k], "mean"), number(modes[k], "var")));
    });
  return {comps, weights};
}

inline Json scalar_modes_json(const ScalarMixture& m) {
  Json out = Json::array();
  for (std::size_t k = 0; k < m.size(); ++k)
    out.push_back({{"weight", m.weights()[k]}, {"mean", m.components()[k].mean}, {"var", m.components()[k].variance}});
  return out;
}

inline AgentPrediction parse_agent(const Json& a, std::size_t index) {
  AgentPrediction agent;
  agent.id = a.is_object() && a.contains("id") && a["id"].is_string() ? a["id"].get<std::string>()
                                                                       : "agent" + std::to_string(index);
  const std::string where = "agent '" + agent.id + "'";
  at_path(where, [&] {
    const Json& form = field(a, "form");
    if (!form.is_string()) throw ValidationError("field 'form' must be a string");
    const Json& steps = array(a, "steps");
    if (steps.empty()) throw ValidationError("prediction has no steps");
    if (form == "gmm_position") {
      PositionPrediction p;
      if (a.contains("mode_persistence")) {
        if (!a["mode_persistence"].is_boolean()) throw ValidationError("field 'mode_persistence' must be a boolean");
        p.mode_persistence = a["mode_persistence"].get<bool>();
      }
      for (std::size_t t = 0; t < steps.size(); ++t)
        at_path("step " + std::to_string(t), [&] {
          const Json& modes = array(steps[t], "modes");
          if (modes.empty()) throw ValidationError("step has no modes");
          std::vector<Gaussian2D> comps;
          std::vector<double> weights;
          for (std::size_t k = 0; k < modes.size(); ++k)
            at_path("mode " + std::to_string(k), [&] {
              weights.push_back(number(modes[k], "weight"));
              comps.emplace_back(at_path("mean", [&] { return vec2(field(modes[k], "mean")); }),
                                 at_path("cov", [&] { return mat2(field(modes[k], "cov")); }));
            });
          p.steps.emplace_back(comps, weights);
        });
      if (p.mode_persistence)
        for (std::size_t t = 1; t < p.steps.size(); ++t)
          if (p.steps[t].weights() != p.steps[0].weights())
            throw ValidationError("step " + std::to_string(t) +
                                  ": persistent modes need identical weights at every step");
      agent.form = std::move(p);
    } else if (form == "gmm_control") {
      ControlPrediction c;
      const Json& init = at_path("initial_state", [&]() -> const Json& { return field(a, "initial_state"); });
      at_path("initial_state", [&] {
        c.initial = {number(init, "x"), number(init, "y"), number(init, "v"), number(init, "theta")};
      });
      for (std::size_t t = 0; t < steps.size(); ++t)
        at_path("step " + std::to_string(t), [&] {
          c.w_v.push_back(at_path("w_v_modes", [&] { return scalar_modes(field(steps[t], "w_v_modes")); }));
          c.w_theta.push_back(at_path("w_theta_modes", [&] { return scalar_modes(field(steps[t], "w_theta_modes")); }));
        });
      agent.form = std::move(c);
    } else {
      throw ValidationError("unknown form '" + form.get<std::string>() + "' (expected gmm_position or gmm_control)");
    }
  });
  return agent;
}

}  // namespace detail

inline Scenario parse_scenario(const Json& j) {
  Scenario s;
  const Json& ego = detail::at_path("scenario", [&]() -> const Json& { return detail::array(j, "ego_trajectory"); });
  if (ego.empty()) throw ValidationError("ego_trajectory: needs at least one pose");
  for (std::size_t t = 0; t < ego.size(); ++t)
    detail::at_path("ego_trajectory step " + std::to_string(t), [&] {
      s.ego_trajectory.push_back({{detail::number(ego[t], "x"), detail::number(ego[t], "y")},
                                  detail::number(ego[t], "theta")});
    });
  s.ellipsoid = detail::at_path("ellipsoid", [&] { return Ellipsoid(detail::mat2(detail::field(detail::field(j, "ellipsoid"), "q"))); });
  const Json& agents = detail::at_path("scenario", [&]() -> const Json& { return detail::array(j, "agents"); });
  for (std::size_t i = 0; i < agents.size(); ++i) {
    s.agents.push_back(detail::parse_agent(agents[i], i));
    if (s.agents.back().horizon() != s.horizon())
      throw ValidationError("agent '" + s.agents.back().id + "': horizon " + std::to_string(s.agents.back().horizon()) +
                            " differs from ego trajectory length " + std::to_string(s.horizon()));
    for (std::size_t k = 0; k < i; ++k)
      if (s.agents[k].id == s.agents.back().id)
        throw ValidationError("agent '" + s.agents.back().id + "' appears twice");
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return detail::at_path(path, [&] { return parse_scenario(j); });
}

inline Json scenario_to_json(const Scenario& s) {
  Json ego = Json::array();
  for (const auto& p : s.ego_trajectory) ego.push_back({{"x", p.position.x()}, {"y", p.position.y()}, {"theta", p.theta}});
  const Mat2& q = s.ellipsoid.matrix();
  Json agents = Json::array();
  for (const auto& a : s.agents) {
    Json ja{{"id", a.id}};
    if (const auto* p = std::get_if<PositionPrediction>(&a.form)) {
      ja["form"] = "gmm_position";
      ja["mode_persistence"] = p->mode_persistence;
      Json steps = Json::array();
      for (const auto& st : p->steps) {
        Json modes = Json::array();
        for (std::size_t k = 0; k < st.size(); ++k) {
          const auto& g = st.components()[k];
          const Mat2& c = g.covariance();
          modes.push_back({{"weight", st.weights()[k]},
                           {"mean", {g.mean().x(), g.mean().y()}},
                           {"cov", {{c(0, 0), c(0, 1)}, {c(1, 0), c(1, 1)}}}});
        }
        steps.push_back({{"modes", modes}});
      }
      ja["steps"] = steps;
    } else {
      const auto& c = std::get<ControlPrediction>(a.form);
      ja["form"] = "gmm_control";
      ja["initial_state"] = {{"x", c.initial.x}, {"y", c.initial.y}, {"v", c.initial.v}, {"theta", c.initial.theta}};
      Json steps = Json::array();
      for (int t = 0; t < c.steps(); ++t)
        steps.push_back({{"w_v_modes", detail::scalar_modes_json(c.w_v[t])},
                         {"w_theta_modes", detail::scalar_modes_json(c.w_theta[t])}});
      ja["steps"] = steps;
    }
    agents.push_back(ja);
  }
  return {{"ego_trajectory", ego}, {"ellipsoid", {{"q", {{q(0, 0), q(0, 1)}, {q(1, 0), q(1, 1)}}}}}, {"agents", agents}};
}

inline void write_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write scenario file '" + path + "'");
  out << scenario_to_json(s).dump(2) << "\n";
}

}  // namespace agentrisk
