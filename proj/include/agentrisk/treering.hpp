#pragma once

// Moment propagation through polynomial stochastic systems. Expanding a
// moment of the next state through the dynamics gives a polynomial in
// current moments; each monomial factors over the connected components of
// the dependence graph, and every factor that is neither externally known nor
// already tracked is expanded in turn until the set closes.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agentrisk/error.hpp"
#include "agentrisk/poly.hpp"

namespace agentrisk {

// Position moments of order n need tracked monomials up to degree 2n - 1.
inline constexpr int kMaxTrackedDegree = 24;

class DependenceGraph {
 public:
  DependenceGraph() = default;
  explicit DependenceGraph(int n_vertices) : adj_(static_cast<std::size_t>(n_vertices)) {}

  int size() const { return static_cast<int>(adj_.size()); }

  void add_vertex() { adj_.emplace_back(); }

  void add_edge(VarId a, VarId b) {
    detail::require(a >= 0 && b >= 0 && a < size() && b < size(), "edge between undeclared variables");
    detail::require(a != b, "dependence graph has no self-loops");
    adj_[a].insert(b);
    adj_[b].insert(a);
  }

  bool has_edge(VarId a, VarId b) const {
    return a >= 0 && a < size() && adj_[a].count(b) > 0;
  }

  std::vector<std::pair<VarId, VarId>> edges() const {
    std::vector<std::pair<VarId, VarId>> out;
    for (VarId a = 0; a < size(); ++a)
      for (VarId b : adj_[a])
        if (a < b) out.emplace_back(a, b);
    return out;
  }

  /// Connected components of the subgraph induced by the support of alpha,
  /// each as the restriction of alpha; ordered by smallest variable.
  std::vector<MultiIndex> components(const MultiIndex& alpha) const {
    std::vector<MultiIndex> out;
    std::set<VarId> unvisited;
    for (const auto& [v, e] : alpha.entries()) {
      detail::require(v < size(), "monomial uses an undeclared variable");
      unvisited.insert(v);
    }
    while (!unvisited.empty()) {
      std::set<VarId> comp;
      std::vector<VarId> stack{*unvisited.begin()};
      unvisited.erase(unvisited.begin());
      while (!stack.empty()) {
        const VarId u = stack.back();
        stack.pop_back();
        comp.insert(u);
        for (VarId w : adj_[u]) {
          auto it = unvisited.find(w);
          if (it != unvisited.end()) {
            unvisited.erase(it);
            stack.push_back(w);
          }
        }
      }
      out.push_back(alpha.restrict_to([&](VarId v) { return comp.count(v) > 0; }));
    }
    return out;
  }

 private:
  std::vector<std::set<VarId>> adj_;
};

inline std::vector<MultiIndex> factor_moment(const MultiIndex& alpha, const DependenceGraph& g) {
  detail::require(!alpha.is_zero(), "cannot factor the zero multi-index");
  return g.components(alpha);
}

/// b_{t+1,i} = g_i(b_t) for state variables; base variables are redrawn each
/// step. Known groups are variable sets whose joint moments at every step are
/// supplied from outside (base noise, or states with closed-form moments).
struct PolySystem {
  std::vector<std::string> names;
  std::map<VarId, Poly> updates;
  std::vector<std::vector<VarId>> known_groups;

  VarId declare(const std::string& name) {
    for (const auto& n : names) detail::require(n != name, "variable '" + name + "' declared twice");
    names.push_back(name);
    return static_cast<VarId>(names.size() - 1);
  }

  VarId id(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<VarId>(i);
    throw ValidationError("undeclared variable '" + name + "'");
  }

  Poly var(const std::string& name) const { return Poly::var(id(name)); }

  void set_update(VarId v, Poly p) {
    check_declared(v);
    for (const auto& [m, c] : p.terms())
      for (const auto& [u, e] : m.entries()) check_declared(u);
    updates[v] = std::move(p);
  }

  void add_known_group(std::vector<VarId> group) {
    for (VarId v : group) check_declared(v);
    std::sort(group.begin(), group.end());
    known_groups.push_back(std::move(group));
  }

  bool is_known(const MultiIndex& m) const {
    if (m.is_zero()) return true;
    for (const auto& g : known_groups) {
      bool inside = true;
      for (const auto& [v, e] : m.entries())
        if (!std::binary_search(g.begin(), g.end(), v)) {
          inside = false;
          break;
        }
      if (inside) return true;
    }
    return false;
  }

  void check_declared(VarId v) const {
    if (v < 0 || v >= static_cast<VarId>(names.size()))
      throw ValidationError("variable id " + std::to_string(v) + " is not declared");
  }
};

/// prod_i g_i(b)^{xi_i}, fully expanded. Variables without an update (base
/// noise) cannot appear in xi.
inline Poly substitute_dynamics(const MultiIndex& xi, const PolySystem& sys) {
  Poly out(1.0);
  for (const auto& [v, e] : xi.entries()) {
    sys.check_declared(v);
    const auto it = sys.updates.find(v);
    if (it == sys.updates.end())
      throw ValidationError("variable '" + sys.names[v] + "' has no update equation");
    out *= it->second.pow(e);
  }
  return out;
}

struct MomentDynamics;

/// Moment values E[b^xi] at one time, for every tracked xi.
class MomentState {
 public:
  MomentState() = default;
  MomentState(std::shared_ptr<const std::map<MultiIndex, int>> index, std::vector<double> values)
      : index_(std::move(index)), values_(std::move(values)) {}

  double at(const MultiIndex& xi) const {
    if (xi.is_zero()) return 1.0;
    const auto it = index_->find(xi);
    if (it == index_->end()) throw ValidationError("moment is not tracked");
    return values_[static_cast<std::size_t>(it->second)];
  }
  bool has(const MultiIndex& xi) const { return xi.is_zero() || index_->count(xi) > 0; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::shared_ptr<const std::map<MultiIndex, int>> index_;
  std::vector<double> values_;
};

/// Returns E[b_t^alpha] for a known-group monomial alpha at step t.
using KnownMomentFn = std::function<double(int t, const MultiIndex& alpha)>;

struct MomentDynamics {
  struct Factor {
    bool known = false;
    int index = 0;  // into tracked or known
  };
  struct Term {
    double coef = 0.0;
    std::vector<Factor> factors;
  };

  std::vector<std::string> names;
  std::vector<MultiIndex> tracked;          // graded-lex order
  std::map<MultiIndex, Poly> expressions;   // xi -> E[b_{t+1}^xi] as a polynomial in b_t
  std::vector<MultiIndex> known;            // distinct known factors used by the expressions
  std::shared_ptr<const std::map<MultiIndex, int>> index;
  std::vector<std::vector<Term>> compiled;  // aligned with tracked
  DependenceGraph graph;

  std::size_t size() const { return tracked.size(); }
  bool contains(const MultiIndex& xi) const { return index->count(xi) > 0; }

  std::string symbol(const MultiIndex& m) const { return "E[" + m.to_string(names) + "]"; }

  /// One line per expression: E[xi]_{t+1} = sum of coef * E[factor]_t ...
  std::string dump() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < tracked.size(); ++i) {
      os << symbol(tracked[i]) << "_{t+1} =";
      bool first = true;
      for (const auto& [m, c] : expressions.at(tracked[i]).terms()) {
        const bool neg = c < 0;
        const double mag = neg ? -c : c;
        os << (first ? (neg ? " -" : " ") : (neg ? " - " : " + "));
        first = false;
        bool wrote = false;
        if (mag != 1.0 || m.is_zero()) {
          os << mag;
          wrote = true;
        }
        if (m.is_zero()) continue;
        for (const auto& f : graph.components(m)) {
          os << (wrote ? "*" : "") << symbol(f) << "_t";
          wrote = true;
        }
      }
      if (first) os << " 0";
      os << "\n";
    }
    return os.str();
  }
};

struct ExpandOptions {
  std::size_t max_tracked = 200000;
  int max_degree = kMaxTrackedDegree;
};

namespace detail {

inline void compile(MomentDynamics& dyn, const PolySystem& sys) {
  std::sort(dyn.tracked.begin(), dyn.tracked.end());
  auto index = std::make_shared<std::map<MultiIndex, int>>();
  for (std::size_t i = 0; i < dyn.tracked.size(); ++i) (*index)[dyn.tracked[i]] = static_cast<int>(i);
  dyn.index = index;
  std::map<MultiIndex, int> known_index;
  dyn.compiled.assign(dyn.tracked.size(), {});
  for (std::size_t i = 0; i < dyn.tracked.size(); ++i) {
    for (const auto& [m, c] : dyn.expressions.at(dyn.tracked[i]).terms()) {
      MomentDynamics::Term term{c, {}};
      if (!m.is_zero()) {
        for (const auto& f : dyn.graph.components(m)) {
          if (sys.is_known(f)) {
            auto [it, inserted] = known_index.emplace(f, static_cast<int>(dyn.known.size()));
            if (inserted) dyn.known.push_back(f);
            term.factors.push_back({true, it->second});
          } else {
            term.factors.push_back({false, index->at(f)});
          }
        }
      }
      dyn.compiled[i].push_back(std::move(term));
    }
  }
}

}  // namespace detail

/// Adds xi and every moment it transitively needs to (Z, F).
inline void expand(const MultiIndex& xi, const PolySystem& sys, const DependenceGraph& g,
                   std::set<MultiIndex>& z, std::map<MultiIndex, Poly>& f, const ExpandOptions& opt = {}) {
  std::vector<MultiIndex> work{xi};
  while (!work.empty()) {
    const MultiIndex cur = work.back();
    work.pop_back();
    if (z.count(cur)) continue;
    if (cur.degree() > opt.max_degree)
      throw ValidationError("tracked moment degree " + std::to_string(cur.degree()) + " exceeds cap " +
                            std::to_string(opt.max_degree));
    Poly p = substitute_dynamics(cur, sys);
    z.insert(cur);
    if (z.size() > opt.max_tracked)
      throw NumericalError("moment expansion exceeded " + std::to_string(opt.max_tracked) +
                           " tracked moments; the system does not close");
    for (const auto& [alpha, c] : p.terms()) {
      if (alpha.is_zero()) continue;
      for (const auto& comp : g.components(alpha))
        if (!sys.is_known(comp) && !z.count(comp)) work.push_back(comp);
    }
    f.emplace(cur, std::move(p));
  }
}

/// Closes the given target moments into a runnable MomentDynamics.
inline MomentDynamics derive_moments(const std::vector<MultiIndex>& targets, const PolySystem& sys,
                                     const DependenceGraph& g, const ExpandOptions& opt = {}) {
  detail::require(g.size() == static_cast<int>(sys.names.size()),
                  "dependence graph and system declare different variables");
  std::set<MultiIndex> z;
  MomentDynamics dyn;
  for (const auto& t : targets) {
    detail::require(!t.is_zero(), "target moment must be nonzero");
    detail::require(!sys.is_known(t), "target moment is already known");
    expand(t, sys, g, z, dyn.expressions, opt);
  }
  dyn.names = sys.names;
  dyn.graph = g;
  dyn.tracked.assign(z.begin(), z.end());
  detail::compile(dyn, sys);
  return dyn;
}

/// Position moments E[x^a y^b], 1 <= a + b <= order, for the variables
/// named "x" and "y".
inline std::vector<MultiIndex> position_targets(const PolySystem& sys, int order) {
  const VarId x = sys.id("x"), y = sys.id("y");
  std::vector<MultiIndex> out;
  for (int d = 1; d <= order; ++d)
    for (int b = 0; b <= d; ++b) out.push_back(MultiIndex{{x, d - b}, {y, b}});
  return out;
}

inline MomentDynamics derive_position_moments(const PolySystem& sys, const DependenceGraph& g, int order,
                                              const ExpandOptions& opt = {}) {
  detail::require(order >= 1, "moment order must be positive");
  return derive_moments(position_targets(sys, order), sys, g, opt);
}

/// Monomials in F whose factors are neither tracked nor known; empty when closed.
inline std::vector<MultiIndex> closure_violations(const MomentDynamics& dyn, const PolySystem& sys) {
  std::set<MultiIndex> bad;
  for (const auto& [xi, p] : dyn.expressions)
    for (const auto& [alpha, c] : p.terms()) {
      if (alpha.is_zero()) continue;
      for (const auto& comp : dyn.graph.components(alpha))
        if (!sys.is_known(comp) && !dyn.contains(comp)) bad.insert(comp);
    }
  return {bad.begin(), bad.end()};
}

/// State at t = 0 from a function giving each tracked moment.
inline MomentState initial_state(const MomentDynamics& dyn, const std::function<double(const MultiIndex&)>& moment) {
  std::vector<double> v(dyn.size());
  for (std::size_t i = 0; i < dyn.size(); ++i) v[i] = moment(dyn.tracked[i]);
  return {dyn.index, std::move(v)};
}

/// One step: evaluates every expression on state t and step-t known moments.
inline MomentState step(const MomentDynamics& dyn, const MomentState& cur, const std::vector<double>& known_values) {
  std::vector<double> next(dyn.size());
  const auto& vals = cur.values();
  for (std::size_t i = 0; i < dyn.size(); ++i) {
    double sum = 0.0;
    for (const auto& term : dyn.compiled[i]) {
      double v = term.coef;
      for (const auto& f : term.factors) v *= f.known ? known_values[f.index] : vals[f.index];
      sum += v;
    }
    next[i] = sum;
  }
  return {dyn.index, std::move(next)};
}

/// States for t = 0..T.
inline std::vector<MomentState> propagate(const MomentDynamics& dyn, const MomentState& init,
                                          const KnownMomentFn& known, int horizon) {
  detail::require(horizon >= 0, "horizon must be nonnegative");
  detail::require(init.values().size() == dyn.size(), "initial state does not cover the tracked moments");
  std::vector<MomentState> states{init};
  states.reserve(static_cast<std::size_t>(horizon) + 1);
  std::vector<double> kv(dyn.known.size());
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t k = 0; k < dyn.known.size(); ++k) kv[k] = known(t, dyn.known[k]);
    states.push_back(step(dyn, states.back(), kv));
  }
  return states;
}

}  // namespace agentrisk
