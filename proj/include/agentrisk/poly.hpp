#pragma once

// Sparse multivariate polynomials over a fixed, registered variable order.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agentrisk/error.hpp"

namespace agentrisk {

using VarId = int;

/// Exponent vector stored sparsely as sorted (variable, exponent) pairs
/// with no zero exponents.
class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(std::initializer_list<std::pair<VarId, int>> entries) {
    for (const auto& [v, e] : entries) set(v, exponent(v) + e);
  }

  static MultiIndex var(VarId v, int power = 1) {
    MultiIndex m;
    m.set(v, power);
    return m;
  }

  int exponent(VarId v) const {
    const auto it = find(v);
    return it != entries_.end() && it->first == v ? it->second : 0;
  }

  void set(VarId v, int e) {
    detail::require(v >= 0, "variable id must be nonnegative");
    detail::require(e >= 0, "exponents must be nonnegative");
    auto it = find(v);
    if (it != entries_.end() && it->first == v) {
      if (e == 0)
        entries_.erase(it);
      else
        it->second = e;
    } else if (e != 0) {
      entries_.insert(it, {v, e});
    }
  }

  int degree() const {
    int d = 0;
    for (const auto& [v, e] : entries_) d += e;
    return d;
  }

  bool is_zero() const { return entries_.empty(); }
  const std::vector<std::pair<VarId, int>>& entries() const { return entries_; }

  MultiIndex operator*(const MultiIndex& o) const {
    MultiIndex out;
    out.entries_.reserve(entries_.size() + o.entries_.size());
    auto a = entries_.begin(), b = o.entries_.begin();
    while (a != entries_.end() || b != o.entries_.end()) {
      if (b == o.entries_.end() || (a != entries_.end() && a->first < b->first)) {
        out.entries_.push_back(*a++);
      } else if (a == entries_.end() || b->first < a->first) {
        out.entries_.push_back(*b++);
      } else {
        out.entries_.emplace_back(a->first, a->second + b->second);
        ++a;
        ++b;
      }
    }
    return out;
  }

  /// Restriction to a subset of variables.
  template <class Pred>
  MultiIndex restrict_to(Pred&& keep) const {
    MultiIndex out;
    for (const auto& e : entries_)
      if (keep(e.first)) out.entries_.push_back(e);
    return out;
  }

  bool operator==(const MultiIndex& o) const { return entries_ == o.entries_; }

  /// Graded lexicographic: lower total degree first; within a degree, larger
  /// exponents of earlier variables first (x^2 < xy < y^2).
  bool operator<(const MultiIndex& o) const {
    const int da = degree(), db = o.degree();
    if (da != db) return da < db;
    auto a = entries_.begin(), b = o.entries_.begin();
    for (; a != entries_.end() && b != o.entries_.end(); ++a, ++b) {
      if (a->first != b->first) return a->first < b->first;
      if (a->second != b->second) return a->second > b->second;
    }
    return false;  // equal degree and equal prefix means equal
  }

  std::string to_string(const std::vector<std::string>& names) const {
    if (entries_.empty()) return "1";
    std::string s;
    for (const auto& [v, e] : entries_) {
      if (!s.empty()) s += "*";
      s += v < static_cast<VarId>(names.size()) ? names[static_cast<std::size_t>(v)] : "b" + std::to_string(v);
      if (e > 1) s += "^" + std::to_string(e);
    }
    return s;
  }

 private:
  std::vector<std::pair<VarId, int>>::iterator find(VarId v) {
    return std::lower_bound(entries_.begin(), entries_.end(), v,
                            [](const auto& p, VarId id) { return p.first < id; });
  }
  std::vector<std::pair<VarId, int>>::const_iterator find(VarId v) const {
    return std::lower_bound(entries_.begin(), entries_.end(), v,
                            [](const auto& p, VarId id) { return p.first < id; });
  }

  std::vector<std::pair<VarId, int>> entries_;
};

template <class Coeff>
class BasicPoly {
 public:
  using Terms = std::map<MultiIndex, Coeff>;

  BasicPoly() = default;
  BasicPoly(Coeff constant) {  // NOLINT(google-explicit-constructor)
    if (constant != Coeff(0)) terms_[MultiIndex()] = constant;
  }

  static BasicPoly var(VarId v) { return monomial(MultiIndex::var(v), Coeff(1)); }
  static BasicPoly monomial(const MultiIndex& m, Coeff c) {
    BasicPoly p;
    if (c != Coeff(0)) p.terms_[m] = c;
    return p;
  }

  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  void add_term(const MultiIndex& m, Coeff c) {
    if (c == Coeff(0)) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == Coeff(0)) terms_.erase(it);
    }
  }

  BasicPoly& operator+=(const BasicPoly& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  BasicPoly& operator-=(const BasicPoly& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  friend BasicPoly operator+(BasicPoly a, const BasicPoly& b) { return a += b; }
  friend BasicPoly operator-(BasicPoly a, const BasicPoly& b) { return a -= b; }
  friend BasicPoly operator-(const BasicPoly& a) { return BasicPoly() - a; }

  friend BasicPoly operator*(const BasicPoly& a, const BasicPoly& b) {
    BasicPoly out;
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
    return out;
  }
  BasicPoly& operator*=(const BasicPoly& o) { return *this = *this * o; }

  BasicPoly pow(int n) const {
    detail::require(n >= 0, "polynomial power must be nonnegative");
    BasicPoly result(Coeff(1)), base = *this;
    while (n > 0) {
      if (n & 1) result *= base;
      n >>= 1;
      if (n > 0) base *= base;
    }
    return result;
  }

  bool operator==(const BasicPoly& o) const { return terms_ == o.terms_; }

  std::string to_string(const std::vector<std::string>& names) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
      const bool neg = c < Coeff(0);
      const Coeff mag = neg ? -c : c;
      os << (first ? (neg ? "-" : "") : (neg ? " - " : " + "));
      if (m.is_zero())
        os << mag;
      else if (mag == Coeff(1))
        os << m.to_string(names);
      else
        os << mag << "*" << m.to_string(names);
      first = false;
    }
    return os.str();
  }

 private:
  Terms terms_;
};

using Poly = BasicPoly<double>;

}  // namespace agentrisk
