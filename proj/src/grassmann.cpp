#include "holang/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace holang::grassmann {

GeneratorId GeneratorId::make(Kind k, int channel, int slice) {
  if (channel < 1 || channel > 0x3FFF) throw std::invalid_argument("generator channel out of range");
  if (slice < 0 || slice > 0x3FFF) throw std::invalid_argument("generator slice out of range");
  GeneratorId g;
  g.code = (static_cast<std::uint32_t>(k) << 28) |
           (static_cast<std::uint32_t>(channel) << 14) |
           static_cast<std::uint32_t>(slice);
  return g;
}

std::string to_string(GeneratorId g) {
  std::string s = g.kind() == Kind::c ? "c" : "cbar";
  s += "(" + std::to_string(g.channel()) + "," + std::to_string(g.slice()) + ")";
  return s;
}

GrassmannPoly GrassmannPoly::scalar(double v) {
  GrassmannPoly p;
  p.add_term({}, v);
  return p;
}

GrassmannPoly GrassmannPoly::generator(GeneratorId g) {
  GrassmannPoly p;
  p.add_term({g.code}, 1.0);
  return p;
}

GrassmannPoly GrassmannPoly::term(double coeff, std::span<const GeneratorId> gens) {
  GrassmannPoly p = scalar(coeff);
  for (GeneratorId g : gens) p = multiply(p, generator(g));
  return p;
}

double GrassmannPoly::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double GrassmannPoly::scalar_part() const { return coeff({}); }

double GrassmannPoly::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

int GrassmannPoly::max_degree() const {
  int d = 0;
  for (const auto& [mono, c] : terms_) d = std::max(d, static_cast<int>(mono.size()));
  return d;
}

bool GrassmannPoly::is_homogeneous(int* degree) const {
  if (terms_.empty()) {
    if (degree) *degree = 0;
    return true;
  }
  const int d = static_cast<int>(terms_.begin()->first.size());
  for (const auto& [mono, c] : terms_) {
    if (static_cast<int>(mono.size()) != d) return false;
  }
  if (degree) *degree = d;
  return true;
}

void GrassmannPoly::add_term(Monomial m, double coeff) {
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(std::move(m), coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

GrassmannPoly& GrassmannPoly::operator+=(const GrassmannPoly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

GrassmannPoly& GrassmannPoly::operator-=(const GrassmannPoly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

GrassmannPoly& GrassmannPoly::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= s;
  return *this;
}

namespace {

// Merge two canonical monomials; returns false if a generator repeats.
// `sign` picks up (-1)^inversions from interleaving b into a.
bool merge_monomials(const Monomial& a, const Monomial& b, Monomial& out, int& sign) {
  out.clear();
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  int inversions = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return false;
    if (a[i] < b[j]) {
      out.push_back(a[i++]);
    } else {
      inversions += static_cast<int>(a.size() - i);
      out.push_back(b[j++]);
    }
  }
  while (i < a.size()) out.push_back(a[i++]);
  while (j < b.size()) out.push_back(b[j++]);
  sign = (inversions % 2 == 0) ? 1 : -1;
  return true;
}

}  // namespace

GrassmannPoly multiply(const GrassmannPoly& p, const GrassmannPoly& q) {
  GrassmannPoly out;
  Monomial merged;
  for (const auto& [mp, cp] : p.terms()) {
    for (const auto& [mq, cq] : q.terms()) {
      int sign;
      if (!merge_monomials(mp, mq, merged, sign)) continue;
      out.add_term(merged, sign * cp * cq);
    }
  }
  return out;
}

GrassmannPoly left_derivative(const GrassmannPoly& p, GeneratorId g) {
  GrassmannPoly out;
  for (const auto& [m, c] : p.terms()) {
    auto it = std::lower_bound(m.begin(), m.end(), g.code);
    if (it == m.end() || *it != g.code) continue;
    const auto pos = static_cast<int>(it - m.begin());
    Monomial rest;
    rest.reserve(m.size() - 1);
    rest.insert(rest.end(), m.begin(), it);
    rest.insert(rest.end(), it + 1, m.end());
    out.add_term(std::move(rest), (pos % 2 == 0 ? 1.0 : -1.0) * c);
  }
  return out;
}

StatePoly StatePoly::constant(GrassmannPoly p) {
  StatePoly sp;
  sp.value = [p = std::move(p)](State) { return p; };
  sp.partial = [](int, State) { return GrassmannPoly::zero(); };
  return sp;
}

namespace {

GrassmannPoly eval_coeff(const CoeffFn& f, const std::string& label, State s) {
  try {
    return f(s);
  } catch (const std::exception& e) {
    throw std::runtime_error("derivation entry '" + label + "' failed to evaluate: " + e.what());
  }
}

GrassmannPoly fd_partial(const std::function<GrassmannPoly(State)>& value, int var, State s) {
  std::vector<double> bumped(s.begin(), s.end());
  const double h = 1e-7 * std::max(1.0, std::abs(bumped[var]));
  bumped[var] += h;
  GrassmannPoly d = value(bumped);
  d -= value(s);
  d *= 1.0 / h;
  return d;
}

GrassmannPoly poly_partial(const StatePoly& p, int var, State s) {
  if (p.partial) return p.partial(var, s);
  return fd_partial(p.value, var, s);
}

}  // namespace

GrassmannPoly apply_derivation(const Derivation& D, const StatePoly& p, State state) {
  GrassmannPoly out;
  const GrassmannPoly pv = p.value(state);
  for (const auto& e : D.generator_entries) {
    const GrassmannPoly c = eval_coeff(e.coeff, e.label, state);
    if (c.is_zero()) continue;
    out += multiply(c, left_derivative(pv, e.g));
  }
  for (const auto& e : D.variable_entries) {
    const GrassmannPoly c = eval_coeff(e.coeff, e.label, state);
    if (c.is_zero()) continue;
    out += multiply(c, poly_partial(p, e.var, state));
  }
  return out;
}

GrassmannPoly apply_derivation(const Derivation& D, const GrassmannPoly& p, State state) {
  return apply_derivation(D, StatePoly::constant(p), state);
}

GrassmannPoly compose_square(const Derivation& D, const StatePoly& p, State state) {
  StatePoly inner;
  inner.value = [&D, &p](State s) { return apply_derivation(D, p, s); };
  // d/dx_v of D(p), dropping second partials of p (valid for p at most
  // linear in the state).
  inner.partial = [&D, &p](int var, State s) {
    GrassmannPoly out;
    for (const auto& e : D.generator_entries) {
      if (e.coeff_partial) {
        out += multiply(e.coeff_partial(var, s), left_derivative(p.value(s), e.g));
      }
      const GrassmannPoly c = eval_coeff(e.coeff, e.label, s);
      if (!c.is_zero()) out += multiply(c, left_derivative(poly_partial(p, var, s), e.g));
    }
    for (const auto& e : D.variable_entries) {
      if (e.coeff_partial) {
        out += multiply(e.coeff_partial(var, s), poly_partial(p, e.var, s));
      }
    }
    return out;
  };
  return apply_derivation(D, inner, state);
}

GrassmannPoly compose_square(const Derivation& D, const GrassmannPoly& p, State state) {
  return compose_square(D, StatePoly::constant(p), state);
}

}  // namespace holang::grassmann
