#pragma once

// Finite-dimensional exterior algebra with numeric coefficients, plus graded
// derivations. Generators are the fermion symbols c_{n,i} and cbar_{n,i}
// attached to a channel n and a time slice i.
//
// Convention fixed here once and used everywhere:
//  - generator order: kind (c before cbar), then channel, then slice;
//  - monomials are stored in that canonical order, signs absorbed into the
//    coefficient (sign = parity of the sorting permutation);
//  - derivatives are left derivatives: anticommute the generator to the
//    front, pick up the sign, delete it.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace holang::grassmann {

enum class Kind : std::uint32_t { c = 0, cbar = 1 };

struct GeneratorId {
  std::uint32_t code = 0;  // kind<<28 | channel<<14 | slice

  static GeneratorId make(Kind k, int channel, int slice);
  static GeneratorId c(int channel, int slice) { return make(Kind::c, channel, slice); }
  static GeneratorId cbar(int channel, int slice) { return make(Kind::cbar, channel, slice); }

  Kind kind() const { return static_cast<Kind>(code >> 28); }
  int channel() const { return static_cast<int>((code >> 14) & 0x3FFFu); }
  int slice() const { return static_cast<int>(code & 0x3FFFu); }

  auto operator<=>(const GeneratorId&) const = default;
};

std::string to_string(GeneratorId g);

// Canonically ordered monomial: strictly increasing generator codes.
using Monomial = std::vector<std::uint32_t>;

class GrassmannPoly {
 public:
  GrassmannPoly() = default;

  static GrassmannPoly zero() { return {}; }
  static GrassmannPoly scalar(double v);
  static GrassmannPoly generator(GeneratorId g);
  // term = coefficient * product of generators in the given order
  // (sign from reordering absorbed automatically).
  static GrassmannPoly term(double coeff, std::span<const GeneratorId> gens);

  bool is_zero() const { return terms_.empty(); }
  const std::map<Monomial, double>& terms() const { return terms_; }
  double coeff(const Monomial& m) const;
  double scalar_part() const;
  double max_abs_coeff() const;
  int max_degree() const;
  bool is_homogeneous(int* degree = nullptr) const;

  GrassmannPoly& operator+=(const GrassmannPoly& o);
  GrassmannPoly& operator-=(const GrassmannPoly& o);
  GrassmannPoly& operator*=(double s);
  friend GrassmannPoly operator+(GrassmannPoly a, const GrassmannPoly& b) { return a += b; }
  friend GrassmannPoly operator-(GrassmannPoly a, const GrassmannPoly& b) { return a -= b; }
  friend GrassmannPoly operator*(GrassmannPoly a, double s) { return a *= s; }
  friend GrassmannPoly operator*(double s, GrassmannPoly a) { return a *= s; }

  void add_term(Monomial m, double coeff);  // m must be canonical

 private:
  std::map<Monomial, double> terms_;  // zero coefficients pruned
};

// Graded-antisymmetric product. Repeated generators annihilate the term.
GrassmannPoly multiply(const GrassmannPoly& p, const GrassmannPoly& q);
inline GrassmannPoly operator*(const GrassmannPoly& p, const GrassmannPoly& q) {
  return multiply(p, q);
}

// Left Grassmann derivative with respect to g.
GrassmannPoly left_derivative(const GrassmannPoly& p, GeneratorId g);

// ---------------------------------------------------------------------------
// Derivations over the algebra tensored with functions of a bosonic state.

using State = std::span<const double>;
using CoeffFn = std::function<GrassmannPoly(State)>;
using CoeffPartialFn = std::function<GrassmannPoly(int var, State)>;

// D = sum_g coeff_g(state) * d/dg  +  sum_v coeff_v(state) * d/dx_v
// acting as a graded left derivation. coeff_partial entries are the exact
// state-derivatives of the coefficients (null means identically zero).
struct Derivation {
  struct GeneratorEntry {
    GeneratorId g;
    std::string label;
    CoeffFn coeff;
    CoeffPartialFn coeff_partial;
  };
  struct VariableEntry {
    int var;
    std::string label;
    CoeffFn coeff;
    CoeffPartialFn coeff_partial;
  };
  std::vector<GeneratorEntry> generator_entries;
  std::vector<VariableEntry> variable_entries;
};

// A Grassmann polynomial whose coefficients depend on the bosonic state.
// `partial` returns the exact d/dx_var; when null, apply_derivation falls
// back to a forward finite difference of `value`.
struct StatePoly {
  std::function<GrassmannPoly(State)> value;
  std::function<GrassmannPoly(int var, State)> partial;

  static StatePoly constant(GrassmannPoly p);
};

GrassmannPoly apply_derivation(const Derivation& D, const StatePoly& p, State state);
GrassmannPoly apply_derivation(const Derivation& D, const GrassmannPoly& p, State state);

// D(D(p)). Exact as long as p's coefficients are at most linear in the
// state (all uses in this project are), otherwise the neglected second
// partials of p would enter.
GrassmannPoly compose_square(const Derivation& D, const StatePoly& p, State state);
GrassmannPoly compose_square(const Derivation& D, const GrassmannPoly& p, State state);

}  // namespace holang::grassmann
