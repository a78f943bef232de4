#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "holang/grassmann.hpp"
#include "holang/rng.hpp"

using namespace holang;
using grassmann::GeneratorId;
using grassmann::GrassmannPoly;

namespace {

GrassmannPoly gen(GeneratorId g) { return GrassmannPoly::generator(g); }

// Random polynomial with small-integer coefficients (so products and sums
// stay exact in double arithmetic).
GrassmannPoly random_int_poly(const std::vector<GeneratorId>& universe, int n_terms,
                              int max_degree, rng::NormalStream& st, bool homogeneous = false,
                              int degree = -1) {
  GrassmannPoly p;
  for (int t = 0; t < n_terms; ++t) {
    const int deg = homogeneous ? degree : static_cast<int>(st.next_u64() % (max_degree + 1));
    std::vector<GeneratorId> gens;
    int guard = 0;
    while (static_cast<int>(gens.size()) < deg && guard++ < 100) {
      const auto g = universe[st.next_u64() % universe.size()];
      bool dup = false;
      for (auto h : gens) dup = dup || h.code == g.code;
      if (!dup) gens.push_back(g);
    }
    const double coeff = static_cast<double>(static_cast<int>(st.next_u64() % 9) - 4);
    p += GrassmannPoly::term(coeff, gens);
  }
  return p;
}

std::vector<GeneratorId> small_universe(int N, int M) {
  std::vector<GeneratorId> u;
  for (int n = 1; n <= N; ++n) {
    for (int i = 1; i <= M; ++i) {
      u.push_back(GeneratorId::c(n, i));
      u.push_back(GeneratorId::cbar(n, i));
    }
  }
  return u;
}

}  // namespace

TEST_CASE("generator ordering is kind, channel, slice") {
  CHECK(GeneratorId::c(1, 5) < GeneratorId::c(2, 0));
  CHECK(GeneratorId::c(3, 9) < GeneratorId::cbar(1, 0));
  CHECK(GeneratorId::cbar(1, 0) < GeneratorId::cbar(1, 1));
}

TEST_CASE("multiply basics") {
  const auto c1 = gen(GeneratorId::c(1, 1));
  const auto c2 = gen(GeneratorId::c(2, 1));

  CHECK(multiply(c1, c1).is_zero());
  CHECK((multiply(c1, c2) + multiply(c2, c1)).is_zero());

  // (1 + cbar1 c1)(1 + cbar2 c2) = 1 + cbar1 c1 + cbar2 c2 + cbar1 c1 cbar2 c2
  const auto cb1 = gen(GeneratorId::cbar(1, 1));
  const auto cb2 = gen(GeneratorId::cbar(2, 1));
  const auto one = GrassmannPoly::scalar(1.0);
  const auto lhs = multiply(one + multiply(cb1, c1), one + multiply(cb2, c2));
  GrassmannPoly rhs = one + multiply(cb1, c1) + multiply(cb2, c2) +
                      multiply(multiply(cb1, c1), multiply(cb2, c2));
  GrassmannPoly diff = lhs - rhs;
  CHECK(diff.is_zero());
  CHECK(lhs.terms().size() == 4);
}

TEST_CASE("left derivative examples") {
  const auto g1 = GeneratorId::c(1, 1);
  const auto g2 = GeneratorId::c(2, 1);
  const auto g3 = GeneratorId::c(3, 1);
  // d/dc1 (c1 c2) = c2
  auto p = multiply(gen(g1), gen(g2));
  CHECK((left_derivative(p, g1) - gen(g2)).is_zero());
  // d/dc1 (c2 c1) = -c2
  auto q = multiply(gen(g2), gen(g1));
  CHECK((left_derivative(q, g1) + gen(g2)).is_zero());
  // absent generator
  CHECK(left_derivative(multiply(gen(g2), gen(g3)), g1).is_zero());
}

TEST_CASE("multiply is associative (exact, integer coefficients)") {
  const auto universe = small_universe(2, 3);
  rng::NormalStream st(11, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = random_int_poly(universe, 3, 3, st);
    const auto q = random_int_poly(universe, 3, 3, st);
    const auto r = random_int_poly(universe, 3, 3, st);
    const auto lhs = multiply(multiply(p, q), r);
    const auto rhs = multiply(p, multiply(q, r));
    CHECK((lhs - rhs).is_zero());
  }
}

// For homogeneous p the square is even-degree (trivially 2 deg p), and odd
// homogeneous p squares to zero. The unrestricted statement fails already
// for p = 1 + c, whose square is 1 + 2c.
TEST_CASE("homogeneous squares: even degree, odd degree annihilates") {
  const auto universe = small_universe(2, 3);
  rng::NormalStream st(12, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const int deg = static_cast<int>(st.next_u64() % 4);
    const auto p = random_int_poly(universe, 4, 0, st, true, deg);
    const auto pp = multiply(p, p);
    for (const auto& [m, c] : pp.terms()) CHECK(m.size() % 2 == 0);
    if (deg % 2 == 1) CHECK(pp.is_zero());
  }
  const auto c1 = gen(GeneratorId::c(1, 1));
  const auto mixed = GrassmannPoly::scalar(1.0) + c1;
  const auto sq = multiply(mixed, mixed);
  CHECK(sq.max_degree() == 1);  // 1 + 2c: the unrestricted claim is false
}

TEST_CASE("graded Leibniz rule for the left derivative") {
  const auto universe = small_universe(2, 3);
  rng::NormalStream st(13, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const int dp = static_cast<int>(st.next_u64() % 4);
    const auto p = random_int_poly(universe, 3, 0, st, true, dp);
    const auto q = random_int_poly(universe, 3, 3, st);
    const auto g = universe[st.next_u64() % universe.size()];
    const auto lhs = left_derivative(multiply(p, q), g);
    GrassmannPoly rhs = multiply(left_derivative(p, g), q);
    const double sgn = dp % 2 == 0 ? 1.0 : -1.0;
    rhs += sgn * multiply(p, left_derivative(q, g));
    CHECK((lhs - rhs).is_zero());
  }
}

TEST_CASE("apply_derivation basics") {
  using grassmann::Derivation;
  // D = d/dcbar(1,1) applied to cbar(1,1) c(1,1) gives c(1,1)
  Derivation D;
  D.generator_entries.push_back({GeneratorId::cbar(1, 1), "d/dcbar",
                                 [](grassmann::State) { return GrassmannPoly::scalar(1.0); },
                                 nullptr});
  const auto p = multiply(gen(GeneratorId::cbar(1, 1)), gen(GeneratorId::c(1, 1)));
  const std::vector<double> state{0.0};
  const auto d = grassmann::apply_derivation(D, p, state);
  CHECK((d - gen(GeneratorId::c(1, 1))).is_zero());

  // a derivation annihilates scalars
  CHECK(grassmann::apply_derivation(D, GrassmannPoly::scalar(3.5), state).is_zero());
}

TEST_CASE("derivation entry failures name the entry") {
  grassmann::Derivation D;
  D.generator_entries.push_back({GeneratorId::cbar(1, 1), "broken entry",
                                 [](grassmann::State) -> GrassmannPoly {
                                   throw std::runtime_error("boom");
                                 },
                                 nullptr});
  const std::vector<double> state{0.0};
  try {
    grassmann::apply_derivation(D, gen(GeneratorId::cbar(1, 1)), state);
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("broken entry") != std::string::npos);
  }
}

TEST_CASE("finite-difference fallback for missing partials") {
  using grassmann::StatePoly;
  grassmann::Derivation D;
  D.variable_entries.push_back({0, "c d/dx",
                                [](grassmann::State) { return gen(GeneratorId::c(1, 1)); },
                                nullptr});
  StatePoly p;
  p.value = [](grassmann::State s) { return GrassmannPoly::scalar(s[0] * s[0]); };
  p.partial = nullptr;  // forces the forward difference
  const std::vector<double> state{1.5};
  const auto d = grassmann::apply_derivation(D, p, state);
  const double coeff = d.terms().begin()->second;
  CHECK(std::abs(coeff - 3.0) < 1e-5);
}
