#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "holang/model.hpp"

using namespace holang;
using model::Polynomial;
using model::ProcessSpec;

namespace {

// Chebyshev differentiation matrix on [lo, hi] (Trefethen's construction),
// the spectral oracle for the reduction checks.
struct Chebyshev {
  Eigen::VectorXd nodes;
  Eigen::MatrixXd D;

  Chebyshev(int n, double lo, double hi) {
    const int N = n - 1;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = std::cos(M_PI * i / N);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c(i) = (i == 0 || i == N) ? 2.0 : 1.0;
    D.resize(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) {
          const double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
          D(i, j) = (c(i) / c(j)) * sgn / (x(i) - x(j));
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j != i) s += D(i, j);
      }
      D(i, i) = -s;
    }
    // map [-1,1] -> [lo,hi]
    const double scale = 2.0 / (hi - lo);
    D *= scale;
    nodes.resize(n);
    for (int i = 0; i < n; ++i) nodes(i) = lo + (x(i) + 1.0) * (hi - lo) / 2.0;
  }
};

}  // namespace

TEST_CASE("polynomial evaluation and derivatives") {
  const Polynomial p({1.0, 0.0, 3.0});  // 1 + 3x^2
  CHECK(p(2.0) == doctest::Approx(13.0));
  const Polynomial d = p.derivative();
  CHECK(d(2.0) == doctest::Approx(12.0));
  const Polynomial a = d.antiderivative();
  CHECK(a(2.0) == doctest::Approx(12.0));  // 3x^2
  CHECK(a(0.0) == 0.0);
}

TEST_CASE("grid and sigma validation") {
  CHECK_THROWS_AS(model::TimeGrid(0.0, 10), model::ConfigError);
  CHECK_THROWS_AS(model::TimeGrid(0.1, 0), model::ConfigError);
  CHECK_THROWS_AS(model::SigmaVector({-0.1}), model::ConfigError);
  CHECK_THROWS_AS(model::SigmaVector({0.6, 0.5}), model::ConfigError);
  CHECK_THROWS_AS(model::SlicingParam(1.5), model::ConfigError);
  CHECK(model::SlicingParam(0.5).a == 0.5);
}

TEST_CASE("reduction: Kramers pair") {
  // N=2, gamma(d) = d + g: L_v = vdot + g v + F(x), L_x = xdot - v
  const double g = 0.8;
  const auto spec = ProcessSpec::make_const(2, {0.0, g}, Polynomial({0.0, 2.0}));
  const auto sys = model::reduce_to_first_order(spec, model::SigmaVector({0.2}));
  const std::vector<double> x{1.5, -0.7};
  std::vector<double> d(2);
  sys.drift(x, d);
  CHECK(d[0] == doctest::Approx(-x[1]));                  // L_x drift = -v
  CHECK(d[1] == doctest::Approx(g * x[1] + 2.0 * x[0]));  // L_v drift = g v + F(x)
}

TEST_CASE("reduction: N=1 degenerates to the scalar equation") {
  const auto spec = ProcessSpec::make_const(1, {0.4}, Polynomial({0.0, 1.0}));
  const auto sys = model::reduce_to_first_order(spec, model::SigmaVector::zeros(1));
  const std::vector<double> x{2.0};
  std::vector<double> d(1);
  sys.drift(x, d);
  CHECK(d[0] == doctest::Approx(0.4 * 2.0 + 2.0));
}

TEST_CASE("reduction rejects state friction, pointing at the split") {
  const auto spec = ProcessSpec::make_state_friction(Polynomial({1.0, 0.0, 3.0}),
                                                     Polynomial({0.0, 1.0}));
  try {
    model::reduce_to_first_order(spec, model::SigmaVector({0.1}));
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);
  }
}

TEST_CASE("N=3 reduction matches the scalar operator on a smooth trajectory") {
  // Substituting x_{n+1} = xdot_n must reproduce
  // L = x''' + g2 x'' + g1 x' + g0 x + F(x) on smooth paths; the coupled
  // side is evaluated with spectral differentiation, the scalar side with
  // exact analytic derivatives of the test function.
  const std::vector<double> g{0.3, 0.7, 1.2};
  const auto spec = ProcessSpec::make_const(3, g, Polynomial({0.0, 0.5, 0.0, 0.2}));
  const auto sys = model::reduce_to_first_order(spec, model::SigmaVector::zeros(3));
  const Chebyshev cheb(64, 0.0, 6.0);
  const int n = static_cast<int>(cheb.nodes.size());

  Eigen::VectorXd x1(n);
  for (int i = 0; i < n; ++i) {
    x1(i) = std::sin(cheb.nodes(i)) + 0.3 * std::cos(0.5 * cheb.nodes(i));
  }
  const Eigen::VectorXd x2 = cheb.D * x1;
  const Eigen::VectorXd x3 = cheb.D * x2;
  const Eigen::VectorXd x3dot = cheb.D * x3;

  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = cheb.nodes(i);
    const std::vector<double> state{x1(i), x2(i), x3(i)};
    std::vector<double> d(3);
    sys.drift(state, d);
    const double L_coupled = x3dot(i) + d[2];
    // exact derivatives of sin(t) + 0.3 cos(t/2)
    const double a1 = std::cos(t) - 0.15 * std::sin(0.5 * t);
    const double a2 = -std::sin(t) - 0.075 * std::cos(0.5 * t);
    const double a3 = -std::cos(t) + 0.0375 * std::sin(0.5 * t);
    const double x0 = x1(i);
    const double L_direct = a3 + g[2] * a2 + g[1] * a1 + g[0] * x0 + spec.F(x0);
    worst = std::max(worst, std::abs(L_coupled - L_direct));
    // the chain x_{n+1} = xdot_n holds spectrally by construction of x2, x3
    CHECK(std::abs(d[0] + x2(i)) < 1e-12);
    CHECK(std::abs(d[1] + x3(i)) < 1e-12);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("lambda split: polynomial forms") {
  // constant gamma
  {
    const auto [lx, lv] = model::lambda_split(Polynomial({1.7}), Polynomial({0.0, 2.0}));
    CHECK(lx(3.0) == doctest::Approx(0.7 * 3.0));
    CHECK(lv(3.0) == doctest::Approx(6.0 - 2.1));
  }
  // gamma == 1: the split disappears
  {
    const auto [lx, lv] = model::lambda_split(Polynomial({1.0}), Polynomial({0.0, 5.0}));
    CHECK(lx(2.0) == 0.0);
    CHECK(lv(2.0) == doctest::Approx(10.0));
  }
}

TEST_CASE("lambda split: quadrature path for gamma = 1 + 3x^2") {
  auto gamma = [](double x) { return 1.0 + 3.0 * x * x; };
  auto force = [](double x) { return x; };
  const auto [lx, lv] = model::lambda_split(gamma, force, -2.0, 2.0);
  // lambda_x should be x^3 exactly
  for (double x : {-1.5, -0.4, 0.0, 0.7, 1.9}) {
    CHECK(std::abs(lx(x) - x * x * x) < 1e-10);
    CHECK(std::abs(lx(x) + lv(x) - force(x)) < 1e-10);
  }
  // pointwise derivative via a five-point stencil (exact for cubics)
  const double h = 1e-2;
  for (double x : {-1.0, 0.3, 1.2}) {
    const double d =
        (-lx(x + 2 * h) + 8 * lx(x + h) - 8 * lx(x - h) + lx(x - 2 * h)) / (12 * h);
    CHECK(std::abs(d - (gamma(x) - 1.0)) < 1e-10);
  }
}

TEST_CASE("quadrature reports the worst subinterval on failure") {
  auto nasty = [](double u) { return u > 0.3 ? 1e6 : 0.0; };
  try {
    model::integrate(nasty, 0.0, 1.0, 1e-12);
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("subinterval") != std::string::npos);
  }
}

TEST_CASE("state-friction split validates lambda_x' = gamma - 1") {
  const auto spec = ProcessSpec::make_state_friction(Polynomial({1.0, 0.0, 3.0}),
                                                     Polynomial({0.0, 1.0}));
  const auto& sf = spec.state_friction();
  CHECK(sf.lambda_x(2.0) == doctest::Approx(8.0));  // x^3
  const auto sys = model::first_order_state_friction(spec, 0.25);
  // L_x drift = -v + lambda_x(x); L_v drift = v + lambda_v(x)
  const std::vector<double> x{1.2, -0.5};
  std::vector<double> d(2);
  sys.drift(x, d);
  CHECK(d[0] == doctest::Approx(0.5 + 1.2 * 1.2 * 1.2));
  CHECK(d[1] == doctest::Approx(-0.5 + (1.2 - 1.2 * 1.2 * 1.2)));
}

TEST_CASE("aux operator coefficients") {
  // N=2: Lambda_1 = d/dt + gamma
  {
    const auto spec = ProcessSpec::make_const(2, {0.0, 0.9}, Polynomial({0.0, 1.0}));
    const auto c = model::lambda_operator_coeffs(spec, 1);
    REQUIRE(c.size() == 2);
    CHECK(c[0] == doctest::Approx(0.9));
    CHECK(c[1] == doctest::Approx(1.0));
  }
  // unit-friction split: Lambda_1 = d/dt + 1
  {
    const auto spec = ProcessSpec::make_const(2, {0.0, 1.0}, Polynomial({0.0, 1.0}));
    const auto c = model::lambda_operator_coeffs(spec, 1);
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(1.0));
  }
  // N=3: n=2 -> d/dt + g2; n=1 -> d^2 + g2 d + g1
  {
    const auto spec = ProcessSpec::make_const(3, {0.3, 0.7, 1.2}, Polynomial({0.0, 1.0}));
    const auto c2 = model::lambda_operator_coeffs(spec, 2);
    REQUIRE(c2.size() == 2);
    CHECK(c2[0] == doctest::Approx(1.2));
    CHECK(c2[1] == doctest::Approx(1.0));
    const auto c1 = model::lambda_operator_coeffs(spec, 1);
    REQUIRE(c1.size() == 3);
    CHECK(c1[0] == doctest::Approx(0.7));
    CHECK(c1[1] == doctest::Approx(1.2));
    CHECK(c1[2] == doctest::Approx(1.0));
    CHECK_THROWS_AS(model::lambda_operator_coeffs(spec, 3), std::out_of_range);
    CHECK_THROWS_AS(model::lambda_operator_coeffs(spec, 0), std::out_of_range);
  }
}

TEST_CASE("all-zero sigma yields the direct process") {
  const auto spec = ProcessSpec::make_const(3, {0.3, 0.7, 1.2}, Polynomial({0.0, 1.0}));
  const auto sys = model::reduce_to_first_order(spec, model::SigmaVector::zeros(3));
  const auto plan = sys.channel_plan();
  REQUIRE(plan.size() == 3);
  CHECK(plan[0].mode == model::ChannelNoise::Mode::off);
  CHECK(plan[1].mode == model::ChannelNoise::Mode::off);
  CHECK(plan[2].mode == model::ChannelNoise::Mode::white);
  CHECK(plan[2].sigma_n == doctest::Approx(1.0));
}

TEST_CASE("config round-trip is the identity") {
  const std::string text = R"({
    "process": {"N": 2, "gamma_coeffs": [0.0, 1.0], "force_poly": [0.0, 1.0, 0.0, 0.3]},
    "grid": {"epsilon": 0.01, "M": 2000},
    "sigma": [0.25],
    "slicing_a": 0.5,
    "ensemble": {"K": 20000, "seed": 77, "burn_in": -1}
  })";
  const auto cfg = model::parse_config(text);
  const std::string ser = model::serialize_config(cfg);
  const auto cfg2 = model::parse_config(ser);
  CHECK(cfg == cfg2);
  CHECK(model::serialize_config(cfg2) == ser);
  CHECK(model::config_hash(cfg) == model::config_hash(cfg2));
}

TEST_CASE("config rejects unknown keys and bad fields, naming them") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      model::parse_config(text);
      CHECK_MESSAGE(false, "expected rejection containing: " << needle);
    } catch (const model::ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  expect_error(R"({"process": {"N":1,"gamma_coeffs":[0],"force_poly":[0,1]},
                   "grid": {"epsilon":0.1,"M":10}, "bogus": 1})",
               "bogus");
  expect_error(R"({"process": {"N":2,"gamma_coeffs":[0,1],"force_poly":[0,1]},
                   "grid": {"epsilon":0.1,"M":10}, "sigma": [0.8, 0.4]})",
               "sigma");
  expect_error(R"({"process": {"N":2,"gamma_coeffs":[0],"force_poly":[0,1]},
                   "grid": {"epsilon":0.1,"M":10}})",
               "gamma_coeffs");
  expect_error(R"({"process": {"N":3,"gamma_poly_in_x":[1,0,3],"force_poly":[0,1]},
                   "grid": {"epsilon":0.1,"M":10}})",
               "N = 2");
  expect_error(R"({"process": {"N":1,"gamma_coeffs":[0],"force_poly":[0,1]},
                   "grid": {"epsilon":-1,"M":10}})",
               "epsilon");
}

TEST_CASE("gamma_tilde closes the list with gamma_N = 1") {
  const auto spec = ProcessSpec::make_const(2, {0.3, 0.8}, Polynomial({0.0, 1.0}));
  CHECK(spec.gamma_tilde(0) == doctest::Approx(0.3));
  CHECK(spec.gamma_tilde(1) == doctest::Approx(0.8));
  CHECK(spec.gamma_tilde(2) == doctest::Approx(1.0));
}
