#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "holang/model.hpp"
#include "holang/simulate.hpp"
#include "holang/susy.hpp"

using namespace holang;
using model::Polynomial;
using model::ProcessSpec;

namespace {

model::FirstOrderSystem ou_system(double k, double gamma0 = 0.0) {
  const auto spec = ProcessSpec::make_const(1, {gamma0}, Polynomial({0.0, k}));
  return model::reduce_to_first_order(spec, model::SigmaVector::zeros(1));
}

}  // namespace

TEST_CASE("causal step: free motion and one explicit Euler step") {
  const auto sys = ou_system(0.0);
  const std::vector<double> x0{1.3};
  const std::vector<double> zero{0.0};
  std::vector<double> x1(1);
  simulate::step_causal(sys, 0.1, x0, zero, x1);
  CHECK(x1[0] == doctest::Approx(1.3));

  const double k = 2.0, eps = 0.05;
  const auto sysk = ou_system(k);
  simulate::step_causal(sysk, eps, x0, zero, x1);
  CHECK(x1[0] == doctest::Approx((1.0 - eps * k) * 1.3));
}

TEST_CASE("sliced step: a = 0 equals the causal step; linear closed form") {
  const double k = 1.4, eps = 0.05;
  const auto sys = ou_system(k);
  const std::vector<double> x0{0.9};
  const std::vector<double> nu{1.7};
  std::vector<double> causal(1), sliced(1);
  simulate::step_causal(sys, eps, x0, nu, causal);
  simulate::step_sliced(sys, 0.0, eps, x0, nu, sliced);
  CHECK(std::abs(causal[0] - sliced[0]) < 1e-15);

  for (double a : {0.25, 0.5, 1.0}) {
    simulate::step_sliced(sys, a, eps, x0, nu, sliced);
    const double closed =
        (x0[0] * (1.0 - eps * (1.0 - a) * k) + eps * nu[0]) / (1.0 + eps * a * k);
    CHECK(std::abs(sliced[0] - closed) < 1e-12);
  }
}

TEST_CASE("sliced step: damped Newton handles a stiff cubic force") {
  const auto spec = ProcessSpec::make_const(1, {0.0}, Polynomial({0.0, 1.0, 0.0, 5.0}));
  const auto sys = model::reduce_to_first_order(spec, model::SigmaVector::zeros(1));
  const double eps = 0.5;
  const std::vector<double> x0{2.0};
  const std::vector<double> nu{0.3};
  std::vector<double> y(1);
  simulate::step_sliced(sys, 0.5, eps, x0, nu, y);
  // verify the implicit relation directly
  const auto F = [&](double x) { return x + 5.0 * x * x * x; };
  const double res = (y[0] - x0[0]) / eps + 0.5 * F(y[0]) + 0.5 * F(x0[0]) - nu[0];
  CHECK(std::abs(res) < 1e-10);
}

TEST_CASE("ensembles are deterministic, bitwise, and thread-count independent") {
  const auto sys = ou_system(1.0);
  const model::TimeGrid grid(0.05, 40);
  const std::vector<double> x0{0.4};
  simulate::RunOptions opts;
  opts.threads = 1;
  const auto e1 = simulate::run_ensemble(sys, grid, 0.0, 8, 99, x0, opts);
  opts.threads = 2;
  const auto e2 = simulate::run_ensemble(sys, grid, 0.0, 8, 99, x0, opts);
  for (int k = 0; k < 8; ++k) {
    CHECK(e1.trajectories[k].states == e2.trajectories[k].states);
    CHECK(e1.trajectories[k].noise == e2.trajectories[k].noise);
  }
  CHECK(e1.trajectories[0].state(0, 0) == 0.4);  // declared initial condition
  CHECK(e1.trajectories[3].states != e1.trajectories[4].states);
}

TEST_CASE("OU stationary variance matches 1/(2k)") {
  const double k = 1.0;
  const auto sys = ou_system(k);
  const model::TimeGrid grid(0.01, 4096);
  simulate::RunOptions opts;
  opts.burn_in = 0;
  opts.record_noise = false;
  const long K = 20000;
  std::vector<double> x2(K);
  // tail average over the last ~30 relaxation times
  simulate::run_ensemble_visit(sys, grid, 0.0, K, 1234, std::vector<double>{0.0}, opts,
                               [&](long kk, const simulate::Trajectory& tr) {
                                 double s = 0.0;
                                 long n = 0;
                                 for (int i = 1000; i <= tr.slices; ++i) {
                                   s += tr.state(i, 0) * tr.state(i, 0);
                                   ++n;
                                 }
                                 x2[static_cast<std::size_t>(kk)] = s / n;
                               });
  auto [mean, se] = simulate::jackknife_mean(x2);
  CHECK(std::abs(mean - 0.5) < 3.0 * se);
  CHECK(se < 0.01);
}

TEST_CASE("a = 1/2 OU stationary variance on an epsilon ladder") {
  const double k = 1.0;
  const auto sys = ou_system(k);
  const long K = 4000;
  for (double eps : {0.04, 0.02, 0.01}) {
    const int M = static_cast<int>(std::lround(30.0 / eps));
    const model::TimeGrid grid(eps, M);
    simulate::RunOptions opts;
    opts.record_noise = false;
    const int i0 = static_cast<int>(std::lround(10.0 / eps));
    std::vector<double> x2(K);
    simulate::run_ensemble_visit(sys, grid, 0.5, K, 777, std::vector<double>{0.0}, opts,
                                 [&](long kk, const simulate::Trajectory& tr) {
                                   double s = 0.0;
                                   long n = 0;
                                   for (int i = i0; i <= tr.slices; ++i) {
                                     s += tr.state(i, 0) * tr.state(i, 0);
                                     ++n;
                                   }
                                   x2[static_cast<std::size_t>(kk)] = s / n;
                                 });
    auto [mean, se] = simulate::jackknife_mean(x2);
    CHECK(std::abs(mean - 0.5) < 3.0 * se);
  }
}

TEST_CASE("Kramers stationary variance: direct and sigma-coupled") {
  const auto spec = ProcessSpec::make_const(2, {0.0, 1.0}, Polynomial({0.0, 1.0}));
  const model::TimeGrid grid(0.02, 1000);
  const long K = 6000;
  simulate::RunOptions opts;
  opts.record_noise = false;
  opts.burn_in = 1000;  // 10 relaxation times at rate 1/2

  auto run_sigma = [&](double sv, std::uint64_t seed) {
    const auto sys = model::reduce_to_first_order(spec, model::SigmaVector({sv}));
    std::vector<double> x2(K);
    simulate::run_ensemble_visit(sys, grid, 0.0, K, seed, std::vector<double>{0.0, 0.0}, opts,
                                 [&](long kk, const simulate::Trajectory& tr) {
                                   double s = 0.0;
                                   long n = 0;
                                   for (int i = 0; i <= tr.slices; ++i) {
                                     s += tr.state(i, 0) * tr.state(i, 0);
                                     ++n;
                                   }
                                   x2[static_cast<std::size_t>(kk)] = s / n;
                                 });
    return simulate::jackknife_mean(x2);
  };
  const auto [m0, se0] = run_sigma(0.0, 41);
  const auto [m1, se1] = run_sigma(0.25, 42);
  CHECK(std::abs(m0 - 0.5) < 3.0 * se0);
  CHECK(std::abs(m1 - 0.5) < 3.0 * se1);
  CHECK(std::abs(m0 - m1) < 3.0 * std::sqrt(se0 * se0 + se1 * se1));
}

TEST_CASE("correlate: deterministic ensemble gives zero stderr") {
  simulate::Ensemble ens;
  simulate::Trajectory tr;
  tr.dimension = 1;
  tr.slices = 4;
  tr.grid = model::TimeGrid(0.5, 4);
  tr.states = {1.0, 2.0, 3.0, 4.0, 5.0};
  ens.trajectories = {tr, tr, tr};
  const auto est = simulate::correlate_pair(ens, 0, 1, 3);
  CHECK(est.value == doctest::Approx(8.0));
  CHECK(est.stderr_ == 0.0);
}

TEST_CASE("OU lagged autocovariance matches exp(-k tau)/(2k)") {
  const double k = 1.0;
  const auto sys = ou_system(k);
  const model::TimeGrid grid(0.01, 2500);
  simulate::RunOptions opts;
  opts.burn_in = 1000;
  opts.record_noise = false;
  const auto ens = simulate::run_ensemble(sys, grid, 0.0, 8000, 4321,
                                          std::vector<double>{0.0}, opts);
  for (double tau : {0.5, 1.0, 2.0}) {
    const int lag = static_cast<int>(std::lround(tau / grid.epsilon));
    const auto est = simulate::stationary_lagged_product(ens, 0, lag, 0);
    const double target = std::exp(-k * tau) / (2.0 * k);
    CHECK(std::abs(est.value - target) < 3.0 * est.stderr_);
  }
}

TEST_CASE("Brownian covariance is min(t, t')") {
  const auto sys = ou_system(0.0);
  const model::TimeGrid grid(0.05, 64);
  simulate::RunOptions opts;
  opts.record_noise = false;
  const auto ens = simulate::run_ensemble(sys, grid, 0.0, 20000, 555,
                                          std::vector<double>{0.0}, opts);
  const std::vector<std::pair<int, int>> lags{{10, 30}, {40, 20}, {50, 50}};
  const auto ests = simulate::correlate(ens, 0, lags);
  for (std::size_t idx = 0; idx < lags.size(); ++idx) {
    const double expect = grid.epsilon * std::min(lags[idx].first, lags[idx].second);
    CHECK(std::abs(ests[idx].value - expect) < 3.0 * ests[idx].stderr_);
  }
}

TEST_CASE("response: causality and the linear closed form") {
  const double k = 1.0;
  const auto sys = ou_system(k);
  const model::TimeGrid grid(0.05, 64);
  simulate::RunOptions opts;
  const auto ens = simulate::run_ensemble(sys, grid, 0.0, 40000, 808,
                                          std::vector<double>{0.0}, opts);
  // future noise is independent of the past state
  const auto acausal = simulate::response(ens, 0, 20, 40);
  CHECK(std::abs(acausal.value) < 3.0 * acausal.stderr_);
  for (int lag : {10, 20}) {  // tau = 0.5, 1.0
    const auto est = simulate::response(ens, 0, 20 + lag, 20);
    const double target = std::exp(-k * grid.epsilon * lag);
    CHECK(std::abs(est.value - target) < 3.0 * est.stderr_);
    CHECK(est.stderr_ < 0.03);
  }
}

TEST_CASE("cubic response matches the averaged fermion propagator") {
  const auto spec = ProcessSpec::make_const(1, {0.0}, Polynomial({0.0, 1.0, 0.0, 0.3}));
  const auto sys = model::reduce_to_first_order(spec, model::SigmaVector::zeros(1));
  const model::TimeGrid grid(0.02, 120);
  simulate::RunOptions opts;
  opts.burn_in = 500;
  const long K = 20000;
  const auto ens = simulate::run_ensemble(sys, grid, 0.0, K, 909, std::vector<double>{0.0}, opts);
  const int j = 30, lag = 50;
  const auto bos = simulate::response(ens, 0, j + lag, j);
  // same-ensemble fermion side
  std::vector<double> g(K);
  std::vector<double> fp(120);
  for (long kk = 0; kk < K; ++kk) {
    const auto& tr = ens.trajectories[static_cast<std::size_t>(kk)];
    for (int i = 1; i <= 120; ++i) fp[static_cast<std::size_t>(i - 1)] = spec.Fp(tr.state(i, 0));
    const auto G = susy::fermion_green_first_order(fp, 0.0, grid);
    g[static_cast<std::size_t>(kk)] = G(j + lag - 1, j);  // row i, column j+1 in slice labels
  }
  auto [gm, gse] = simulate::jackknife_mean(g);
  const double z = (bos.value - gm) / std::sqrt(bos.stderr_ * bos.stderr_ + gse * gse);
  CHECK(std::abs(z) < 3.0);
}

TEST_CASE("direct recurrence reproduces the coupled reduction statistics") {
  const auto spec = ProcessSpec::make_const(2, {0.0, 1.0}, Polynomial({0.0, 1.0}));
  const model::TimeGrid grid(0.02, 800);
  const long K = 6000;
  simulate::RunOptions opts;
  opts.record_noise = false;
  opts.burn_in = 1000;
  std::vector<double> x2(K);
  simulate::run_direct_recurrence_visit(spec, grid, K, 606, opts,
                                        [&](long kk, const simulate::Trajectory& tr) {
                                          double s = 0.0;
                                          long n = 0;
                                          for (int i = 0; i <= tr.slices; ++i) {
                                            s += tr.state(i, 0) * tr.state(i, 0);
                                            ++n;
                                          }
                                          x2[static_cast<std::size_t>(kk)] = s / n;
                                        });
  auto [mean, se] = simulate::jackknife_mean(x2);
  CHECK(std::abs(mean - 0.5) < 3.0 * se);
}

TEST_CASE("a-independence after Richardson extrapolation") {
  const double k = 1.0;
  const auto sys = ou_system(k);
  const long K = 10000;
  auto variance_at = [&](double a, double eps, std::uint64_t seed) {
    const int M = static_cast<int>(std::lround(25.0 / eps));
    const model::TimeGrid grid(eps, M);
    simulate::RunOptions opts;
    opts.record_noise = false;
    const int i0 = static_cast<int>(std::lround(10.0 / eps));
    std::vector<double> x2(K);
    simulate::run_ensemble_visit(sys, grid, a, K, seed, std::vector<double>{0.0}, opts,
                                 [&](long kk, const simulate::Trajectory& tr) {
                                   double s = 0.0;
                                   long n = 0;
                                   for (int i = i0; i <= tr.slices; ++i) {
                                     s += tr.state(i, 0) * tr.state(i, 0);
                                     ++n;
                                   }
                                   x2[static_cast<std::size_t>(kk)] = s / n;
                                 });
    return simulate::jackknife_mean(x2);
  };
  const auto [v0a, se0a] = variance_at(0.0, 0.04, 21);
  const auto [v0b, se0b] = variance_at(0.0, 0.02, 22);
  const auto [vh, seh] = variance_at(0.5, 0.02, 23);
  const double extrap = 2.0 * v0b - v0a;
  const double se_extrap = std::sqrt(4.0 * se0b * se0b + se0a * se0a);
  const double z = (extrap - vh) / std::sqrt(se_extrap * se_extrap + seh * seh);
  CHECK(std::abs(z) < 3.0);
}

TEST_CASE("burn-in heuristic from the linearization") {
  const auto sys = ou_system(1.0);
  const model::TimeGrid grid(0.01, 100);
  CHECK(simulate::default_burn_in(sys, grid) == 1000);
  const auto free_sys = ou_system(0.0);
  CHECK(simulate::default_burn_in(free_sys, grid) == 0);
}

TEST_CASE("estimator plumbing: pairwise sum and jackknife") {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[static_cast<std::size_t>(i)] = 0.001 * i;
  CHECK(simulate::pairwise_sum(v) == doctest::Approx(0.001 * 999 * 1000 / 2));
  auto [mean, se] = simulate::jackknife_mean(v);
  CHECK(mean == doctest::Approx(0.4995));
  // jackknife of the mean equals s/sqrt(K)
  double s2 = 0.0;
  for (double x : v) s2 += (x - mean) * (x - mean);
  const double classic = std::sqrt(s2 / (v.size() - 1) / v.size());
  CHECK(se == doctest::Approx(classic).epsilon(1e-10));
}

TEST_CASE("errors: lag out of range, missing noise record, empty ensemble") {
  const auto sys = ou_system(1.0);
  const model::TimeGrid grid(0.05, 16);
  simulate::RunOptions opts;
  opts.record_noise = false;
  const auto ens = simulate::run_ensemble(sys, grid, 0.0, 4, 5, std::vector<double>{0.0}, opts);
  CHECK_THROWS_AS(simulate::correlate_pair(ens, 0, 0, 17), std::out_of_range);
  CHECK_THROWS_AS(simulate::response(ens, 0, 4, 2), std::runtime_error);
  simulate::Ensemble empty;
  CHECK_THROWS_AS(simulate::correlate_pair(empty, 0, 0, 1), std::invalid_argument);
}
