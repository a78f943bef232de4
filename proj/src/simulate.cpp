#include "holang/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "holang/noise.hpp"

namespace holang::simulate {

namespace {

void check_finite(std::span<const double> x, int slice) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("non-finite state at slice " + std::to_string(slice));
    }
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HOLANG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void step_causal(const model::FirstOrderSystem& system, double epsilon,
                 std::span<const double> x_prev, std::span<const double> noise_slice,
                 std::span<double> x_out) {
  const int N = system.dimension;
  double drift_buf[8];
  std::span<double> d(drift_buf, static_cast<std::size_t>(N));
  system.drift(x_prev, d);
  for (int n = 0; n < N; ++n) x_out[n] = x_prev[n] + epsilon * (-d[n] + noise_slice[n]);
}

void step_sliced(const model::FirstOrderSystem& system, double a, double epsilon,
                 std::span<const double> x_prev, std::span<const double> noise_slice,
                 std::span<double> x_out, const StepOptions& opts) {
  const int N = system.dimension;
  step_causal(system, epsilon, x_prev, noise_slice, x_out);
  if (a == 0.0) {
    // The causal step already solves the a = 0 relation; one Newton sweep
    // would only add rounding noise.
    return;
  }
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(x_out.data(), N);
  Eigen::VectorXd drift_prev(N), drift_y(N), g(N);
  Eigen::MatrixXd J(N, N);
  std::vector<double> jac(static_cast<std::size_t>(N) * N);
  system.drift({x_prev.data(), static_cast<std::size_t>(N)},
               {drift_prev.data(), static_cast<std::size_t>(N)});

  auto residual = [&](const Eigen::VectorXd& yy, Eigen::VectorXd& out) {
    system.drift({yy.data(), static_cast<std::size_t>(N)},
                 {drift_y.data(), static_cast<std::size_t>(N)});
    for (int n = 0; n < N; ++n) {
      out(n) = (yy(n) - x_prev[n]) / epsilon + a * drift_y(n) + (1.0 - a) * drift_prev(n) -
               noise_slice[n];
    }
  };

  residual(y, g);
  double gnorm = g.lpNorm<Eigen::Infinity>();
  for (int iter = 0; iter < opts.newton_max_iter; ++iter) {
    system.drift_jacobian({y.data(), static_cast<std::size_t>(N)}, jac);
    for (int r = 0; r < N; ++r) {
      for (int c = 0; c < N; ++c) J(r, c) = a * jac[static_cast<std::size_t>(r) * N + c];
      J(r, r) += 1.0 / epsilon;
    }
    const Eigen::VectorXd delta = J.partialPivLu().solve(g);
    // Damping: halve the step while the residual grows.
    double lambda = 1.0;
    Eigen::VectorXd y_try = y - delta;
    Eigen::VectorXd g_try(N);
    residual(y_try, g_try);
    double gnorm_try = g_try.lpNorm<Eigen::Infinity>();
    int halvings = 0;
    while (gnorm_try > gnorm && halvings < 30) {
      lambda *= 0.5;
      y_try = y - lambda * delta;
      residual(y_try, g_try);
      gnorm_try = g_try.lpNorm<Eigen::Infinity>();
      ++halvings;
    }
    y = y_try;
    g = g_try;
    gnorm = gnorm_try;
    if (lambda * delta.lpNorm<Eigen::Infinity>() <= opts.newton_tol) {
      for (int n = 0; n < N; ++n) x_out[n] = y(n);
      return;
    }
  }
  throw std::runtime_error("implicit step did not converge; residual norm " +
                           std::to_string(gnorm));
}

namespace {

// Per-trajectory noise generation over burn-in + window.
void generate_channel_noise(const model::FirstOrderSystem& system, const model::TimeGrid& grid,
                            long total_slices, std::uint64_t seed, long k,
                            std::vector<std::vector<double>>& out) {
  const auto plan = system.channel_plan();
  const int N = system.dimension;
  out.assign(static_cast<std::size_t>(N), {});
  for (int ch = 0; ch < N; ++ch) {
    auto& values = out[static_cast<std::size_t>(ch)];
    values.assign(static_cast<std::size_t>(total_slices), 0.0);
    const auto& cn = plan[static_cast<std::size_t>(ch)];
    if (cn.mode == model::ChannelNoise::Mode::off) continue;
    if (cn.mode == model::ChannelNoise::Mode::white) {
      rng::NormalStream stream(seed, rng::stream_id(rng::Purpose::white,
                                                    static_cast<std::uint32_t>(ch + 1),
                                                    static_cast<std::uint64_t>(k)));
      const double scale = std::sqrt(cn.sigma_n / grid.epsilon);
      for (auto& v : values) v = scale * stream.next_normal();
    } else {
      rng::NormalStream stream(seed, rng::stream_id(rng::Purpose::aux,
                                                    static_cast<std::uint32_t>(ch + 1),
                                                    static_cast<std::uint64_t>(k)));
      const noise::SlicedLambda L =
          noise::SlicedLambda::from_coeffs(cn.lambda_coeffs, grid.epsilon);
      std::vector<double> w(static_cast<std::size_t>(total_slices));
      const double wscale = 1.0 / std::sqrt(grid.epsilon);
      for (auto& v : w) v = wscale * stream.next_normal();
      L.solve(w, values);
      const double scale = std::sqrt(cn.sigma_n);
      for (auto& v : values) v *= scale;
    }
  }
}

void run_one(const model::FirstOrderSystem& system, const model::TimeGrid& grid, double a,
             std::uint64_t seed, long k, std::span<const double> x0, const RunOptions& opts,
             Trajectory& tr) {
  const int N = system.dimension;
  const long M = grid.M;
  const long total = opts.burn_in + M;

  std::vector<std::vector<double>> channel_noise;
  generate_channel_noise(system, grid, total, seed, k, channel_noise);

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> xn(static_cast<std::size_t>(N));
  std::vector<double> slice(static_cast<std::size_t>(N));

  auto noise_at = [&](long i) {
    for (int ch = 0; ch < N; ++ch) slice[static_cast<std::size_t>(ch)] = channel_noise[static_cast<std::size_t>(ch)][static_cast<std::size_t>(i)];
  };

  for (long i = 0; i < opts.burn_in; ++i) {
    noise_at(i);
    try {
      step_sliced(system, a, grid.epsilon, x, slice, xn, opts.step);
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory " + std::to_string(k) + ": " + e.what());
    }
    std::swap(x, xn);
    check_finite(x, static_cast<int>(i + 1));
  }

  tr.dimension = N;
  tr.slices = static_cast<int>(M);
  tr.grid = grid;
  tr.states.assign(static_cast<std::size_t>(M + 1) * N, 0.0);
  std::copy(x.begin(), x.end(), tr.states.begin());
  if (opts.record_noise) {
    tr.noise.assign(static_cast<std::size_t>(N), std::vector<double>(static_cast<std::size_t>(M)));
  } else {
    tr.noise.clear();
  }

  for (long i = 0; i < M; ++i) {
    noise_at(opts.burn_in + i);
    if (opts.record_noise) {
      for (int ch = 0; ch < N; ++ch) {
        tr.noise[static_cast<std::size_t>(ch)][static_cast<std::size_t>(i)] = slice[static_cast<std::size_t>(ch)];
      }
    }
    try {
      step_sliced(system, a, grid.epsilon, x, slice, xn, opts.step);
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory " + std::to_string(k) + ": " + e.what());
    }
    std::swap(x, xn);
    check_finite(x, static_cast<int>(i + 1));
    std::copy(x.begin(), x.end(), tr.states.begin() + static_cast<std::size_t>(i + 1) * N);
  }
}

void parallel_for_k(long K, int threads, const std::function<void(long)>& body) {
  const int n_threads = std::min<long>(threads, K) > 0 ? static_cast<int>(std::min<long>(threads, K)) : 1;
  if (n_threads == 1) {
    for (long k = 0; k < K; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  std::atomic<long> next{0};
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const long k = next.fetch_add(1);
        if (k >= K) return;
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

void run_ensemble_visit(const model::FirstOrderSystem& system, const model::TimeGrid& grid,
                        double a, long K, std::uint64_t seed, std::span<const double> x0,
                        const RunOptions& opts, const TrajectoryVisitor& visit) {
  if (K < 1) throw std::invalid_argument("ensemble size must be >= 1");
  if (static_cast<int>(x0.size()) != system.dimension) {
    throw std::invalid_argument("initial condition dimension mismatch");
  }
  const int threads = resolve_threads(opts.threads);
  parallel_for_k(K, threads, [&](long k) {
    Trajectory tr;
    run_one(system, grid, a, seed, k, x0, opts, tr);
    visit(k, tr);
  });
}

Ensemble run_ensemble(const model::FirstOrderSystem& system, const model::TimeGrid& grid,
                      double a, long K, std::uint64_t seed, std::span<const double> x0,
                      const RunOptions& opts) {
  Ensemble ens;
  ens.seed = seed;
  ens.system = system;
  ens.slicing_a = a;
  ens.trajectories.resize(static_cast<std::size_t>(K));
  run_ensemble_visit(system, grid, a, K, seed, x0, opts,
                     [&ens](long k, const Trajectory& tr) { ens.trajectories[static_cast<std::size_t>(k)] = tr; });
  return ens;
}

void run_direct_recurrence_visit(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                                 long K, std::uint64_t seed, const RunOptions& opts,
                                 const TrajectoryVisitor& visit) {
  const int N = spec.order;
  const long M = grid.M;
  const long total = opts.burn_in + M;
  const double eps = grid.epsilon;
  const double epsN = std::pow(eps, N);
  // Binomial weights of the backward N-difference.
  std::vector<double> binom(static_cast<std::size_t>(N) + 1);
  binom[0] = 1.0;
  for (int r = 1; r <= N; ++r) binom[static_cast<std::size_t>(r)] = binom[static_cast<std::size_t>(r - 1)] * (N - r + 1) / r;

  const bool state_friction = !spec.has_const_coeffs();

  const int threads = resolve_threads(opts.threads);
  parallel_for_k(K, threads, [&](long k) {
    rng::NormalStream stream(seed, rng::stream_id(rng::Purpose::white, 0, static_cast<std::uint64_t>(k)));
    const double wscale = 1.0 / std::sqrt(eps);

    std::vector<double> hist(static_cast<std::size_t>(N) + 1, 0.0);  // hist[r] = x_{i-r}
    Trajectory tr;
    tr.dimension = 1;
    tr.slices = static_cast<int>(M);
    tr.grid = grid;
    tr.states.assign(static_cast<std::size_t>(M) + 1, 0.0);
    if (opts.record_noise) tr.noise.assign(1, std::vector<double>(static_cast<std::size_t>(M)));

    for (long i = 0; i < total; ++i) {
      const double eta = wscale * stream.next_normal();
      double rhs = eta;
      if (state_friction) {
        const auto& sf = spec.state_friction();
        rhs -= sf.gamma(hist[0]) * (hist[0] - hist[1]) / eps;
        rhs -= spec.F(hist[0]);
        // leading second difference: x_i = 2x_{i-1} - x_{i-2} + eps^2 rhs
        const double xi = 2.0 * hist[0] - hist[1] + eps * eps * rhs;
        hist[2] = hist[1];
        hist[1] = hist[0];
        hist[0] = xi;
      } else {
        // lower-order friction terms, backward differences ending at i-1
        for (int n = 1; n <= N; ++n) {
          const double g = spec.gamma_tilde(n - 1);
          if (g == 0.0) continue;
          double diff = 0.0;
          double b = 1.0;
          for (int r = 0; r <= n - 1; ++r) {
            diff += (r % 2 == 0 ? 1.0 : -1.0) * b * hist[static_cast<std::size_t>(r)];
            b = b * (n - 1 - r) / (r + 1);
          }
          rhs -= g * diff / std::pow(eps, n - 1);
        }
        rhs -= spec.F(hist[0]);
        // leading N-difference ending at i: solve for x_i
        double xi = epsN * rhs;
        for (int r = 1; r <= N; ++r) {
          xi -= (r % 2 == 0 ? 1.0 : -1.0) * binom[static_cast<std::size_t>(r)] * hist[static_cast<std::size_t>(r - 1)];
        }
        for (int r = N; r >= 1; --r) hist[static_cast<std::size_t>(r)] = hist[static_cast<std::size_t>(r - 1)];
        hist[0] = xi;
      }
      if (!std::isfinite(hist[0])) {
        throw std::runtime_error("trajectory " + std::to_string(k) +
                                 ": non-finite state at slice " + std::to_string(i + 1));
      }
      const long rec = i - opts.burn_in;
      if (rec >= 0) {
        tr.states[static_cast<std::size_t>(rec) + 1] = hist[0];
        if (opts.record_noise) tr.noise[0][static_cast<std::size_t>(rec)] = eta;
      } else if (rec == -1) {
        tr.states[0] = hist[0];
      }
    }
    visit(k, tr);
  });
}

long default_burn_in(const model::FirstOrderSystem& system, const model::TimeGrid& grid) {
  const int N = system.dimension;
  std::vector<double> x0(static_cast<std::size_t>(N), 0.0);
  std::vector<double> jac(static_cast<std::size_t>(N) * N);
  system.drift_jacobian(x0, jac);
  Eigen::MatrixXd A(N, N);
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) A(r, c) = -jac[static_cast<std::size_t>(r) * N + c];
  const Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  double rate = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) rate = std::min(rate, -es.eigenvalues()(i).real());
  if (!(rate > 0.0) || !std::isfinite(rate)) return 0;
  return static_cast<long>(std::ceil(10.0 / (rate * grid.epsilon)));
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

std::pair<double, double> jackknife_mean(std::span<const double> v) {
  const long K = static_cast<long>(v.size());
  if (K < 1) throw std::invalid_argument("empty sample");
  const double total = pairwise_sum(v);
  const double mean = total / static_cast<double>(K);
  if (K == 1) return {mean, 0.0};
  // Leave-one-out means; for the plain mean this reduces to s/sqrt(K).
  std::vector<double> devsq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double loo = (total - v[i]) / static_cast<double>(K - 1);
    devsq[i] = (loo - mean) * (loo - mean);
  }
  const double var = pairwise_sum(devsq) * static_cast<double>(K - 1) / static_cast<double>(K);
  return {mean, std::sqrt(var)};
}

namespace {

CorrelationEstimate estimate_from(std::vector<double> per_traj, std::string label, double t,
                                  double tprime) {
  auto [mean, se] = jackknife_mean(per_traj);
  CorrelationEstimate e;
  e.label = std::move(label);
  e.t = t;
  e.tprime = tprime;
  e.value = mean;
  e.stderr_ = se;
  e.K = static_cast<long>(per_traj.size());
  return e;
}

}  // namespace

CorrelationEstimate correlate_pair(const Ensemble& ens, int comp, int i, int j) {
  if (ens.trajectories.empty()) throw std::invalid_argument("empty ensemble");
  std::vector<double> vals;
  vals.reserve(ens.trajectories.size());
  for (const auto& tr : ens.trajectories) {
    if (i < 0 || i > tr.slices || j < 0 || j > tr.slices) {
      throw std::out_of_range("lag outside the grid");
    }
    vals.push_back(tr.state(i, comp) * tr.state(j, comp));
  }
  const double eps = ens.trajectories[0].grid.epsilon;
  return estimate_from(std::move(vals), "xx", eps * i, eps * j);
}

std::vector<CorrelationEstimate> correlate(const Ensemble& ens, int comp,
                                           std::span<const std::pair<int, int>> lag_pairs) {
  std::vector<CorrelationEstimate> out;
  out.reserve(lag_pairs.size());
  for (const auto& [i, j] : lag_pairs) out.push_back(correlate_pair(ens, comp, i, j));
  return out;
}

CorrelationEstimate response(const Ensemble& ens, int channel, int i, int j) {
  if (ens.trajectories.empty()) throw std::invalid_argument("empty ensemble");
  std::vector<double> vals;
  vals.reserve(ens.trajectories.size());
  for (const auto& tr : ens.trajectories) {
    if (tr.noise.empty()) throw std::runtime_error("ensemble has no noise record");
    if (i < 0 || i > tr.slices || j < 0 || j >= tr.slices) {
      throw std::out_of_range("lag outside the grid");
    }
    vals.push_back(tr.state(i, 0) * tr.noise[static_cast<std::size_t>(channel)][static_cast<std::size_t>(j)]);
  }
  const double eps = ens.trajectories[0].grid.epsilon;
  return estimate_from(std::move(vals), "response", eps * i, eps * j);
}

CorrelationEstimate stationary_second_moment(const Ensemble& ens, int comp, int i0) {
  if (ens.trajectories.empty()) throw std::invalid_argument("empty ensemble");
  std::vector<double> vals;
  vals.reserve(ens.trajectories.size());
  std::vector<double> window;
  for (const auto& tr : ens.trajectories) {
    window.clear();
    for (int i = i0; i <= tr.slices; ++i) {
      const double x = tr.state(i, comp);
      window.push_back(x * x);
    }
    vals.push_back(pairwise_sum(window) / static_cast<double>(window.size()));
  }
  const double eps = ens.trajectories[0].grid.epsilon;
  return estimate_from(std::move(vals), "x2", eps * i0, eps * i0);
}

CorrelationEstimate stationary_lagged_product(const Ensemble& ens, int comp, int lag, int i0) {
  if (ens.trajectories.empty()) throw std::invalid_argument("empty ensemble");
  std::vector<double> vals;
  vals.reserve(ens.trajectories.size());
  std::vector<double> window;
  for (const auto& tr : ens.trajectories) {
    window.clear();
    for (int i = i0; i + lag <= tr.slices; ++i) {
      window.push_back(tr.state(i, comp) * tr.state(i + lag, comp));
    }
    if (window.empty()) throw std::out_of_range("lag window is empty");
    vals.push_back(pairwise_sum(window) / static_cast<double>(window.size()));
  }
  const double eps = ens.trajectories[0].grid.epsilon;
  return estimate_from(std::move(vals), "xx_lag", eps * i0, eps * (i0 + lag));
}

}  // namespace holang::simulate
