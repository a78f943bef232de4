#pragma once

// Time-sliced integration of the coupled first-order systems, ensemble
// Monte Carlo, and correlation/response estimators.
//
// The causal step is x_i = x_{i-1} + eps*(-drift(x_{i-1}) + nu_{i-1});
// the a-sliced step solves the implicit relation with the drift weighted
// a at the new point and (1-a) at the old one. Noise slices carry the
// variance-1/eps convention, so the causal step is plain Euler-Maruyama.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "holang/model.hpp"
#include "holang/rng.hpp"

namespace holang::simulate {

struct Trajectory {
  int dimension = 1;
  int slices = 0;                           // M
  model::TimeGrid grid;
  std::vector<double> states;               // (M+1) x dimension, row-major
  std::vector<std::vector<double>> noise;   // per channel, length M (may be empty)

  double state(int i, int comp) const { return states[static_cast<std::size_t>(i) * dimension + comp]; }
  std::span<const double> state_row(int i) const {
    return {states.data() + static_cast<std::size_t>(i) * dimension, static_cast<std::size_t>(dimension)};
  }
};

struct Ensemble {
  std::vector<Trajectory> trajectories;
  std::uint64_t seed = 0;
  model::FirstOrderSystem system;
  double slicing_a = 0.0;
};

struct StepOptions {
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
};

void step_causal(const model::FirstOrderSystem& system, double epsilon,
                 std::span<const double> x_prev, std::span<const double> noise_slice,
                 std::span<double> x_out);

void step_sliced(const model::FirstOrderSystem& system, double a, double epsilon,
                 std::span<const double> x_prev, std::span<const double> noise_slice,
                 std::span<double> x_out, const StepOptions& opts = {});

struct RunOptions {
  long burn_in = 0;        // slices simulated and discarded before recording
  bool record_noise = true;
  int threads = 0;         // 0 = HOLANG_THREADS env or hardware concurrency
  StepOptions step;
};

// Visitor is invoked once per trajectory index (possibly concurrently);
// the Trajectory buffer is only valid during the call.
using TrajectoryVisitor = std::function<void(long k, const Trajectory&)>;

void run_ensemble_visit(const model::FirstOrderSystem& system, const model::TimeGrid& grid,
                        double a, long K, std::uint64_t seed, std::span<const double> x0,
                        const RunOptions& opts, const TrajectoryVisitor& visit);

Ensemble run_ensemble(const model::FirstOrderSystem& system, const model::TimeGrid& grid,
                      double a, long K, std::uint64_t seed, std::span<const double> x0,
                      const RunOptions& opts = {});

// Naive causal slicing of the order-N scalar equation as an N-term
// recurrence (consistency reference for the reduction). Trajectories come
// back with dimension 1 and the driving noise in channel 0.
void run_direct_recurrence_visit(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                                 long K, std::uint64_t seed, const RunOptions& opts,
                                 const TrajectoryVisitor& visit);

// Burn-in heuristic: 10 relaxation times of the zero-state linearization,
// in slices; 0 when the linearization has no decaying mode.
long default_burn_in(const model::FirstOrderSystem& system, const model::TimeGrid& grid);

struct CorrelationEstimate {
  std::string label;
  double t = 0.0, tprime = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  long K = 0;
};

// <x_comp(t_i) x_comp(t_j)>, jackknife over trajectories.
CorrelationEstimate correlate_pair(const Ensemble& ens, int comp, int i, int j);
std::vector<CorrelationEstimate> correlate(const Ensemble& ens, int comp,
                                           std::span<const std::pair<int, int>> lag_pairs);

// <x_comp(t_i) eta_channel(slice j)>; requires a noise record.
CorrelationEstimate response(const Ensemble& ens, int channel, int i, int j);

// Tail-window stationary estimators (window [i0, M]).
CorrelationEstimate stationary_second_moment(const Ensemble& ens, int comp, int i0);
CorrelationEstimate stationary_lagged_product(const Ensemble& ens, int comp, int lag, int i0);

double pairwise_sum(std::span<const double> v);
// (mean, jackknife standard error)
std::pair<double, double> jackknife_mean(std::span<const double> v);

}  // namespace holang::simulate
