#pragma once

// Sliced supersymmetric actions, supercharges, invariance and nilpotency
// checks, fermion Green's functions, and Ward-identity estimators.
//
// Conventions (fixed once, used by every construction):
//  - the algebra is real: the canonical momentum is stored as q = -i p, so
//    the canonical action carries -q L and the published normalization is
//    recovered by multiplying charges by i;
//  - the canonical supercharge is Q = sum_i (c_{n,i} d/dx_{n,i}
//    + q_{n,i} d/dcbar_{n,i});
//  - Lagrangian supercharges carry the opposite sign on the fermionic
//    entries, Q = sum (c_{1,i} d/dx_i - R_n[L]_i d/dcbar_{n,i}), which is
//    the sign that makes the continuum variation a pure boundary term;
//  - drift-force factors are sliced jointly, a [g(x_i) c_i]
//    + (1-a) [g(x_{i-1}) c_{i-1}], so the second-variation terms cancel
//    through c c = 0 at the sliced level.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "holang/grassmann.hpp"
#include "holang/model.hpp"
#include "holang/simulate.hpp"

namespace holang::susy {

enum class ActionKind { canonical, lagrangian, lagrangian_xfriction };

// Flat bosonic state: x_{n,i} for n = 1..x_channels, i = 0..M, then
// q_{n,i} for n = 1..q_channels, i = 1..M.
struct VarLayout {
  int x_channels = 0;
  int q_channels = 0;
  int f_channels = 0;  // fermion channels, slices 1..M
  int M = 0;

  int x_index(int n, int i) const { return (n - 1) * (M + 1) + i; }
  int q_index(int n, int i) const { return x_channels * (M + 1) + (n - 1) * M + (i - 1); }
  int n_x() const { return x_channels * (M + 1); }
  int total() const { return n_x() + q_channels * M; }
};

struct SlicedAction {
  ActionKind kind = ActionKind::canonical;
  VarLayout layout;
  double a = 0.0;
  model::TimeGrid grid;
  grassmann::StatePoly poly;  // value and exact bosonic partials
  std::function<double(grassmann::State)> bosonic;
  std::function<grassmann::GrassmannPoly(grassmann::State)> fermionic;
};

struct Supercharge {
  ActionKind kind = ActionKind::canonical;
  VarLayout layout;
  grassmann::Derivation D;
};

// Canonical (Hamiltonian) construction for a const-coefficient process of
// order N: exactly supersymmetric at the sliced level for every a and eps.
std::pair<SlicedAction, Supercharge> build_canonical(const model::ProcessSpec& spec,
                                                     const model::SigmaVector& sigma,
                                                     const model::TimeGrid& grid, double a);

// Local sigma -> 0 action 1/2 int L^2 + S_f with the N-fermion action and
// the derivative-ladder supercharge; invariant up to O(eps).
std::pair<SlicedAction, Supercharge> build_lagrangian_N(const model::ProcessSpec& spec,
                                                        const model::TimeGrid& grid,
                                                        double a = 0.5);

// x-dependent friction (order 2) via the lambda split.
std::pair<SlicedAction, Supercharge> build_lagrangian_xfriction(const model::ProcessSpec& spec,
                                                                const model::TimeGrid& grid,
                                                                double a = 0.5);

// Literal two-channel transcriptions of the Kramers forms (reference for
// the structural reduction checks).
grassmann::GrassmannPoly kramers_fermion_action(const model::ProcessSpec& spec,
                                                const model::TimeGrid& grid, double a,
                                                grassmann::State state);
Supercharge kramers_supercharge(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                                double a);

// Worst |coefficient| of Q(Q p) over random degree <= 2 polynomials at
// random bosonic states. include_cbar = false restricts test polynomials to
// the cbar-free subalgebra (the Lagrangian charges close only there).
double check_nilpotent(const Supercharge& Q, int trials, std::uint64_t seed,
                       bool include_cbar = true);

// Exact invariance check for the canonical construction: worst |coefficient|
// of Q S over random states. Lagrangian tags are refused (use the ladder).
double check_invariance(const Supercharge& Q, const SlicedAction& S, int trials,
                        std::uint64_t seed);

// eps-weighted l1 norm of Q S on smooth paths, over a ladder of grids at
// fixed horizon T.
struct LadderPoint {
  int M = 0;
  double epsilon = 0.0;
  double norm = 0.0;
};
struct LadderResult {
  std::vector<LadderPoint> points;
  std::vector<double> ratios;  // norm_k / norm_{k+1}, eps halving
  double fitted_order = 0.0;   // mean log2 ratio
};
LadderResult invariance_ladder(ActionKind kind, const model::ProcessSpec& spec, double T,
                               std::span<const int> Ms, double a);

double weighted_l1(const grassmann::GrassmannPoly& p, double epsilon);

// Causal inverse of the eps-scaled fermion operator along a trajectory.
// fprime holds the drift derivative at slices 1..M.
Eigen::MatrixXd fermion_green_first_order(std::span<const double> fprime, double a,
                                          const model::TimeGrid& grid);
Eigen::MatrixXd fermion_green_block_kramers(double gamma, std::span<const double> fprime,
                                            double a, const model::TimeGrid& grid);

// Ward identity for Phi = cbar_{t1} x_{t2} on an order-1 process:
// <x_{j+lag} eta_j> = <G_{j+lag, j+1}>, window-averaged over j, with the
// a = 1/2 variant reweighted from the same a = 0 ensemble by the exact
// ratio of sliced weights (Jacobian included).
struct WardOptions {
  long K = 4000;
  int lag_steps = 100;
  int window_begin = 0;
  int window_end = -1;  // -1: all admissible j
  long burn_in = 0;
  int threads = 0;
};

struct WardReport {
  std::string label;
  double target_a = 0.0;
  double bosonic = 0.0, bosonic_se = 0.0;
  double fermionic = 0.0, fermionic_se = 0.0;
  double diff_z = 0.0;  // z of (bosonic - fermionic)
  long K = 0;
};

WardReport ward_check(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                      std::uint64_t seed, const WardOptions& opts, double target_a = 0.0);

struct AShiftReport {
  WardReport ito;
  WardReport stratonovich;
  double response_shift_z = 0.0;  // z of bosonic(a=0) - bosonic(a=1/2)
};
AShiftReport a_shift_check(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                           std::uint64_t seed, const WardOptions& opts);

}  // namespace holang::susy
