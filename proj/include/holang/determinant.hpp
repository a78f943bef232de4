#pragma once

// Time-sliced operator matrices and log-determinants.
//
// Operators are stored row-scaled by epsilon, which folds the x-independent
// 1/eps^M free-operator factor into the matrix: reported log-determinants
// are already normalized, the a = 0 slicing is exactly unit-triangular, and
// block/second-order/nonlocal forms share one normalization so the exact
// algebraic identities between them hold at every epsilon.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "holang/model.hpp"

namespace holang::determinant {

struct LogDet {
  double value = 0.0;  // log|det| with the 1/eps^M normalization removed
  int sign = 1;        // 0 when degenerate
  bool degenerate = false;
};

// Banded real matrix in LAPACK band storage (extra kl rows for pivoting).
struct SlicedOperator {
  int n = 0;
  int kl = 0, ku = 0;
  double a = 0.0;
  model::TimeGrid grid;
  std::vector<double> ab;  // (2*kl+ku+1) x n, column-major

  int ldab() const { return 2 * kl + ku + 1; }
  double& at(int i, int j);
  double get(int i, int j) const;
  bool in_band(int i, int j) const;
  Eigen::MatrixXd dense() const;
};

// eps * [d/dt + F'] sliced with weight a at the new slice: row i has
// diagonal 1 + eps*a*F'_i and subdiagonal -1 + eps*(1-a)*F'_{i-1}.
// fprime holds F' at slices 1..M.
SlicedOperator build_first_order(std::span<const double> fprime, double a,
                                 const model::TimeGrid& grid);

// 2M x 2M slicing of [[d/dt + gamma, F'], [-1, d/dt]], channels interleaved
// (v, x) per slice, every block sliced with the same a and scaling.
SlicedOperator build_block_kramers(std::span<const double> gamma,
                                   std::span<const double> fprime, double a,
                                   const model::TimeGrid& grid);
SlicedOperator build_block_kramers(double gamma, std::span<const double> fprime, double a,
                                   const model::TimeGrid& grid);

// Second-order operator defined as the composition of the sliced first-order
// factors (Schur form of the block matrix), so its determinant equals the
// block determinant identically, not just to O(eps).
SlicedOperator build_second_order(std::span<const double> gamma,
                                  std::span<const double> fprime, double a,
                                  const model::TimeGrid& grid);
SlicedOperator build_second_order(double gamma, std::span<const double> fprime, double a,
                                  const model::TimeGrid& grid);

// Banded LU (LAPACK dgbtrf); numerically lower-triangular operators take the
// exact diagonal-product path.
LogDet logdet(const SlicedOperator& op);

// det(d/dt + gamma) * det(d/dt + (d/dt + gamma)^{-1} F') with the inner
// inverse realized by causal triangular solves.
LogDet nonlocal_fermion_det(std::span<const double> gamma, std::span<const double> fprime,
                            double a, const model::TimeGrid& grid);
LogDet nonlocal_fermion_det(double gamma, std::span<const double> fprime, double a,
                            const model::TimeGrid& grid);

// The opposite Schur elimination: det(d/dt) * det(d/dt + gamma + F' (d/dt)^{-1}).
LogDet schur_complement_det(std::span<const double> gamma, std::span<const double> fprime,
                            double a, const model::TimeGrid& grid);

// Dense LU oracle (for spot checks against the banded path).
LogDet logdet_dense(const Eigen::MatrixXd& A);

// Demonstration of the boundary-condition problem of a naively sliced
// second-order operator: the same centered interior stencil closed by two
// different final rows gives O(1)-different determinants.
struct BoundaryDemo {
  double logdet_second_difference_row = 0.0;
  double logdet_velocity_row = 0.0;
  double difference = 0.0;
};
BoundaryDemo naive_second_order_boundary_demo(double gamma, std::span<const double> fprime,
                                              const model::TimeGrid& grid);

}  // namespace holang::determinant
