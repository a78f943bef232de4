#include "holang/determinant.hpp"

#include <cmath>
#include <stdexcept>

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab,
             const int* ldab, int* ipiv, int* info);
}

namespace holang::determinant {

double& SlicedOperator::at(int i, int j) {
  return ab[static_cast<std::size_t>(j) * ldab() + (kl + ku + i - j)];
}

double SlicedOperator::get(int i, int j) const {
  if (!in_band(i, j)) return 0.0;
  return ab[static_cast<std::size_t>(j) * ldab() + (kl + ku + i - j)];
}

bool SlicedOperator::in_band(int i, int j) const {
  return i >= 0 && j >= 0 && i < n && j < n && i - j <= kl && j - i <= ku;
}

Eigen::MatrixXd SlicedOperator::dense() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i) A(i, j) = get(i, j);
  }
  return A;
}

namespace {

SlicedOperator make_banded(int n, int kl, int ku, double a, const model::TimeGrid& grid) {
  SlicedOperator op;
  op.n = n;
  op.kl = kl;
  op.ku = ku;
  op.a = a;
  op.grid = grid;
  op.ab.assign(static_cast<std::size_t>(op.ldab()) * n, 0.0);
  return op;
}

}  // namespace

SlicedOperator build_first_order(std::span<const double> fprime, double a,
                                 const model::TimeGrid& grid) {
  const int M = grid.M;
  if (static_cast<int>(fprime.size()) != M) {
    throw std::invalid_argument("fprime must have one value per slice");
  }
  const double eps = grid.epsilon;
  SlicedOperator op = make_banded(M, 1, 0, a, grid);
  for (int i = 0; i < M; ++i) {
    op.at(i, i) = 1.0 + eps * a * fprime[static_cast<std::size_t>(i)];
    if (i > 0) op.at(i, i - 1) = -1.0 + eps * (1.0 - a) * fprime[static_cast<std::size_t>(i - 1)];
  }
  return op;
}

SlicedOperator build_block_kramers(std::span<const double> gamma,
                                   std::span<const double> fprime, double a,
                                   const model::TimeGrid& grid) {
  const int M = grid.M;
  if (static_cast<int>(gamma.size()) != M || static_cast<int>(fprime.size()) != M) {
    throw std::invalid_argument("gamma and fprime must have one value per slice");
  }
  const double eps = grid.epsilon;
  SlicedOperator op = make_banded(2 * M, 3, 1, a, grid);
  for (int i = 1; i <= M; ++i) {
    const int rv = 2 * (i - 1);  // v-equation row
    const int rx = rv + 1;       // x-equation row
    op.at(rv, rv) = 1.0 + eps * a * gamma[static_cast<std::size_t>(i - 1)];
    op.at(rv, rx) = eps * a * fprime[static_cast<std::size_t>(i - 1)];
    op.at(rx, rv) = -eps * a;
    op.at(rx, rx) = 1.0;
    if (i > 1) {
      const int pv = rv - 2, px = rx - 2;
      op.at(rv, pv) = -1.0 + eps * (1.0 - a) * gamma[static_cast<std::size_t>(i - 2)];
      op.at(rv, px) = eps * (1.0 - a) * fprime[static_cast<std::size_t>(i - 2)];
      op.at(rx, pv) = -eps * (1.0 - a);
      op.at(rx, px) = -1.0;
    }
  }
  return op;
}

SlicedOperator build_block_kramers(double gamma, std::span<const double> fprime, double a,
                                   const model::TimeGrid& grid) {
  std::vector<double> g(static_cast<std::size_t>(grid.M), gamma);
  return build_block_kramers(g, fprime, a, grid);
}

SlicedOperator build_second_order(std::span<const double> gamma,
                                  std::span<const double> fprime, double a,
                                  const model::TimeGrid& grid) {
  const int M = grid.M;
  if (M < 2) throw std::invalid_argument("second-order slicing needs M >= 2");
  if (static_cast<int>(gamma.size()) != M || static_cast<int>(fprime.size()) != M) {
    throw std::invalid_argument("gamma and fprime must have one value per slice");
  }
  const double eps = grid.epsilon;
  SlicedOperator op = make_banded(M, 2, 0, a, grid);
  // (A D)_{i,i} = a0(i), (A D)_{i,i-1} = a1(i) - a0(i), (A D)_{i,i-2} = -a1(i)
  // with a0(i) = 1 + eps a gamma_i, a1(i) = -1 + eps(1-a) gamma_{i-1};
  // plus eps^2 (W_F W_1) from the off-diagonal blocks.
  for (int i = 0; i < M; ++i) {
    const double a0 = 1.0 + eps * a * gamma[static_cast<std::size_t>(i)];
    const double wf0 = a * fprime[static_cast<std::size_t>(i)];
    op.at(i, i) = a0 + eps * eps * wf0 * a;
    if (i >= 1) {
      const double a1 = -1.0 + eps * (1.0 - a) * gamma[static_cast<std::size_t>(i - 1)];
      const double wf1 = (1.0 - a) * fprime[static_cast<std::size_t>(i - 1)];
      op.at(i, i - 1) = (a1 - a0) + eps * eps * (wf0 * (1.0 - a) + wf1 * a);
      if (i >= 2) op.at(i, i - 2) = -a1 + eps * eps * wf1 * (1.0 - a);
    }
  }
  return op;
}

SlicedOperator build_second_order(double gamma, std::span<const double> fprime, double a,
                                  const model::TimeGrid& grid) {
  std::vector<double> g(static_cast<std::size_t>(grid.M), gamma);
  return build_second_order(g, fprime, a, grid);
}

namespace {

bool numerically_lower_triangular(const SlicedOperator& op) {
  for (int j = 0; j < op.n; ++j) {
    for (int i = std::max(0, j - op.ku); i < j; ++i) {
      if (op.get(i, j) != 0.0) return false;
    }
  }
  return true;
}

LogDet accumulate_diagonal(std::span<const double> diag) {
  LogDet r;
  for (double d : diag) {
    if (d == 0.0) {
      return {0.0, 0, true};
    }
    r.value += std::log(std::abs(d));
    if (d < 0.0) r.sign = -r.sign;
  }
  return r;
}

}  // namespace

LogDet logdet(const SlicedOperator& op) {
  if (numerically_lower_triangular(op)) {
    std::vector<double> diag(static_cast<std::size_t>(op.n));
    for (int i = 0; i < op.n; ++i) diag[static_cast<std::size_t>(i)] = op.get(i, i);
    return accumulate_diagonal(diag);
  }
  std::vector<double> ab = op.ab;
  std::vector<int> ipiv(static_cast<std::size_t>(op.n));
  const int ldab = op.ldab();
  int info = 0;
  dgbtrf_(&op.n, &op.n, &op.kl, &op.ku, ab.data(), &ldab, ipiv.data(), &info);
  if (info < 0) throw std::runtime_error("dgbtrf: illegal argument");
  LogDet r;
  if (info > 0) {
    return {0.0, 0, true};
  }
  for (int j = 0; j < op.n; ++j) {
    const double u = ab[static_cast<std::size_t>(j) * ldab + op.kl + op.ku];
    if (u == 0.0) return {0.0, 0, true};
    r.value += std::log(std::abs(u));
    if (u < 0.0) r.sign = -r.sign;
    if (ipiv[static_cast<std::size_t>(j)] != j + 1) r.sign = -r.sign;
  }
  return r;
}

LogDet logdet_dense(const Eigen::MatrixXd& A) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  LogDet r;
  const auto& U = lu.matrixLU();
  for (int i = 0; i < A.rows(); ++i) {
    const double u = U(i, i);
    if (u == 0.0) return {0.0, 0, true};
    r.value += std::log(std::abs(u));
    if (u < 0.0) r.sign = -r.sign;
  }
  r.sign *= lu.permutationP().determinant() > 0 ? 1 : -1;
  return r;
}

namespace {

// Dense scaled slicing of d/dt + gamma (lower bidiagonal).
Eigen::MatrixXd dense_first_order_gamma(std::span<const double> gamma, double a, double eps,
                                        int M) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    A(i, i) = 1.0 + eps * a * gamma[static_cast<std::size_t>(i)];
    if (i > 0) A(i, i - 1) = -1.0 + eps * (1.0 - a) * gamma[static_cast<std::size_t>(i - 1)];
  }
  return A;
}

// a-weighted multiplication operator by the per-slice values f.
Eigen::MatrixXd dense_weighting(std::span<const double> f, double a, int M) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    W(i, i) = a * f[static_cast<std::size_t>(i)];
    if (i > 0) W(i, i - 1) = (1.0 - a) * f[static_cast<std::size_t>(i - 1)];
  }
  return W;
}

LogDet combine(const LogDet& p, const LogDet& q) {
  if (p.degenerate || q.degenerate) return {0.0, 0, true};
  return {p.value + q.value, p.sign * q.sign, false};
}

}  // namespace

LogDet nonlocal_fermion_det(std::span<const double> gamma, std::span<const double> fprime,
                            double a, const model::TimeGrid& grid) {
  const int M = grid.M;
  const double eps = grid.epsilon;
  const Eigen::MatrixXd A = dense_first_order_gamma(gamma, a, eps, M);
  // log det of the bidiagonal friction factor.
  std::vector<double> diag(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) diag[static_cast<std::size_t>(i)] = A(i, i);
  const LogDet friction_part = accumulate_diagonal(diag);

  const std::vector<double> ones(static_cast<std::size_t>(M), 1.0);
  const Eigen::MatrixXd WF = dense_weighting(fprime, a, M);
  const Eigen::MatrixXd W1 = dense_weighting(ones, a, M);
  // D + eps^2 W1 A^{-1} WF, causal triangular solve for A^{-1}.
  const Eigen::MatrixXd X =
      A.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(WF));
  Eigen::MatrixXd Dfactor = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    Dfactor(i, i) = 1.0;
    if (i > 0) Dfactor(i, i - 1) = -1.0;
  }
  Dfactor += eps * eps * W1 * X;
  return combine(friction_part, logdet_dense(Dfactor));
}

LogDet nonlocal_fermion_det(double gamma, std::span<const double> fprime, double a,
                            const model::TimeGrid& grid) {
  std::vector<double> g(static_cast<std::size_t>(grid.M), gamma);
  return nonlocal_fermion_det(g, fprime, a, grid);
}

LogDet schur_complement_det(std::span<const double> gamma, std::span<const double> fprime,
                            double a, const model::TimeGrid& grid) {
  const int M = grid.M;
  const double eps = grid.epsilon;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    D(i, i) = 1.0;
    if (i > 0) D(i, i - 1) = -1.0;
  }
  const std::vector<double> ones(static_cast<std::size_t>(M), 1.0);
  const Eigen::MatrixXd W1 = dense_weighting(ones, a, M);
  const Eigen::MatrixXd WF = dense_weighting(fprime, a, M);
  const Eigen::MatrixXd X = D.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(W1));
  Eigen::MatrixXd Afactor = dense_first_order_gamma(gamma, a, eps, M);
  Afactor += eps * eps * WF * X;  // det(D) = 1: unit lower triangular
  return logdet_dense(Afactor);
}

BoundaryDemo naive_second_order_boundary_demo(double gamma, std::span<const double> fprime,
                                              const model::TimeGrid& grid) {
  const int M = grid.M;
  if (M < 3) throw std::invalid_argument("boundary demo needs M >= 3");
  const double eps = grid.epsilon;

  // Centered interior rows i = 1..M-1 (eps^2-scaled), unknowns x_1..x_M.
  auto interior = [&](Eigen::MatrixXd& A, bool free_op) {
    for (int i = 1; i < M; ++i) {
      const double g = free_op ? 0.0 : gamma;
      const double fp = free_op ? 0.0 : fprime[static_cast<std::size_t>(i - 1)];
      if (i - 2 >= 0) A(i - 1, i - 2) = 1.0 - 0.5 * eps * g;
      A(i - 1, i - 1) = -2.0 + eps * eps * fp;
      A(i - 1, i) = 1.0 + 0.5 * eps * g;
    }
  };

  auto with_second_difference_row = [&](bool free_op) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
    interior(A, free_op);
    const double g = free_op ? 0.0 : gamma;
    const double fp = free_op ? 0.0 : fprime[static_cast<std::size_t>(M - 1)];
    A(M - 1, M - 1) = 1.0 + eps * g + eps * eps * fp;
    A(M - 1, M - 2) = -2.0 - eps * g;
    A(M - 1, M - 3) = 1.0;
    return A;
  };
  auto with_velocity_row = [&](bool free_op) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
    interior(A, free_op);
    (void)free_op;
    A(M - 1, M - 1) = 1.0;
    A(M - 1, M - 2) = -1.0;
    return A;
  };

  BoundaryDemo demo;
  demo.logdet_second_difference_row =
      logdet_dense(with_second_difference_row(false)).value -
      logdet_dense(with_second_difference_row(true)).value;
  demo.logdet_velocity_row = logdet_dense(with_velocity_row(false)).value -
                             logdet_dense(with_velocity_row(true)).value;
  demo.difference = std::abs(demo.logdet_second_difference_row - demo.logdet_velocity_row);
  return demo;
}

}  // namespace holang::determinant
