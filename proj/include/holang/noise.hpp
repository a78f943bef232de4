#pragma once

// Samplers for the sliced noises and statistical whiteness checks.
//
// Slicing convention: a white noise has i.i.d. centered Gaussian slices of
// variance 1/epsilon (the sliced delta function is Kronecker/epsilon).
// Auxiliary channels carry nu_n = sqrt(sigma_n) * Lambda^{-1} w with w white
// and Lambda the causal (zero initial data, lower-triangular) slicing of the
// channel operator, so Lambda nu_n = sqrt(sigma_n) w holds exactly per
// realization and the assembled noise is white slice by slice.

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "holang/model.hpp"
#include "holang/rng.hpp"

namespace holang::noise {

struct NoiseSample {
  int channel = 0;
  std::vector<double> values;  // length grid.M; values[i] drives step i -> i+1
  model::TimeGrid grid;
};

// Causal banded Toeplitz slicing of a polynomial in d/dt, acting on
// sequences with zero initial data.
struct SlicedLambda {
  std::vector<double> stencil;  // (L f)_i = sum_r stencil[r] * f_{i-r}
  double epsilon = 0.0;

  static SlicedLambda from_coeffs(std::span<const double> dt_poly, double epsilon);
  void apply(std::span<const double> in, std::span<double> out) const;
  void solve(std::span<const double> in, std::span<double> out) const;  // forward substitution
  Eigen::MatrixXd dense(int M) const;
};

NoiseSample sample_white(const model::TimeGrid& grid, rng::NormalStream& stream);

// nu_n = sqrt(sigma_n) Lambda^{-1} w; sliced covariance sigma_n (L^T L)^{-1} / eps.
NoiseSample sample_aux(const model::TimeGrid& grid, double sigma_n,
                       std::span<const double> lambda_coeffs, rng::NormalStream& stream);

// eta = nu_N + sum_n Lambda_{N-n} nu_n, slice by slice.
NoiseSample assemble_combined(const NoiseSample& nu_top,
                              std::span<const NoiseSample> aux,
                              std::span<const std::vector<double>> lambda_coeffs);

struct CovarianceReport {
  Eigen::MatrixXd estimate;  // symmetric sample covariance
  Eigen::MatrixXd stderr_;   // elementwise standard errors
  Eigen::MatrixXd z;         // (estimate - target) / stderr, target = I/eps
  double max_abs_z = 0.0;
  bool pass = false;
  long samples = 0;
  double epsilon = 0.0;

  void write_csv(std::ostream& os) const;
};

// Streaming covariance accumulation (the sample count can be large).
class WhitenessAccumulator {
 public:
  explicit WhitenessAccumulator(int M);
  void add(std::span<const double> values);
  CovarianceReport report(double epsilon, double z_threshold = 5.0) const;

 private:
  int M_;
  long count_ = 0;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd cross_;
};

// Covariance of a sample collection against (1/eps) I. Requires >= 1000
// samples.
CovarianceReport whiteness_test(std::span<const NoiseSample> samples, double z_threshold = 5.0);

// Mixes the slice axis by an orthogonal matrix. A^T A = I is checked to 1e-12.
NoiseSample orthogonal_mix(const NoiseSample& sample, const Eigen::MatrixXd& A);
std::vector<NoiseSample> orthogonal_mix(std::span<const NoiseSample> samples,
                                        const Eigen::MatrixXd& A);

// M x M Householder reflection from a deterministic stream (test utility).
Eigen::MatrixXd random_householder(int M, rng::NormalStream& stream);

}  // namespace holang::noise
