#include "holang/noise.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace holang::noise {

SlicedLambda SlicedLambda::from_coeffs(std::span<const double> dt_poly, double epsilon) {
  if (dt_poly.empty()) throw std::invalid_argument("empty operator polynomial");
  SlicedLambda L;
  L.epsilon = epsilon;
  const int B = static_cast<int>(dt_poly.size()) - 1;
  L.stencil.assign(static_cast<std::size_t>(B) + 1, 0.0);
  // d/dt -> (I - S)/eps; D^k contributes (-1)^r C(k,r)/eps^k at shift r.
  for (int k = 0; k <= B; ++k) {
    const double ck = dt_poly[static_cast<std::size_t>(k)];
    if (ck == 0.0) continue;
    double binom = 1.0;
    const double scale = ck / std::pow(epsilon, k);
    for (int r = 0; r <= k; ++r) {
      L.stencil[static_cast<std::size_t>(r)] += (r % 2 == 0 ? 1.0 : -1.0) * binom * scale;
      binom = binom * (k - r) / (r + 1);
    }
  }
  if (L.stencil[0] == 0.0) throw std::runtime_error("sliced operator has zero leading weight");
  return L;
}

void SlicedLambda::apply(std::span<const double> in, std::span<double> out) const {
  const int M = static_cast<int>(in.size());
  const int B = static_cast<int>(stencil.size()) - 1;
  for (int i = 0; i < M; ++i) {
    double v = 0.0;
    for (int r = 0; r <= B && r <= i; ++r) v += stencil[static_cast<std::size_t>(r)] * in[i - r];
    out[i] = v;
  }
}

void SlicedLambda::solve(std::span<const double> in, std::span<double> out) const {
  const int M = static_cast<int>(in.size());
  const int B = static_cast<int>(stencil.size()) - 1;
  for (int i = 0; i < M; ++i) {
    double v = in[i];
    for (int r = 1; r <= B && r <= i; ++r) v -= stencil[static_cast<std::size_t>(r)] * out[i - r];
    out[i] = v / stencil[0];
  }
}

Eigen::MatrixXd SlicedLambda::dense(int M) const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  const int B = static_cast<int>(stencil.size()) - 1;
  for (int i = 0; i < M; ++i) {
    for (int r = 0; r <= B && r <= i; ++r) A(i, i - r) = stencil[static_cast<std::size_t>(r)];
  }
  return A;
}

NoiseSample sample_white(const model::TimeGrid& grid, rng::NormalStream& stream) {
  NoiseSample s;
  s.grid = grid;
  s.values.resize(static_cast<std::size_t>(grid.M));
  const double scale = 1.0 / std::sqrt(grid.epsilon);
  for (auto& v : s.values) v = scale * stream.next_normal();
  return s;
}

NoiseSample sample_aux(const model::TimeGrid& grid, double sigma_n,
                       std::span<const double> lambda_coeffs, rng::NormalStream& stream) {
  if (!(sigma_n > 0.0)) throw std::invalid_argument("aux channel needs sigma_n > 0");
  const SlicedLambda L = SlicedLambda::from_coeffs(lambda_coeffs, grid.epsilon);
  NoiseSample w = sample_white(grid, stream);
  NoiseSample out;
  out.grid = grid;
  out.values.resize(w.values.size());
  L.solve(w.values, out.values);
  const double scale = std::sqrt(sigma_n);
  for (auto& v : out.values) v *= scale;
  return out;
}

NoiseSample assemble_combined(const NoiseSample& nu_top,
                              std::span<const NoiseSample> aux,
                              std::span<const std::vector<double>> lambda_coeffs) {
  if (aux.size() != lambda_coeffs.size()) {
    throw std::invalid_argument("one operator per auxiliary channel required");
  }
  NoiseSample eta = nu_top;
  std::vector<double> tmp(eta.values.size());
  for (std::size_t n = 0; n < aux.size(); ++n) {
    if (aux[n].grid.M != eta.grid.M || aux[n].grid.epsilon != eta.grid.epsilon) {
      throw std::invalid_argument("auxiliary channel grid mismatch");
    }
    const SlicedLambda L = SlicedLambda::from_coeffs(lambda_coeffs[n], eta.grid.epsilon);
    L.apply(aux[n].values, tmp);
    for (std::size_t i = 0; i < tmp.size(); ++i) eta.values[i] += tmp[i];
  }
  return eta;
}

WhitenessAccumulator::WhitenessAccumulator(int M)
    : M_(M), sum_(Eigen::VectorXd::Zero(M)), cross_(Eigen::MatrixXd::Zero(M, M)) {}

void WhitenessAccumulator::add(std::span<const double> values) {
  if (static_cast<int>(values.size()) != M_) throw std::invalid_argument("sample length mismatch");
  Eigen::Map<const Eigen::VectorXd> v(values.data(), M_);
  sum_ += v;
  cross_.selfadjointView<Eigen::Lower>().rankUpdate(v, 1.0);
  ++count_;
}

CovarianceReport WhitenessAccumulator::report(double epsilon, double z_threshold) const {
  if (count_ < 2) throw std::runtime_error("too few samples for a covariance estimate");
  CovarianceReport r;
  r.samples = count_;
  r.epsilon = epsilon;
  const double K = static_cast<double>(count_);
  const Eigen::VectorXd mean = sum_ / K;
  Eigen::MatrixXd cov = Eigen::MatrixXd(cross_.selfadjointView<Eigen::Lower>()) / K -
                        mean * mean.transpose();
  cov *= K / (K - 1.0);
  r.estimate = cov;
  r.stderr_.resize(M_, M_);
  r.z.resize(M_, M_);
  const double target_diag = 1.0 / epsilon;
  double worst = 0.0;
  for (int i = 0; i < M_; ++i) {
    for (int j = 0; j < M_; ++j) {
      // Gaussian plug-in: Var(C_ij) = (C_ii C_jj + C_ij^2) / K.
      const double var = (cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / K;
      const double se = std::sqrt(std::max(var, 1e-300));
      const double target = i == j ? target_diag : 0.0;
      r.stderr_(i, j) = se;
      r.z(i, j) = (cov(i, j) - target) / se;
      worst = std::max(worst, std::abs(r.z(i, j)));
    }
  }
  r.max_abs_z = worst;
  r.pass = worst < z_threshold;
  return r;
}

CovarianceReport whiteness_test(std::span<const NoiseSample> samples, double z_threshold) {
  if (samples.size() < 1000) {
    throw std::invalid_argument("whiteness test needs at least 1000 samples");
  }
  WhitenessAccumulator acc(samples[0].grid.M);
  for (const auto& s : samples) acc.add(s.values);
  return acc.report(samples[0].grid.epsilon, z_threshold);
}

void CovarianceReport::write_csv(std::ostream& os) const {
  os << "# samples=" << samples << " epsilon=" << epsilon << " max_abs_z=" << max_abs_z
     << " pass=" << (pass ? 1 : 0) << "\n";
  os << "i,j,estimate,stderr,z\n";
  char buf[160];
  for (int i = 0; i < estimate.rows(); ++i) {
    for (int j = i; j < estimate.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", i, j, estimate(i, j),
                    stderr_(i, j), z(i, j));
      os << buf;
    }
  }
}

namespace {

void check_orthogonal(const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd gram = A.transpose() * A;
  const double dev = (gram - Eigen::MatrixXd::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-12) {
    throw std::invalid_argument("mixing matrix is not orthogonal (|A^T A - I| = " +
                                std::to_string(dev) + ")");
  }
}

}  // namespace

NoiseSample orthogonal_mix(const NoiseSample& sample, const Eigen::MatrixXd& A) {
  check_orthogonal(A);
  if (A.rows() != sample.grid.M) throw std::invalid_argument("mixing matrix size mismatch");
  NoiseSample out = sample;
  Eigen::Map<const Eigen::VectorXd> v(sample.values.data(), sample.grid.M);
  Eigen::Map<Eigen::VectorXd>(out.values.data(), out.grid.M) = A * v;
  return out;
}

std::vector<NoiseSample> orthogonal_mix(std::span<const NoiseSample> samples,
                                        const Eigen::MatrixXd& A) {
  check_orthogonal(A);
  std::vector<NoiseSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (A.rows() != s.grid.M) throw std::invalid_argument("mixing matrix size mismatch");
    NoiseSample m = s;
    Eigen::Map<const Eigen::VectorXd> v(s.values.data(), s.grid.M);
    Eigen::Map<Eigen::VectorXd>(m.values.data(), m.grid.M) = A * v;
    out.push_back(std::move(m));
  }
  return out;
}

Eigen::MatrixXd random_householder(int M, rng::NormalStream& stream) {
  Eigen::VectorXd v(M);
  for (int i = 0; i < M; ++i) v(i) = stream.next_normal();
  v.normalize();
  return Eigen::MatrixXd::Identity(M, M) - 2.0 * v * v.transpose();
}

}  // namespace holang::noise
