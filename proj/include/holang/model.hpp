#pragma once

// Declarative process specifications and their first-order reductions.
//
// A process of order N is
//   L_t = d^N x + sum_{n=1..N} gamma_{n-1} d^{n-1} x + F(x) = eta,
// equivalently the coupled system
//   L_N = xdot_N + sum gamma_{n-1} x_n + F(x_1),   L_n = xdot_n - x_{n+1},
// with x_n = d^{n-1} x. gamma_N == 1 throughout. For N = 2 the friction may
// instead be a function gamma(x); that variant is reduced through the split
// lambda_x' = gamma - 1, lambda_v = F - lambda_x.

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace holang::model {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Dense polynomial, ascending coefficients: p(x) = sum coeffs[k] x^k.
struct Polynomial {
  std::vector<double> coeffs;

  Polynomial() = default;
  explicit Polynomial(std::vector<double> c) : coeffs(std::move(c)) {}

  double operator()(double x) const;
  Polynomial derivative() const;
  Polynomial antiderivative() const;  // constant of integration 0
  int degree() const { return coeffs.empty() ? 0 : static_cast<int>(coeffs.size()) - 1; }
  bool operator==(const Polynomial&) const = default;
};

struct TimeGrid {
  double epsilon = 0.0;
  int M = 0;

  TimeGrid() = default;
  TimeGrid(double eps, int slices);
  double time(int i) const { return epsilon * i; }
  double horizon() const { return epsilon * M; }
  bool operator==(const TimeGrid&) const = default;
};

struct SigmaVector {
  std::vector<double> sigmas;  // sigma_1..sigma_{N-1}

  SigmaVector() = default;
  explicit SigmaVector(std::vector<double> s);
  double total() const;
  bool empty() const { return sigmas.empty(); }
  bool operator==(const SigmaVector&) const = default;
  static SigmaVector zeros(int order) { return SigmaVector(std::vector<double>(order > 0 ? order - 1 : 0, 0.0)); }
};

struct SlicingParam {
  double a = 0.0;  // 0 = Ito (prepoint), 1/2 = Stratonovich (midpoint)
  SlicingParam() = default;
  explicit SlicingParam(double a_);
  bool operator==(const SlicingParam&) const = default;
};

struct ConstCoeffs {
  std::vector<double> gamma;  // gamma_0..gamma_{N-1}
  bool operator==(const ConstCoeffs&) const = default;
};

// x-dependent friction (order 2 only). lambda_x is the antiderivative of
// gamma - 1 with lambda_x(0) = 0.
struct StateFriction {
  Polynomial gamma;
  Polynomial lambda_x;
  double check_lo = -2.0, check_hi = 2.0;
  bool operator==(const StateFriction&) const = default;
};

struct ProcessSpec {
  int order = 1;
  std::variant<ConstCoeffs, StateFriction> friction = ConstCoeffs{{0.0}};
  Polynomial force;

  bool has_const_coeffs() const { return std::holds_alternative<ConstCoeffs>(friction); }
  const ConstCoeffs& const_coeffs() const;
  const StateFriction& state_friction() const;
  // gamma_k with gamma_N == 1 (const-coefficient friction only).
  double gamma_tilde(int k) const;

  double F(double x) const { return force(x); }
  double Fp(double x) const;
  double Fpp(double x) const;

  static ProcessSpec make_const(int order, std::vector<double> gamma, Polynomial force);
  static ProcessSpec make_state_friction(Polynomial gamma, Polynomial force,
                                         double check_lo = -2.0, double check_hi = 2.0);

  bool operator==(const ProcessSpec& o) const {
    return order == o.order && friction == o.friction && force == o.force;
  }

 private:
  mutable Polynomial force_d_, force_dd_;
  mutable bool derivs_ready_ = false;
  void ensure_derivs() const;
};

// Per-channel noise description for the reduced system.
struct ChannelNoise {
  enum class Mode { off, white, aux };
  Mode mode = Mode::off;
  double sigma_n = 0.0;               // aux weight, or 1 - sigma for the white channel
  std::vector<double> lambda_coeffs;  // ascending d/dt-polynomial of the aux operator
};

struct FirstOrderSystem {
  enum class Kind { companion, state_friction };
  Kind kind = Kind::companion;
  int dimension = 1;
  ProcessSpec spec;
  SigmaVector sigma;
  Polynomial lambda_x, lambda_v;  // state_friction only

  void drift(std::span<const double> x, std::span<double> out) const;
  // J[r][c] = d drift_r / d x_c, row-major into out (dimension^2).
  void drift_jacobian(std::span<const double> x, std::span<double> out) const;
  std::vector<ChannelNoise> channel_plan() const;
};

// Reduction of a const-coefficient process of order N to the N-dimensional
// coupled first-order system. State-friction specs are rejected here; they
// go through first_order_state_friction.
FirstOrderSystem reduce_to_first_order(const ProcessSpec& spec, const SigmaVector& sigma);

// The order-2 x-dependent-friction system
//   L_v = vdot + v + lambda_v(x),   L_x = xdot - v + lambda_x(x)
// with independent noises weighted as for unit friction.
FirstOrderSystem first_order_state_friction(const ProcessSpec& spec, double sigma);

// lambda_x(x) = int_0^x (gamma(u) - 1) du, lambda_v = F - lambda_x.
std::pair<Polynomial, Polynomial> lambda_split(const Polynomial& gamma, const Polynomial& force);
std::pair<std::function<double(double)>, std::function<double(double)>> lambda_split(
    std::function<double(double)> gamma, std::function<double(double)> force,
    double lo, double hi, double tol = 1e-12);

// Coefficients (ascending in d/dt) of the auxiliary operator applied to
// channel n < N:  Lambda_{N-n} = sum_{m=0..N-n} gamma_{N-m} d^{N-n-m}.
std::vector<double> lambda_operator_coeffs(const ProcessSpec& spec, int n);

// Adaptive Simpson quadrature; throws with the worst subinterval on failure.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-12);

// ---------------------------------------------------------------------------
// Run configuration (JSON). parse -> serialize -> parse is the identity.

struct RunConfig {
  ProcessSpec process;
  TimeGrid grid{0.01, 1000};
  SigmaVector sigma;
  SlicingParam slicing;
  long K = 1000;
  std::uint64_t seed = 1;
  long burn_in = -1;  // slices; -1 = 10 relaxation times from linearization

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& json_text);
std::string serialize_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);  // FNV-1a of the serialization
std::string hash_hex(std::uint64_t h);

}  // namespace holang::model
