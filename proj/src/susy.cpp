#include "holang/susy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "holang/noise.hpp"

namespace holang::susy {

using grassmann::Derivation;
using grassmann::GeneratorId;
using grassmann::GrassmannPoly;
using grassmann::State;
using grassmann::StatePoly;

namespace {

double binom(int n, int k) {
  double b = 1.0;
  for (int r = 0; r < k; ++r) b = b * (n - r) / (r + 1);
  return b;
}

// Weight of x_j in the backward k-difference of x ending at slice i,
// divided by eps^k. Zero outside the stencil.
double backward_diff_weight(int i, int j, int k, double eps) {
  const int d = i - j;
  if (d < 0 || d > k) return 0.0;
  const double w = binom(k, d) / std::pow(eps, k);
  return (d % 2 == 0) ? w : -w;
}

}  // namespace

double weighted_l1(const GrassmannPoly& p, double epsilon) {
  double s = 0.0;
  for (const auto& [m, c] : p.terms()) s += std::abs(c);
  return epsilon * s;
}

// ---------------------------------------------------------------------------
// Canonical construction

namespace {

struct CanonicalData {
  model::ProcessSpec spec;
  model::SigmaVector sigma;
  model::TimeGrid grid;
  double a = 0.0;
  VarLayout layout;
  std::vector<Eigen::MatrixXd> Dq;  // operator matrix of the momentum weight per channel

  int N() const { return spec.order; }
  int M() const { return grid.M; }

  // Sliced Langevin value L_{n,i}(x), i = 1..M.
  double L(int n, int i, State s) const {
    const double eps = grid.epsilon;
    const int N_ = N();
    auto x = [&](int m, int j) { return s[layout.x_index(m, j)]; };
    double v = (x(n, i) - x(n, i - 1)) / eps;
    if (n < N_) {
      v -= a * x(n + 1, i) + (1.0 - a) * x(n + 1, i - 1);
    } else {
      for (int m = 1; m <= N_; ++m) {
        v += spec.gamma_tilde(m - 1) * (a * x(m, i) + (1.0 - a) * x(m, i - 1));
      }
      v += a * spec.F(x(1, i)) + (1.0 - a) * spec.F(x(1, i - 1));
    }
    return v;
  }

  // dL_{n,i} / dx_{m,j}; F' evaluated at the slice of the differentiated
  // variable (joint slicing of drift-force factors).
  double dL(int n, int i, int m, int j, State s) const {
    const double eps = grid.epsilon;
    const int N_ = N();
    double w = 0.0;
    const double slice_w = (j == i) ? a : (j == i - 1 ? 1.0 - a : 0.0);
    if (m == n) {
      if (j == i) w += 1.0 / eps;
      if (j == i - 1) w -= 1.0 / eps;
    }
    if (n < N_ && m == n + 1) w -= slice_w;
    if (n == N_ && slice_w != 0.0) {
      w += spec.gamma_tilde(m - 1) * slice_w;
      if (m == 1) w += slice_w * spec.Fp(s[layout.x_index(1, j)]);
    }
    return w;
  }

  double bosonic(State s) const {
    const double eps = grid.epsilon;
    const int N_ = N(), M_ = M();
    double v = 0.0;
    Eigen::VectorXd q(M_);
    for (int n = 1; n <= N_; ++n) {
      for (int i = 1; i <= M_; ++i) q(i - 1) = s[layout.q_index(n, i)];
      v += 0.5 * eps * q.dot(Dq[static_cast<std::size_t>(n - 1)] * q);
      for (int i = 1; i <= M_; ++i) v -= eps * q(i - 1) * L(n, i, s);
    }
    return v;
  }

  GrassmannPoly fermionic(State s) const {
    const double eps = grid.epsilon;
    const int N_ = N(), M_ = M();
    GrassmannPoly out;
    for (int n = 1; n <= N_; ++n) {
      for (int i = 1; i <= M_; ++i) {
        const GrassmannPoly cb = GrassmannPoly::generator(GeneratorId::cbar(n, i));
        GrassmannPoly row;
        for (int m = 1; m <= N_; ++m) {
          for (int j = std::max(1, i - 1); j <= i; ++j) {
            const double w = dL(n, i, m, j, s);
            if (w != 0.0) row += w * GrassmannPoly::generator(GeneratorId::c(m, j));
          }
        }
        out += eps * multiply(cb, row);
      }
    }
    return out;
  }

  GrassmannPoly value(State s) const {
    GrassmannPoly p = fermionic(s);
    p += GrassmannPoly::scalar(bosonic(s));
    return p;
  }

  GrassmannPoly partial(int var, State s) const {
    const double eps = grid.epsilon;
    const int N_ = N(), M_ = M();
    GrassmannPoly out;
    if (var >= layout.n_x()) {
      // d/dq_{n,i}: from the momentum quadratic form and the -q L term.
      const int rel = var - layout.n_x();
      const int n = rel / M_ + 1;
      const int i = rel % M_ + 1;
      double v = -eps * L(n, i, s);
      const auto& D = Dq[static_cast<std::size_t>(n - 1)];
      for (int j = 1; j <= M_; ++j) v += eps * D(i - 1, j - 1) * s[layout.q_index(n, j)];
      out += GrassmannPoly::scalar(v);
      return out;
    }
    const int m = var / (M_ + 1) + 1;
    const int j = var % (M_ + 1);
    // Bosonic part: -eps sum q_{n,i} dL_{n,i}/dx_{m,j} over supported rows.
    double v = 0.0;
    for (int i = std::max(1, j); i <= std::min(M_, j + 1); ++i) {
      for (int n = 1; n <= N_; ++n) {
        const double w = dL(n, i, m, j, s);
        if (w != 0.0) v -= eps * s[layout.q_index(n, i)] * w;
      }
    }
    if (v != 0.0) out += GrassmannPoly::scalar(v);
    // Fermionic part: the F'' terms (channel-N row coupled to channel 1).
    if (m == 1 && j >= 1) {
      const double fpp = spec.Fpp(s[layout.x_index(1, j)]);
      if (fpp != 0.0) {
        const GrassmannPoly cj = GrassmannPoly::generator(GeneratorId::c(1, j));
        out += (eps * a * fpp) *
               multiply(GrassmannPoly::generator(GeneratorId::cbar(N_, j)), cj);
        if (j + 1 <= M_) {
          out += (eps * (1.0 - a) * fpp) *
                 multiply(GrassmannPoly::generator(GeneratorId::cbar(N_, j + 1)), cj);
        }
      }
    }
    return out;
  }
};

}  // namespace

std::pair<SlicedAction, Supercharge> build_canonical(const model::ProcessSpec& spec,
                                                     const model::SigmaVector& sigma,
                                                     const model::TimeGrid& grid, double a) {
  if (!spec.has_const_coeffs()) {
    throw std::invalid_argument("canonical construction needs const-coefficient friction");
  }
  if (!(sigma.total() < 1.0)) throw std::invalid_argument("sigma total must be < 1");
  if (static_cast<int>(sigma.sigmas.size()) != spec.order - 1) {
    throw std::invalid_argument("sigma must have N-1 entries");
  }
  const int N = spec.order, M = grid.M;

  auto data = std::make_shared<CanonicalData>();
  data->spec = spec;
  data->sigma = sigma;
  data->grid = grid;
  data->a = a;
  data->layout = VarLayout{N, N, N, M};
  data->Dq.resize(static_cast<std::size_t>(N));
  for (int n = 1; n < N; ++n) {
    const double sn = sigma.sigmas[static_cast<std::size_t>(n - 1)];
    Eigen::MatrixXd& D = data->Dq[static_cast<std::size_t>(n - 1)];
    if (sn > 0.0) {
      const auto Lam = noise::SlicedLambda::from_coeffs(
          model::lambda_operator_coeffs(spec, n), grid.epsilon);
      const Eigen::MatrixXd Ld = Lam.dense(M);
      D = sn * (Ld.transpose() * Ld).inverse();
    } else {
      D = Eigen::MatrixXd::Zero(M, M);
    }
  }
  data->Dq[static_cast<std::size_t>(N - 1)] =
      (1.0 - sigma.total()) * Eigen::MatrixXd::Identity(M, M);

  SlicedAction S;
  S.kind = ActionKind::canonical;
  S.layout = data->layout;
  S.a = a;
  S.grid = grid;
  S.bosonic = [data](State s) { return data->bosonic(s); };
  S.fermionic = [data](State s) { return data->fermionic(s); };
  S.poly.value = [data](State s) { return data->value(s); };
  S.poly.partial = [data](int var, State s) { return data->partial(var, s); };

  Supercharge Q;
  Q.kind = ActionKind::canonical;
  Q.layout = data->layout;
  for (int n = 1; n <= N; ++n) {
    for (int i = 1; i <= M; ++i) {
      const int xv = data->layout.x_index(n, i);
      Q.D.variable_entries.push_back(
          {xv, "c(" + std::to_string(n) + "," + std::to_string(i) + ") d/dx",
           [n, i](State) { return GrassmannPoly::generator(GeneratorId::c(n, i)); }, nullptr});
      const int qv = data->layout.q_index(n, i);
      Q.D.generator_entries.push_back(
          {GeneratorId::cbar(n, i),
           "q(" + std::to_string(n) + "," + std::to_string(i) + ") d/dcbar",
           [qv](State s) { return GrassmannPoly::scalar(s[qv]); },
           [qv](int var, State) {
             return var == qv ? GrassmannPoly::scalar(1.0) : GrassmannPoly::zero();
           }});
    }
  }
  return {std::move(S), std::move(Q)};
}

// ---------------------------------------------------------------------------
// Lagrangian construction, general N

namespace {

struct LagrangianData {
  model::ProcessSpec spec;
  model::TimeGrid grid;
  double a = 0.5;
  VarLayout layout;

  int N() const { return spec.order; }
  int M() const { return grid.M; }
  double x(State s, int i) const { return s[layout.x_index(1, i)]; }

  // Backward k-difference of the path ending at slice i, / eps^k.
  double diff(State s, int i, int k) const {
    double v = 0.0;
    for (int r = 0; r <= k; ++r) {
      v += backward_diff_weight(i, i - r, k, grid.epsilon) * x(s, i - r);
    }
    return v;
  }

  // Sliced order-N operator value, defined for i >= N.
  double L(State s, int i) const {
    const int N_ = N();
    double v = diff(s, i, N_);
    for (int n = 1; n <= N_; ++n) {
      const double g = spec.gamma_tilde(n - 1);
      if (g == 0.0) continue;
      v += g * (a * diff(s, i, n - 1) + (1.0 - a) * diff(s, i - 1, n - 1));
    }
    v += a * spec.F(x(s, i)) + (1.0 - a) * spec.F(x(s, i - 1));
    return v;
  }

  double dLdx(State s, int i, int j) const {
    const int N_ = N();
    const double eps = grid.epsilon;
    double w = backward_diff_weight(i, j, N_, eps);
    for (int n = 1; n <= N_; ++n) {
      const double g = spec.gamma_tilde(n - 1);
      if (g == 0.0) continue;
      w += g * (a * backward_diff_weight(i, j, n - 1, eps) +
                (1.0 - a) * backward_diff_weight(i - 1, j, n - 1, eps));
    }
    if (j == i) w += a * spec.Fp(x(s, j));
    if (j == i - 1) w += (1.0 - a) * spec.Fp(x(s, j));
    return w;
  }

  // L padded by zero outside [N, M]: the variation of the truncated S_b
  // produces exactly these padded stencils.
  double L_padded(State s, int i) const {
    if (i < N() || i > M()) return 0.0;
    return L(s, i);
  }
  double dLdx_padded(State s, int i, int j) const {
    if (i < N() || i > M()) return 0.0;
    return dLdx(s, i, j);
  }

  // R_{n,i} = sum_k (-1)^k gamma_{n+k} d^k L at slice i. The derivatives are
  // forward differences of the padded L sequence: these are the adjoints of
  // the backward stencils inside S_b, which makes the variation cancel to
  // O(eps^2) per interior row and leaves the continuum boundary term
  // -R_n(T) c_n(T) on the final rows.
  double R(State s, int n, int i) const {
    const int N_ = N();
    const double eps = grid.epsilon;
    double v = 0.0;
    for (int k = 0; k <= N_ - n; ++k) {
      const double g = spec.gamma_tilde(n + k);
      if (g == 0.0) continue;
      double dk = 0.0;
      double b = 1.0;
      for (int r = 0; r <= k; ++r) {  // (fwd^k L)_i = sum_r (-1)^{k-r} C(k,r) L_{i+r} / eps^k
        dk += ((k - r) % 2 == 0 ? 1.0 : -1.0) * b * L_padded(s, i + r);
        b = b * (k - r) / (r + 1);
      }
      v += (k % 2 == 0 ? 1.0 : -1.0) * g * dk / std::pow(eps, k);
    }
    return v;
  }

  double dRdx(State s, int n, int i, int var_j) const {
    const int N_ = N();
    const double eps = grid.epsilon;
    double v = 0.0;
    for (int k = 0; k <= N_ - n; ++k) {
      const double g = spec.gamma_tilde(n + k);
      if (g == 0.0) continue;
      double dk = 0.0;
      double b = 1.0;
      for (int r = 0; r <= k; ++r) {
        dk += ((k - r) % 2 == 0 ? 1.0 : -1.0) * b * dLdx_padded(s, i + r, var_j);
        b = b * (k - r) / (r + 1);
      }
      v += (k % 2 == 0 ? 1.0 : -1.0) * g * dk / std::pow(eps, k);
    }
    return v;
  }

  double bosonic(State s) const {
    double v = 0.0;
    for (int i = N(); i <= M(); ++i) {
      const double Li = L(s, i);
      v += 0.5 * grid.epsilon * Li * Li;
    }
    return v;
  }

  GrassmannPoly fermionic(State s) const {
    const double eps = grid.epsilon;
    const int N_ = N(), M_ = M();
    GrassmannPoly out;
    auto cgen = [](int n, int i) { return GrassmannPoly::generator(GeneratorId::c(n, i)); };
    for (int i = 1; i <= M_; ++i) {
      for (int n = 1; n <= N_; ++n) {
        GrassmannPoly row = cgen(n, i);  // kinetic c_{n,i} - c_{n,i-1}
        if (i > 1) row -= cgen(n, i - 1);
        GrassmannPoly coupling;
        if (n < N_) {
          coupling -= a * cgen(n + 1, i);
          if (i > 1) coupling -= (1.0 - a) * cgen(n + 1, i - 1);
        } else {
          for (int m = 1; m <= N_; ++m) {
            const double g = spec.gamma_tilde(m - 1);
            if (g == 0.0) continue;
            coupling += g * a * cgen(m, i);
            if (i > 1) coupling += g * (1.0 - a) * cgen(m, i - 1);
          }
          coupling += a * spec.Fp(x(s, i)) * cgen(1, i);
          if (i > 1) coupling += (1.0 - a) * spec.Fp(x(s, i - 1)) * cgen(1, i - 1);
        }
        row += eps * coupling;
        out += multiply(GrassmannPoly::generator(GeneratorId::cbar(n, i)), row);
      }
    }
    return out;
  }

  GrassmannPoly value(State s) const {
    GrassmannPoly p = fermionic(s);
    p += GrassmannPoly::scalar(bosonic(s));
    return p;
  }

  GrassmannPoly partial(int var, State s) const {
    const double eps = grid.epsilon;
    const int N_ = N(), M_ = M();
    const int j = var;  // x-only layout
    GrassmannPoly out;
    double v = 0.0;
    for (int i = std::max(N_, j); i <= std::min(M_, j + N_); ++i) {
      const double w = dLdx(s, i, j);
      if (w != 0.0) v += eps * L(s, i) * w;
    }
    if (v != 0.0) out += GrassmannPoly::scalar(v);
    if (j >= 1) {
      const double fpp = spec.Fpp(x(s, j));
      if (fpp != 0.0) {
        const GrassmannPoly cj = GrassmannPoly::generator(GeneratorId::c(1, j));
        out += (eps * a * fpp) *
               multiply(GrassmannPoly::generator(GeneratorId::cbar(N_, j)), cj);
        if (j + 1 <= M_) {
          out += (eps * (1.0 - a) * fpp) *
                 multiply(GrassmannPoly::generator(GeneratorId::cbar(N_, j + 1)), cj);
        }
      }
    }
    return out;
  }
};

}  // namespace

std::pair<SlicedAction, Supercharge> build_lagrangian_N(const model::ProcessSpec& spec,
                                                        const model::TimeGrid& grid, double a) {
  if (!spec.has_const_coeffs()) {
    throw std::invalid_argument("general-N Lagrangian construction needs const coefficients");
  }
  if (grid.M < 2 * spec.order) {
    throw std::invalid_argument("grid too short for the order-N stencils");
  }
  auto data = std::make_shared<LagrangianData>();
  data->spec = spec;
  data->grid = grid;
  data->a = a;
  data->layout = VarLayout{1, 0, spec.order, grid.M};

  SlicedAction S;
  S.kind = ActionKind::lagrangian;
  S.layout = data->layout;
  S.a = a;
  S.grid = grid;
  S.bosonic = [data](State s) { return data->bosonic(s); };
  S.fermionic = [data](State s) { return data->fermionic(s); };
  S.poly.value = [data](State s) { return data->value(s); };
  S.poly.partial = [data](int var, State s) { return data->partial(var, s); };

  Supercharge Q;
  Q.kind = ActionKind::lagrangian;
  Q.layout = data->layout;
  for (int j = 1; j <= grid.M; ++j) {
    Q.D.variable_entries.push_back(
        {data->layout.x_index(1, j), "c(1," + std::to_string(j) + ") d/dx",
         [j](State) { return GrassmannPoly::generator(GeneratorId::c(1, j)); }, nullptr});
  }
  for (int n = 1; n <= spec.order; ++n) {
    for (int i = 1; i <= grid.M; ++i) {
      Q.D.generator_entries.push_back(
          {GeneratorId::cbar(n, i),
           "-R(" + std::to_string(n) + "," + std::to_string(i) + ") d/dcbar",
           [data, n, i](State s) { return GrassmannPoly::scalar(-data->R(s, n, i)); },
           [data, n, i](int var, State s) {
             return GrassmannPoly::scalar(-data->dRdx(s, n, i, var));
           }});
    }
  }
  return {std::move(S), std::move(Q)};
}

// ---------------------------------------------------------------------------
// Lagrangian construction with x-dependent friction (order 2)

namespace {

struct XFrictionData {
  model::ProcessSpec spec;
  model::TimeGrid grid;
  double a = 0.5;
  VarLayout layout;
  model::Polynomial gamma_d;  // gamma'(x)

  int M() const { return grid.M; }
  double x(State s, int i) const { return s[layout.x_index(1, i)]; }
  double gam(double v) const { return spec.state_friction().gamma(v); }

  double Dx(State s, int i) const { return (x(s, i) - x(s, i - 1)) / grid.epsilon; }

  // L_i = (Dx_i - Dx_{i-1})/eps + <gamma(x) Dx>_a + <F(x)>_a, i >= 2.
  double L(State s, int i) const {
    const double eps = grid.epsilon;
    double v = (Dx(s, i) - Dx(s, i - 1)) / eps;
    v += a * gam(x(s, i)) * Dx(s, i) + (1.0 - a) * gam(x(s, i - 1)) * Dx(s, i - 1);
    v += a * spec.F(x(s, i)) + (1.0 - a) * spec.F(x(s, i - 1));
    return v;
  }

  double dLdx(State s, int i, int j) const {
    const double eps = grid.epsilon;
    const int d = i - j;
    if (d < 0 || d > 2) return 0.0;
    double w = 0.0;
    if (d == 0) w += 1.0 / (eps * eps);
    if (d == 1) w += -2.0 / (eps * eps);
    if (d == 2) w += 1.0 / (eps * eps);
    if (d == 0) w += a * (gamma_d(x(s, i)) * Dx(s, i) + gam(x(s, i)) / eps);
    if (d == 1) w += -a * gam(x(s, i)) / eps;
    if (d == 1) w += (1.0 - a) * (gamma_d(x(s, i - 1)) * Dx(s, i - 1) + gam(x(s, i - 1)) / eps);
    if (d == 2) w += -(1.0 - a) * gam(x(s, i - 1)) / eps;
    if (d == 0) w += a * spec.Fp(x(s, i));
    if (d == 1) w += (1.0 - a) * spec.Fp(x(s, i - 1));
    return w;
  }

  double L_padded(State s, int i) const {
    if (i < 2 || i > M()) return 0.0;
    return L(s, i);
  }
  double dLdx_padded(State s, int i, int j) const {
    if (i < 2 || i > M()) return 0.0;
    return dLdx(s, i, j);
  }

  double bosonic(State s) const {
    double v = 0.0;
    for (int i = 2; i <= M(); ++i) {
      const double Li = L(s, i);
      v += 0.5 * grid.epsilon * Li * Li;
    }
    return v;
  }

  // Channels: 1 = x-fermions, 2 = v-fermions. The coefficient signs are the
  // mechanical dL/dx entries of the coupled system; at gamma(x) == 1 the
  // action collapses to the constant-friction Kramers form.
  GrassmannPoly fermionic(State s) const {
    const double eps = grid.epsilon;
    const int M_ = M();
    GrassmannPoly out;
    auto cgen = [](int n, int i) { return GrassmannPoly::generator(GeneratorId::c(n, i)); };
    for (int i = 1; i <= M_; ++i) {
      // cbar_x row: Dc_x + <(gamma-1) c_x>_joint - <c_v>_a
      GrassmannPoly row1 = cgen(1, i);
      if (i > 1) row1 -= cgen(1, i - 1);
      GrassmannPoly coup1;
      coup1 += a * (gam(x(s, i)) - 1.0) * cgen(1, i);
      if (i > 1) coup1 += (1.0 - a) * (gam(x(s, i - 1)) - 1.0) * cgen(1, i - 1);
      coup1 -= a * cgen(2, i);
      if (i > 1) coup1 -= (1.0 - a) * cgen(2, i - 1);
      row1 += eps * coup1;
      out += multiply(GrassmannPoly::generator(GeneratorId::cbar(1, i)), row1);

      // cbar_v row: Dc_v + <c_v>_a + <(F' - gamma + 1) c_x>_joint
      GrassmannPoly row2 = cgen(2, i);
      if (i > 1) row2 -= cgen(2, i - 1);
      GrassmannPoly coup2;
      coup2 += a * cgen(2, i);
      if (i > 1) coup2 += (1.0 - a) * cgen(2, i - 1);
      coup2 += a * (spec.Fp(x(s, i)) - gam(x(s, i)) + 1.0) * cgen(1, i);
      if (i > 1) {
        coup2 += (1.0 - a) * (spec.Fp(x(s, i - 1)) - gam(x(s, i - 1)) + 1.0) * cgen(1, i - 1);
      }
      row2 += eps * coup2;
      out += multiply(GrassmannPoly::generator(GeneratorId::cbar(2, i)), row2);
    }
    return out;
  }

  GrassmannPoly value(State s) const {
    GrassmannPoly p = fermionic(s);
    p += GrassmannPoly::scalar(bosonic(s));
    return p;
  }

  GrassmannPoly partial(int var, State s) const {
    const double eps = grid.epsilon;
    const int M_ = M();
    const int j = var;
    GrassmannPoly out;
    double v = 0.0;
    for (int i = std::max(2, j); i <= std::min(M_, j + 2); ++i) {
      const double w = dLdx(s, i, j);
      if (w != 0.0) v += eps * L(s, i) * w;
    }
    if (v != 0.0) out += GrassmannPoly::scalar(v);
    if (j >= 1) {
      const double gp = gamma_d(x(s, j));
      const double fpp = spec.Fpp(x(s, j));
      const GrassmannPoly cj = GrassmannPoly::generator(GeneratorId::c(1, j));
      if (gp != 0.0) {
        out += (eps * a * gp) * multiply(GrassmannPoly::generator(GeneratorId::cbar(1, j)), cj);
        if (j + 1 <= M_) {
          out += (eps * (1.0 - a) * gp) *
                 multiply(GrassmannPoly::generator(GeneratorId::cbar(1, j + 1)), cj);
        }
      }
      const double mix = fpp - gp;
      if (mix != 0.0) {
        out += (eps * a * mix) * multiply(GrassmannPoly::generator(GeneratorId::cbar(2, j)), cj);
        if (j + 1 <= M_) {
          out += (eps * (1.0 - a) * mix) *
                 multiply(GrassmannPoly::generator(GeneratorId::cbar(2, j + 1)), cj);
        }
      }
    }
    return out;
  }
};

}  // namespace

std::pair<SlicedAction, Supercharge> build_lagrangian_xfriction(const model::ProcessSpec& spec,
                                                                const model::TimeGrid& grid,
                                                                double a) {
  if (spec.has_const_coeffs()) {
    throw std::invalid_argument("x-friction construction needs a state-friction process");
  }
  if (grid.M < 4) throw std::invalid_argument("grid too short for the x-friction stencils");
  auto data = std::make_shared<XFrictionData>();
  data->spec = spec;
  data->grid = grid;
  data->a = a;
  data->layout = VarLayout{1, 0, 2, grid.M};
  data->gamma_d = spec.state_friction().gamma.derivative();

  SlicedAction S;
  S.kind = ActionKind::lagrangian_xfriction;
  S.layout = data->layout;
  S.a = a;
  S.grid = grid;
  S.bosonic = [data](State s) { return data->bosonic(s); };
  S.fermionic = [data](State s) { return data->fermionic(s); };
  S.poly.value = [data](State s) { return data->value(s); };
  S.poly.partial = [data](int var, State s) { return data->partial(var, s); };

  Supercharge Q;
  Q.kind = ActionKind::lagrangian_xfriction;
  Q.layout = data->layout;
  for (int j = 1; j <= grid.M; ++j) {
    Q.D.variable_entries.push_back(
        {data->layout.x_index(1, j), "c(1," + std::to_string(j) + ") d/dx",
         [j](State) { return GrassmannPoly::generator(GeneratorId::c(1, j)); }, nullptr});
  }
  const double eps = grid.epsilon;
  for (int i = 1; i <= grid.M; ++i) {
    // channel 2 (v): R_v = L, zero-padded like the S_b stencils
    Q.D.generator_entries.push_back(
        {GeneratorId::cbar(2, i), "-L(" + std::to_string(i) + ") d/dcbar_v",
         [data, i](State s) { return GrassmannPoly::scalar(-data->L_padded(s, i)); },
         [data, i](int var, State s) {
           return GrassmannPoly::scalar(-data->dLdx_padded(s, i, var));
         }});
    // channel 1 (x): R_x = (-d/dt + 1) L with the forward (adjoint) stencil
    Q.D.generator_entries.push_back(
        {GeneratorId::cbar(1, i), "-((-d/dt+1)L)(" + std::to_string(i) + ") d/dcbar_x",
         [data, i, eps](State s) {
           const double r = -(data->L_padded(s, i + 1) - data->L_padded(s, i)) / eps +
                            data->L_padded(s, i);
           return GrassmannPoly::scalar(-r);
         },
         [data, i, eps](int var, State s) {
           const double r =
               -(data->dLdx_padded(s, i + 1, var) - data->dLdx_padded(s, i, var)) / eps +
               data->dLdx_padded(s, i, var);
           return GrassmannPoly::scalar(-r);
         }});
  }
  return {std::move(S), std::move(Q)};
}

// ---------------------------------------------------------------------------
// Kramers reference forms (two channels written out literally)

grassmann::GrassmannPoly kramers_fermion_action(const model::ProcessSpec& spec,
                                                const model::TimeGrid& grid, double a,
                                                State state) {
  if (spec.order != 2 || !spec.has_const_coeffs() ||
      spec.const_coeffs().gamma[0] != 0.0) {
    throw std::invalid_argument("Kramers reference needs N = 2, gamma_0 = 0");
  }
  const double g = spec.const_coeffs().gamma[1];
  const double eps = grid.epsilon;
  const int M = grid.M;
  const VarLayout layout{1, 0, 2, M};
  auto cgen = [](int n, int i) { return GrassmannPoly::generator(GeneratorId::c(n, i)); };
  auto cbgen = [](int n, int i) { return GrassmannPoly::generator(GeneratorId::cbar(n, i)); };
  auto xval = [&](int i) { return state[layout.x_index(1, i)]; };
  // channels: 1 = x, 2 = v:
  //   cbar_x cdot_x + cbar_v cdot_v - cbar_x c_v + cbar_v c_x F'(x) + g cbar_v c_v
  GrassmannPoly out;
  for (int i = 1; i <= M; ++i) {
    GrassmannPoly rx = cgen(1, i);
    if (i > 1) rx -= cgen(1, i - 1);
    GrassmannPoly rv = cgen(2, i);
    if (i > 1) rv -= cgen(2, i - 1);
    GrassmannPoly cx;  // -<c_v>_a
    cx -= a * cgen(2, i);
    if (i > 1) cx -= (1.0 - a) * cgen(2, i - 1);
    GrassmannPoly cv;  // <F'(x) c_x>_joint + g <c_v>_a
    cv += a * spec.Fp(xval(i)) * cgen(1, i);
    if (i > 1) cv += (1.0 - a) * spec.Fp(xval(i - 1)) * cgen(1, i - 1);
    cv += g * a * cgen(2, i);
    if (i > 1) cv += g * (1.0 - a) * cgen(2, i - 1);
    out += multiply(cbgen(1, i), rx + eps * cx);
    out += multiply(cbgen(2, i), rv + eps * cv);
  }
  return out;
}

Supercharge kramers_supercharge(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                                double a) {
  if (spec.order != 2 || !spec.has_const_coeffs() ||
      spec.const_coeffs().gamma[0] != 0.0) {
    throw std::invalid_argument("Kramers reference needs N = 2, gamma_0 = 0");
  }
  const double g = spec.const_coeffs().gamma[1];
  const double eps = grid.epsilon;
  const int M = grid.M;
  auto data = std::make_shared<LagrangianData>();
  data->spec = spec;
  data->grid = grid;
  data->a = a;
  data->layout = VarLayout{1, 0, 2, M};

  Supercharge Q;
  Q.kind = ActionKind::lagrangian;
  Q.layout = data->layout;
  for (int j = 1; j <= M; ++j) {
    Q.D.variable_entries.push_back(
        {data->layout.x_index(1, j), "c(1," + std::to_string(j) + ") d/dx",
         [j](State) { return GrassmannPoly::generator(GeneratorId::c(1, j)); }, nullptr});
  }
  for (int i = 1; i <= M; ++i) {
    // entry for cbar_v: -L_i (zero-padded)
    Q.D.generator_entries.push_back(
        {GeneratorId::cbar(2, i), "-L d/dcbar_v",
         [data, i](State s) { return GrassmannPoly::scalar(-data->L_padded(s, i)); },
         [data, i](int var, State s) {
           return GrassmannPoly::scalar(-data->dLdx_padded(s, i, var));
         }});
    // entry for cbar_x: -((-d/dt + g) L)_i, forward difference
    Q.D.generator_entries.push_back(
        {GeneratorId::cbar(1, i), "-((-d/dt+g)L) d/dcbar_x",
         [data, i, eps, g](State s) {
           const double r = -(data->L_padded(s, i + 1) - data->L_padded(s, i)) / eps +
                            g * data->L_padded(s, i);
           return GrassmannPoly::scalar(-r);
         },
         [data, i, eps, g](int var, State s) {
           const double r =
               -(data->dLdx_padded(s, i + 1, var) - data->dLdx_padded(s, i, var)) / eps +
               g * data->dLdx_padded(s, i, var);
           return GrassmannPoly::scalar(-r);
         }});
  }
  return Q;
}

// ---------------------------------------------------------------------------
// Checks

namespace {

std::vector<double> random_state(const VarLayout& layout, rng::NormalStream& stream) {
  std::vector<double> s(static_cast<std::size_t>(layout.total()));
  for (auto& v : s) v = stream.next_in(-1.0, 1.0);
  return s;
}

// Random degree <= 2 polynomial with coefficients at most linear in the
// state (so exact second applications are available).
StatePoly random_test_poly(const VarLayout& layout, bool include_cbar,
                           rng::NormalStream& stream) {
  std::vector<GeneratorId> gens;
  for (int n = 1; n <= layout.f_channels; ++n) {
    for (int i = 1; i <= layout.M; ++i) {
      gens.push_back(GeneratorId::c(n, i));
      if (include_cbar) gens.push_back(GeneratorId::cbar(n, i));
    }
  }
  struct TermData {
    double alpha, beta;
    int var;
    grassmann::Monomial mono;
  };
  auto terms = std::make_shared<std::vector<TermData>>();
  const int n_terms = 3;
  for (int t = 0; t < n_terms; ++t) {
    TermData td;
    td.alpha = stream.next_in(-2.0, 2.0);
    td.beta = stream.next_in(-2.0, 2.0);
    td.var = static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(layout.total()));
    const int deg = static_cast<int>(stream.next_u64() % 3);
    std::vector<std::uint32_t> codes;
    while (static_cast<int>(codes.size()) < deg) {
      const auto g = gens[static_cast<std::size_t>(stream.next_u64() % gens.size())];
      if (std::find(codes.begin(), codes.end(), g.code) == codes.end()) codes.push_back(g.code);
    }
    std::sort(codes.begin(), codes.end());
    td.mono = codes;
    terms->push_back(std::move(td));
  }
  StatePoly p;
  p.value = [terms](State s) {
    GrassmannPoly out;
    for (const auto& td : *terms) out.add_term(td.mono, td.alpha + td.beta * s[td.var]);
    return out;
  };
  p.partial = [terms](int var, State) {
    GrassmannPoly out;
    for (const auto& td : *terms) {
      if (td.var == var) out.add_term(td.mono, td.beta);
    }
    return out;
  };
  return p;
}

}  // namespace

double check_nilpotent(const Supercharge& Q, int trials, std::uint64_t seed,
                       bool include_cbar) {
  rng::NormalStream stream(seed, rng::stream_id(rng::Purpose::test, 1, 0));
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto state = random_state(Q.layout, stream);
    const StatePoly p = random_test_poly(Q.layout, include_cbar, stream);
    const GrassmannPoly qq = grassmann::compose_square(Q.D, p, state);
    worst = std::max(worst, qq.max_abs_coeff());
  }
  return worst;
}

double check_invariance(const Supercharge& Q, const SlicedAction& S, int trials,
                        std::uint64_t seed) {
  if (Q.kind != S.kind) throw std::invalid_argument("supercharge/action construction mismatch");
  if (S.kind != ActionKind::canonical) {
    throw std::invalid_argument("exact invariance only holds for the canonical slicing; "
                                "use invariance_ladder");
  }
  rng::NormalStream stream(seed, rng::stream_id(rng::Purpose::test, 2, 0));
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto state = random_state(S.layout, stream);
    const GrassmannPoly qs = grassmann::apply_derivation(Q.D, S.poly, state);
    worst = std::max(worst, qs.max_abs_coeff());
  }
  return worst;
}

LadderResult invariance_ladder(ActionKind kind, const model::ProcessSpec& spec, double T,
                               std::span<const int> Ms, double a) {
  LadderResult res;
  for (const int M : Ms) {
    const model::TimeGrid grid(T / M, M);
    std::pair<SlicedAction, Supercharge> built =
        kind == ActionKind::lagrangian ? build_lagrangian_N(spec, grid, a)
        : kind == ActionKind::lagrangian_xfriction
            ? build_lagrangian_xfriction(spec, grid, a)
            : throw std::invalid_argument("ladder applies to the Lagrangian constructions");
    const auto& [S, Q] = built;
    // Smooth test path sampled on the grid.
    std::vector<double> state(static_cast<std::size_t>(S.layout.total()));
    for (int i = 0; i <= M; ++i) {
      const double t = grid.time(i);
      state[static_cast<std::size_t>(S.layout.x_index(1, i))] =
          std::sin(1.3 * t + 0.4) + 0.31 * std::cos(2.1 * t) + 0.2;
    }
    const GrassmannPoly qs = grassmann::apply_derivation(Q.D, S.poly, state);
    res.points.push_back({M, grid.epsilon, weighted_l1(qs, grid.epsilon)});
  }
  for (std::size_t k = 0; k + 1 < res.points.size(); ++k) {
    res.ratios.push_back(res.points[k].norm / res.points[k + 1].norm);
  }
  double order = 0.0;
  for (double r : res.ratios) order += std::log2(r);
  if (!res.ratios.empty()) order /= static_cast<double>(res.ratios.size());
  res.fitted_order = order;
  return res;
}

// ---------------------------------------------------------------------------
// Fermion Green's functions

Eigen::MatrixXd fermion_green_first_order(std::span<const double> fprime, double a,
                                          const model::TimeGrid& grid) {
  const int M = grid.M;
  if (static_cast<int>(fprime.size()) != M) {
    throw std::invalid_argument("fprime must have one value per slice");
  }
  const double eps = grid.epsilon;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  for (int j = 0; j < M; ++j) {
    G(j, j) = 1.0 / (1.0 + eps * a * fprime[static_cast<std::size_t>(j)]);
    for (int i = j + 1; i < M; ++i) {
      const double sub = -1.0 + eps * (1.0 - a) * fprime[static_cast<std::size_t>(i - 1)];
      G(i, j) = -sub * G(i - 1, j) / (1.0 + eps * a * fprime[static_cast<std::size_t>(i)]);
    }
  }
  return G;
}

Eigen::MatrixXd fermion_green_block_kramers(double gamma, std::span<const double> fprime,
                                            double a, const model::TimeGrid& grid) {
  const int M = grid.M;
  const double eps = grid.epsilon;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * M, 2 * M);
  for (int i = 1; i <= M; ++i) {
    const int rv = 2 * (i - 1), rx = rv + 1;
    A(rv, rv) = 1.0 + eps * a * gamma;
    A(rv, rx) = eps * a * fprime[static_cast<std::size_t>(i - 1)];
    A(rx, rv) = -eps * a;
    A(rx, rx) = 1.0;
    if (i > 1) {
      A(rv, rv - 2) = -1.0 + eps * (1.0 - a) * gamma;
      A(rv, rx - 2) = eps * (1.0 - a) * fprime[static_cast<std::size_t>(i - 2)];
      A(rx, rv - 2) = -eps * (1.0 - a);
      A(rx, rx - 2) = -1.0;
    }
  }
  return A.partialPivLu().inverse();
}

// ---------------------------------------------------------------------------
// Ward identity

namespace {

struct WardRaw {
  std::vector<double> b0, f0, bh, fh, logwh;
  int count_j = 0;
};

double drift1(const model::ProcessSpec& spec, double x) {
  return spec.gamma_tilde(0) * x + spec.F(x);
}
double drift1_prime(const model::ProcessSpec& spec, double x) {
  return spec.gamma_tilde(0) + spec.Fp(x);
}

WardRaw ward_raw(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                 std::uint64_t seed, const WardOptions& opts, bool with_half) {
  if (spec.order != 1 || !spec.has_const_coeffs()) {
    throw std::invalid_argument("the Ward functional family is built for order-1 processes");
  }
  const int M = grid.M;
  const int lag = opts.lag_steps;
  const int j_end = opts.window_end >= 0 ? opts.window_end : M - lag;
  const int j_begin = opts.window_begin;
  if (lag < 1 || j_begin < 0 || j_end <= j_begin || j_end > M - lag) {
    throw std::invalid_argument("ward window/lag out of range");
  }

  const auto system = model::reduce_to_first_order(spec, model::SigmaVector::zeros(1));
  simulate::RunOptions ropts;
  ropts.burn_in = opts.burn_in;
  ropts.record_noise = true;
  ropts.threads = opts.threads;

  WardRaw raw;
  raw.count_j = j_end - j_begin;
  raw.b0.resize(static_cast<std::size_t>(opts.K));
  raw.f0.resize(static_cast<std::size_t>(opts.K));
  if (with_half) {
    raw.bh.resize(static_cast<std::size_t>(opts.K));
    raw.fh.resize(static_cast<std::size_t>(opts.K));
    raw.logwh.resize(static_cast<std::size_t>(opts.K));
  }
  const double eps = grid.epsilon;
  const std::vector<double> x0{0.0};

  simulate::run_ensemble_visit(
      system, grid, 0.0, opts.K, seed, x0, ropts,
      [&](long k, const simulate::Trajectory& tr) {
        // prefix products for the a = 0 and a = 1/2 Green's functions
        std::vector<double> fp(static_cast<std::size_t>(M) + 1);
        for (int i = 1; i <= M; ++i) {
          fp[static_cast<std::size_t>(i)] = drift1_prime(spec, tr.state(i, 0));
        }
        std::vector<double> pnum0(static_cast<std::size_t>(M) + 1, 1.0);
        for (int l = 1; l <= M; ++l) {
          pnum0[static_cast<std::size_t>(l)] =
              pnum0[static_cast<std::size_t>(l - 1)] * (1.0 - eps * fp[static_cast<std::size_t>(l)]);
        }
        std::vector<double> pnumh, pdenh;
        if (with_half) {
          pnumh.assign(static_cast<std::size_t>(M) + 1, 1.0);
          pdenh.assign(static_cast<std::size_t>(M) + 1, 1.0);
          for (int l = 1; l <= M; ++l) {
            pnumh[static_cast<std::size_t>(l)] =
                pnumh[static_cast<std::size_t>(l - 1)] * (1.0 - 0.5 * eps * fp[static_cast<std::size_t>(l)]);
            pdenh[static_cast<std::size_t>(l)] =
                pdenh[static_cast<std::size_t>(l - 1)] * (1.0 + 0.5 * eps * fp[static_cast<std::size_t>(l)]);
          }
        }
        double sb0 = 0.0, sf0 = 0.0, sbh = 0.0, sfh = 0.0;
        for (int j = j_begin; j < j_end; ++j) {
          const int i = j + lag;
          const double xi = tr.state(i, 0);
          const double eta = tr.noise[0][static_cast<std::size_t>(j)];
          sb0 += xi * eta;
          // G(i, j+1) at a = 0: prod_{m=j+1}^{i-1} (1 - eps f'_m)
          sf0 += pnum0[static_cast<std::size_t>(i - 1)] / pnum0[static_cast<std::size_t>(j)];
          if (with_half) {
            const double xl = tr.state(j, 0), xr = tr.state(j + 1, 0);
            const double Lhalf =
                (xr - xl) / eps + 0.5 * drift1(spec, xr) + 0.5 * drift1(spec, xl);
            sbh += xi * Lhalf;
            sfh += (pnumh[static_cast<std::size_t>(i - 1)] / pnumh[static_cast<std::size_t>(j)]) /
                   (pdenh[static_cast<std::size_t>(i)] / pdenh[static_cast<std::size_t>(j)]);
          }
        }
        const double inv = 1.0 / static_cast<double>(raw.count_j);
        raw.b0[static_cast<std::size_t>(k)] = sb0 * inv;
        raw.f0[static_cast<std::size_t>(k)] = sf0 * inv;
        if (with_half) {
          raw.bh[static_cast<std::size_t>(k)] = sbh * inv;
          raw.fh[static_cast<std::size_t>(k)] = sfh * inv;
          // log of the a = 1/2 to a = 0 weight ratio along this trajectory:
          // -(S_b[1/2] - S_b[0]) + (logdet[1/2] - logdet[0]).
          double dSb = 0.0, dlogdet = 0.0;
          for (int i = 1; i <= M; ++i) {
            const double xl = tr.state(i - 1, 0), xr = tr.state(i, 0);
            const double eta = tr.noise[0][static_cast<std::size_t>(i - 1)];
            const double Lh = (xr - xl) / eps + 0.5 * drift1(spec, xr) + 0.5 * drift1(spec, xl);
            dSb += 0.5 * eps * (Lh * Lh - eta * eta);
            dlogdet += std::log(std::abs(1.0 + 0.5 * eps * fp[static_cast<std::size_t>(i)]));
          }
          raw.logwh[static_cast<std::size_t>(k)] = -dSb + dlogdet;
        }
      });
  return raw;
}

struct RatioJackknife {
  double value = 0.0, se = 0.0;
};

// Jackknife of sum(w v) / sum(w).
RatioJackknife weighted_ratio(std::span<const double> v, std::span<const double> w) {
  const std::size_t K = v.size();
  std::vector<double> wv(K);
  for (std::size_t k = 0; k < K; ++k) wv[k] = w[k] * v[k];
  const double Sw = simulate::pairwise_sum(w);
  const double Swv = simulate::pairwise_sum(wv);
  RatioJackknife r;
  r.value = Swv / Sw;
  std::vector<double> loo(K);
  for (std::size_t k = 0; k < K; ++k) loo[k] = (Swv - wv[k]) / (Sw - w[k]);
  double mean_loo = simulate::pairwise_sum(loo) / static_cast<double>(K);
  std::vector<double> dev(K);
  for (std::size_t k = 0; k < K; ++k) dev[k] = (loo[k] - mean_loo) * (loo[k] - mean_loo);
  r.se = std::sqrt(simulate::pairwise_sum(dev) * static_cast<double>(K - 1) /
                   static_cast<double>(K));
  return r;
}

std::vector<double> normalized_weights(std::span<const double> logw) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double lw : logw) mx = std::max(mx, lw);
  std::vector<double> w(logw.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(logw[k] - mx);
  return w;
}

}  // namespace

WardReport ward_check(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                      std::uint64_t seed, const WardOptions& opts, double target_a) {
  if (target_a != 0.0 && target_a != 0.5) {
    throw std::invalid_argument("ward_check supports a = 0 and a = 1/2");
  }
  const bool half = target_a == 0.5;
  const WardRaw raw = ward_raw(spec, grid, seed, opts, half);
  WardReport rep;
  rep.label = "cbar_x response";
  rep.target_a = target_a;
  rep.K = opts.K;
  if (!half) {
    auto [b, bse] = simulate::jackknife_mean(raw.b0);
    auto [f, fse] = simulate::jackknife_mean(raw.f0);
    std::vector<double> d(raw.b0.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = raw.b0[k] - raw.f0[k];
    auto [dm, dse] = simulate::jackknife_mean(d);
    rep.bosonic = b;
    rep.bosonic_se = bse;
    rep.fermionic = f;
    rep.fermionic_se = fse;
    rep.diff_z = dse > 0.0 ? dm / dse : 0.0;
  } else {
    const auto w = normalized_weights(raw.logwh);
    const auto b = weighted_ratio(raw.bh, w);
    const auto f = weighted_ratio(raw.fh, w);
    std::vector<double> d(raw.bh.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = raw.bh[k] - raw.fh[k];
    const auto dr = weighted_ratio(d, w);
    rep.bosonic = b.value;
    rep.bosonic_se = b.se;
    rep.fermionic = f.value;
    rep.fermionic_se = f.se;
    rep.diff_z = dr.se > 0.0 ? dr.value / dr.se : 0.0;
  }
  return rep;
}

AShiftReport a_shift_check(const model::ProcessSpec& spec, const model::TimeGrid& grid,
                           std::uint64_t seed, const WardOptions& opts) {
  const WardRaw raw = ward_raw(spec, grid, seed, opts, true);
  AShiftReport rep;

  auto fill_plain = [&](WardReport& r) {
    auto [b, bse] = simulate::jackknife_mean(raw.b0);
    auto [f, fse] = simulate::jackknife_mean(raw.f0);
    std::vector<double> d(raw.b0.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = raw.b0[k] - raw.f0[k];
    auto [dm, dse] = simulate::jackknife_mean(d);
    r.label = "cbar_x response";
    r.target_a = 0.0;
    r.K = opts.K;
    r.bosonic = b;
    r.bosonic_se = bse;
    r.fermionic = f;
    r.fermionic_se = fse;
    r.diff_z = dse > 0.0 ? dm / dse : 0.0;
  };
  fill_plain(rep.ito);

  const auto w = normalized_weights(raw.logwh);
  const auto b = weighted_ratio(raw.bh, w);
  const auto f = weighted_ratio(raw.fh, w);
  std::vector<double> d(raw.bh.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = raw.bh[k] - raw.fh[k];
  const auto dr = weighted_ratio(d, w);
  rep.stratonovich.label = "cbar_x response";
  rep.stratonovich.target_a = 0.5;
  rep.stratonovich.K = opts.K;
  rep.stratonovich.bosonic = b.value;
  rep.stratonovich.bosonic_se = b.se;
  rep.stratonovich.fermionic = f.value;
  rep.stratonovich.fermionic_se = f.se;
  rep.stratonovich.diff_z = dr.se > 0.0 ? dr.value / dr.se : 0.0;

  // z of the response shift between the two slicings, jackknifed over the
  // shared ensemble.
  const std::size_t K = raw.b0.size();
  const double Sb0 = simulate::pairwise_sum(raw.b0);
  std::vector<double> wb(K);
  for (std::size_t k = 0; k < K; ++k) wb[k] = w[k] * raw.bh[k];
  const double Sw = simulate::pairwise_sum(w);
  const double Swb = simulate::pairwise_sum(wb);
  std::vector<double> loo(K);
  for (std::size_t k = 0; k < K; ++k) {
    loo[k] = (Sb0 - raw.b0[k]) / static_cast<double>(K - 1) - (Swb - wb[k]) / (Sw - w[k]);
  }
  const double theta = Sb0 / static_cast<double>(K) - Swb / Sw;
  const double mean_loo = simulate::pairwise_sum(loo) / static_cast<double>(K);
  std::vector<double> dev(K);
  for (std::size_t k = 0; k < K; ++k) dev[k] = (loo[k] - mean_loo) * (loo[k] - mean_loo);
  const double se = std::sqrt(simulate::pairwise_sum(dev) * static_cast<double>(K - 1) /
                              static_cast<double>(K));
  rep.response_shift_z = se > 0.0 ? theta / se : 0.0;
  return rep;
}

}  // namespace holang::susy
