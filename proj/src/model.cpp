#include "holang/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace holang::model {

double Polynomial::operator()(double x) const {
  double v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
  return v;
}

Polynomial Polynomial::derivative() const {
  Polynomial d;
  if (coeffs.size() <= 1) return d;
  d.coeffs.resize(coeffs.size() - 1);
  for (std::size_t k = 1; k < coeffs.size(); ++k) {
    d.coeffs[k - 1] = static_cast<double>(k) * coeffs[k];
  }
  return d;
}

Polynomial Polynomial::antiderivative() const {
  Polynomial a;
  a.coeffs.assign(coeffs.size() + 1, 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    a.coeffs[k + 1] = coeffs[k] / static_cast<double>(k + 1);
  }
  return a;
}

TimeGrid::TimeGrid(double eps, int slices) : epsilon(eps), M(slices) {
  if (!(epsilon > 0.0)) throw ConfigError("grid.epsilon must be > 0");
  if (M < 1) throw ConfigError("grid.M must be >= 1");
}

SigmaVector::SigmaVector(std::vector<double> s) : sigmas(std::move(s)) {
  for (double v : sigmas) {
    if (!(v >= 0.0)) throw ConfigError("sigma entries must be >= 0");
  }
  if (!(total() < 1.0)) throw ConfigError("sigma total must be < 1");
}

double SigmaVector::total() const {
  double t = 0.0;
  for (double v : sigmas) t += v;
  return t;
}

SlicingParam::SlicingParam(double a_) : a(a_) {
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("slicing_a must lie in [0,1]");
}

const ConstCoeffs& ProcessSpec::const_coeffs() const {
  if (!has_const_coeffs()) {
    throw std::invalid_argument(
        "process has x-dependent friction; use the lambda-split reduction");
  }
  return std::get<ConstCoeffs>(friction);
}

const StateFriction& ProcessSpec::state_friction() const {
  return std::get<StateFriction>(friction);
}

double ProcessSpec::gamma_tilde(int k) const {
  const auto& g = const_coeffs().gamma;
  if (k == order) return 1.0;
  if (k < 0 || k > order) throw std::out_of_range("gamma index out of range");
  return g[static_cast<std::size_t>(k)];
}

void ProcessSpec::ensure_derivs() const {
  if (derivs_ready_) return;
  force_d_ = force.derivative();
  force_dd_ = force_d_.derivative();
  derivs_ready_ = true;
}

double ProcessSpec::Fp(double x) const {
  ensure_derivs();
  return force_d_(x);
}

double ProcessSpec::Fpp(double x) const {
  ensure_derivs();
  return force_dd_(x);
}

ProcessSpec ProcessSpec::make_const(int order, std::vector<double> gamma, Polynomial force) {
  if (order < 1) throw ConfigError("process.N must be >= 1");
  if (static_cast<int>(gamma.size()) != order) {
    throw ConfigError("process.gamma_coeffs must have exactly N entries");
  }
  ProcessSpec s;
  s.order = order;
  s.friction = ConstCoeffs{std::move(gamma)};
  s.force = std::move(force);
  return s;
}

ProcessSpec ProcessSpec::make_state_friction(Polynomial gamma, Polynomial force,
                                             double check_lo, double check_hi) {
  ProcessSpec s;
  s.order = 2;
  StateFriction sf;
  sf.gamma = std::move(gamma);
  Polynomial gm1 = sf.gamma;
  if (gm1.coeffs.empty()) gm1.coeffs.push_back(0.0);
  gm1.coeffs[0] -= 1.0;
  sf.lambda_x = gm1.antiderivative();
  sf.check_lo = check_lo;
  sf.check_hi = check_hi;
  // lambda_x' = gamma - 1 must hold on the declared interval.
  const Polynomial lxp = sf.lambda_x.derivative();
  for (int i = 0; i <= 16; ++i) {
    const double x = check_lo + (check_hi - check_lo) * i / 16.0;
    if (std::abs(lxp(x) - (sf.gamma(x) - 1.0)) > 1e-10) {
      throw ConfigError("state friction split violates lambda_x' = gamma - 1");
    }
  }
  s.friction = std::move(sf);
  s.force = std::move(force);
  return s;
}

void FirstOrderSystem::drift(std::span<const double> x, std::span<double> out) const {
  if (kind == Kind::companion) {
    const int N = dimension;
    for (int n = 0; n < N - 1; ++n) out[n] = -x[n + 1];
    double d = spec.F(x[0]);
    const auto& g = spec.const_coeffs().gamma;
    for (int m = 0; m < N; ++m) d += g[m] * x[m];
    out[N - 1] = d;
  } else {
    out[0] = -x[1] + lambda_x(x[0]);
    out[1] = x[1] + lambda_v(x[0]);
  }
}

void FirstOrderSystem::drift_jacobian(std::span<const double> x, std::span<double> out) const {
  const int N = dimension;
  std::fill(out.begin(), out.end(), 0.0);
  if (kind == Kind::companion) {
    for (int n = 0; n < N - 1; ++n) out[n * N + n + 1] = -1.0;
    const auto& g = spec.const_coeffs().gamma;
    for (int m = 0; m < N; ++m) out[(N - 1) * N + m] = g[m];
    out[(N - 1) * N] += spec.Fp(x[0]);
  } else {
    const Polynomial lxp = lambda_x.derivative();
    const Polynomial lvp = lambda_v.derivative();
    out[0] = lxp(x[0]);
    out[1] = -1.0;
    out[2] = lvp(x[0]);
    out[3] = 1.0;
  }
}

std::vector<ChannelNoise> FirstOrderSystem::channel_plan() const {
  std::vector<ChannelNoise> plan(static_cast<std::size_t>(dimension));
  const double total = sigma.total();
  if (kind == Kind::companion) {
    for (int n = 1; n < dimension; ++n) {
      const double sn = sigma.sigmas[static_cast<std::size_t>(n - 1)];
      auto& ch = plan[static_cast<std::size_t>(n - 1)];
      if (sn > 0.0) {
        ch.mode = ChannelNoise::Mode::aux;
        ch.sigma_n = sn;
        ch.lambda_coeffs = lambda_operator_coeffs(spec, n);
      }
    }
  } else {
    const double sn = sigma.sigmas.empty() ? 0.0 : sigma.sigmas[0];
    if (sn > 0.0) {
      auto& ch = plan[0];
      ch.mode = ChannelNoise::Mode::aux;
      ch.sigma_n = sn;
      ch.lambda_coeffs = {1.0, 1.0};  // d/dt + 1, the unit-friction split
    }
  }
  auto& top = plan.back();
  top.mode = ChannelNoise::Mode::white;
  top.sigma_n = 1.0 - total;
  return plan;
}

FirstOrderSystem reduce_to_first_order(const ProcessSpec& spec, const SigmaVector& sigma) {
  const auto& g = spec.const_coeffs().gamma;  // throws for state friction
  (void)g;
  if (static_cast<int>(sigma.sigmas.size()) != spec.order - 1) {
    throw ConfigError("sigma must have N-1 entries");
  }
  FirstOrderSystem sys;
  sys.kind = FirstOrderSystem::Kind::companion;
  sys.dimension = spec.order;
  sys.spec = spec;
  sys.sigma = sigma;
  return sys;
}

FirstOrderSystem first_order_state_friction(const ProcessSpec& spec, double sigma) {
  const auto& sf = spec.state_friction();
  if (!(sigma >= 0.0 && sigma < 1.0)) throw ConfigError("sigma must lie in [0,1)");
  FirstOrderSystem sys;
  sys.kind = FirstOrderSystem::Kind::state_friction;
  sys.dimension = 2;
  sys.spec = spec;
  sys.sigma = SigmaVector({sigma});
  sys.lambda_x = sf.lambda_x;
  sys.lambda_v = spec.force;
  sys.lambda_v.coeffs.resize(std::max(sys.lambda_v.coeffs.size(), sf.lambda_x.coeffs.size()), 0.0);
  for (std::size_t k = 0; k < sf.lambda_x.coeffs.size(); ++k) {
    sys.lambda_v.coeffs[k] -= sf.lambda_x.coeffs[k];
  }
  return sys;
}

std::pair<Polynomial, Polynomial> lambda_split(const Polynomial& gamma, const Polynomial& force) {
  Polynomial gm1 = gamma;
  if (gm1.coeffs.empty()) gm1.coeffs.push_back(0.0);
  gm1.coeffs[0] -= 1.0;
  Polynomial lx = gm1.antiderivative();
  Polynomial lv = force;
  lv.coeffs.resize(std::max(lv.coeffs.size(), lx.coeffs.size()), 0.0);
  for (std::size_t k = 0; k < lx.coeffs.size(); ++k) lv.coeffs[k] -= lx.coeffs[k];
  return {std::move(lx), std::move(lv)};
}

namespace {

struct SimpsonWorst {
  double lo = 0.0, hi = 0.0, err = 0.0;
};

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        double flo, double fmid, double fhi, double whole, double tol,
                        int depth, SimpsonWorst& worst) {
  const double mid = 0.5 * (lo + hi);
  const double lmid = 0.5 * (lo + mid);
  const double rmid = 0.5 * (mid + hi);
  const double flm = f(lmid), frm = f(rmid);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
  const double err = (left + right - whole) / 15.0;
  if (std::abs(err) <= tol || (hi - lo) < 1e-14) {
    if (depth <= 0) {
      if (std::abs(err) > worst.err) worst = {lo, hi, std::abs(err)};
    }
    return left + right + err;
  }
  if (depth <= 0) {
    if (std::abs(err) > worst.err) worst = {lo, hi, std::abs(err)};
    return left + right + err;
  }
  return adaptive_simpson(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1, worst) +
         adaptive_simpson(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1, worst);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (lo == hi) return 0.0;
  const double sgn = lo < hi ? 1.0 : -1.0;
  const double a = std::min(lo, hi), b = std::max(lo, hi);
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  SimpsonWorst worst;
  const double v = adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40, worst);
  if (worst.err > tol) {
    std::ostringstream os;
    os << "quadrature failed to converge; worst subinterval [" << worst.lo << ", " << worst.hi
       << "] residual " << worst.err;
    throw std::runtime_error(os.str());
  }
  return sgn * v;
}

std::pair<std::function<double(double)>, std::function<double(double)>> lambda_split(
    std::function<double(double)> gamma, std::function<double(double)> force,
    double lo, double hi, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("lambda_split interval is empty");
  auto integrand = [gamma](double u) { return gamma(u) - 1.0; };
  auto lx = [integrand, tol](double x) { return integrate(integrand, 0.0, x, tol); };
  auto lv = [force, lx](double x) { return force(x) - lx(x); };
  return {lx, lv};
}

std::vector<double> lambda_operator_coeffs(const ProcessSpec& spec, int n) {
  const int N = spec.order;
  if (n < 1 || n > N - 1) throw std::out_of_range("aux channel index must satisfy 1 <= n <= N-1");
  std::vector<double> coeffs(static_cast<std::size_t>(N - n + 1));
  for (int j = 0; j <= N - n; ++j) {
    coeffs[static_cast<std::size_t>(j)] = spec.gamma_tilde(n + j);
  }
  return coeffs;
}

// ---------------------------------------------------------------------------
// Configuration I/O

namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

std::vector<double> as_doubles(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field + " must be an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(field + " must be an array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"process", "grid", "sigma", "slicing_a", "ensemble"}, "config");
  if (!j.contains("process")) throw ConfigError("config is missing 'process'");
  if (!j.contains("grid")) throw ConfigError("config is missing 'grid'");

  const json& jp = j["process"];
  reject_unknown(jp, {"N", "gamma_coeffs", "gamma_poly_in_x", "force_poly"}, "process");
  if (!jp.contains("N")) throw ConfigError("process.N is required");
  const int N = jp["N"].get<int>();
  if (!jp.contains("force_poly")) throw ConfigError("process.force_poly is required");
  Polynomial force{as_doubles(jp["force_poly"], "process.force_poly")};

  RunConfig cfg;
  if (jp.contains("gamma_poly_in_x")) {
    if (jp.contains("gamma_coeffs")) {
      throw ConfigError("process: give either gamma_coeffs or gamma_poly_in_x, not both");
    }
    if (N != 2) throw ConfigError("process.gamma_poly_in_x requires N = 2");
    cfg.process = ProcessSpec::make_state_friction(
        Polynomial{as_doubles(jp["gamma_poly_in_x"], "process.gamma_poly_in_x")}, force);
  } else {
    if (!jp.contains("gamma_coeffs")) {
      throw ConfigError("process needs gamma_coeffs (or gamma_poly_in_x for N = 2)");
    }
    cfg.process = ProcessSpec::make_const(
        N, as_doubles(jp["gamma_coeffs"], "process.gamma_coeffs"), force);
  }

  const json& jg = j["grid"];
  reject_unknown(jg, {"epsilon", "M"}, "grid");
  if (!jg.contains("epsilon") || !jg.contains("M")) {
    throw ConfigError("grid needs epsilon and M");
  }
  cfg.grid = TimeGrid(jg["epsilon"].get<double>(), jg["M"].get<int>());

  if (j.contains("sigma")) {
    cfg.sigma = SigmaVector(as_doubles(j["sigma"], "sigma"));
  } else {
    cfg.sigma = SigmaVector::zeros(cfg.process.order);
  }
  const int want = cfg.process.has_const_coeffs() ? cfg.process.order - 1 : 1;
  if (static_cast<int>(cfg.sigma.sigmas.size()) != want) {
    throw ConfigError("sigma must have " + std::to_string(want) + " entries for this process");
  }

  if (j.contains("slicing_a")) cfg.slicing = SlicingParam(j["slicing_a"].get<double>());

  if (j.contains("ensemble")) {
    const json& je = j["ensemble"];
    reject_unknown(je, {"K", "seed", "burn_in"}, "ensemble");
    if (je.contains("K")) {
      cfg.K = je["K"].get<long>();
      if (cfg.K < 1) throw ConfigError("ensemble.K must be >= 1");
    }
    if (je.contains("seed")) cfg.seed = je["seed"].get<std::uint64_t>();
    if (je.contains("burn_in")) cfg.burn_in = je["burn_in"].get<long>();
  }
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  json jp;
  jp["N"] = cfg.process.order;
  if (cfg.process.has_const_coeffs()) {
    jp["gamma_coeffs"] = cfg.process.const_coeffs().gamma;
  } else {
    jp["gamma_poly_in_x"] = cfg.process.state_friction().gamma.coeffs;
  }
  jp["force_poly"] = cfg.process.force.coeffs;
  j["process"] = jp;
  j["grid"] = {{"epsilon", cfg.grid.epsilon}, {"M", cfg.grid.M}};
  j["sigma"] = cfg.sigma.sigmas;
  j["slicing_a"] = cfg.slicing.a;
  j["ensemble"] = {{"K", cfg.K}, {"seed", cfg.seed}, {"burn_in", cfg.burn_in}};
  return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int i = 60; i >= 0; i -= 4) s.push_back(digits[(h >> i) & 0xF]);
  return s;
}

}  // namespace holang::model
