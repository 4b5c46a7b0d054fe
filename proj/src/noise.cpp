#include "dpkz/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpkz {

// ---- law construction & validation ----

NoiseLaw NoiseLaw::standard_gaussian() {
  NoiseLaw law;
  law.kind = Kind::standard_gaussian;
  law.a = 1.0;
  law.b = 0.0;
  law.lipschitz = 1.0;
  return law;
}

NoiseLaw NoiseLaw::affine_gaussian(double a, double b) {
  NoiseLaw law;
  law.kind = Kind::affine_gaussian;
  law.a = a;
  law.b = b;
  law.lipschitz = std::fabs(a);
  law.validate();
  return law;
}

NoiseLaw NoiseLaw::lipschitz_map(std::vector<double> grid, std::vector<double> value,
                                 double lipschitz) {
  NoiseLaw law;
  law.kind = Kind::lipschitz_map;
  law.grid = std::move(grid);
  law.value = std::move(value);
  law.lipschitz = lipschitz;
  law.validate();
  return law;
}

NoiseLaw NoiseLaw::lipschitz_map_from_csv(const std::string& path, double lipschitz) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open noise table: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty noise table: " + path);
  std::vector<double> g, v;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double z, s;
    if (std::sscanf(line.c_str(), "%lf,%lf", &z, &s) != 2)
      throw ConfigError(path + ": bad row at line " + std::to_string(lineno));
    g.push_back(z);
    v.push_back(s);
  }
  return lipschitz_map(std::move(g), std::move(v), lipschitz);
}

void NoiseLaw::validate() const {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz))
    throw ConfigError("noise law needs a positive finite Lipschitz bound");
  switch (kind) {
    case Kind::standard_gaussian:
      return;
    case Kind::affine_gaussian:
      if (!(std::fabs(a) > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw ConfigError("affine noise law needs finite a != 0, finite b");
      if (std::fabs(a) > lipschitz * (1.0 + 1e-12))
        throw ConfigError("affine slope exceeds declared Lipschitz bound");
      return;
    case Kind::lipschitz_map: {
      if (grid.size() < 2 || grid.size() != value.size())
        throw ConfigError("noise table needs >= 2 rows and equal column lengths");
      for (size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i + 1] > grid[i]))
          throw ConfigError("noise table grid must be strictly increasing");
        const double s = (value[i + 1] - value[i]) / (grid[i + 1] - grid[i]);
        if (!(s > 0.0))
          throw ConfigError("noise table map must be strictly increasing");
        if (s > lipschitz * (1.0 + 1e-12))
          throw ConfigError("noise table segment slope " + std::to_string(s) +
                            " exceeds declared Lipschitz bound " +
                            std::to_string(lipschitz));
      }
      return;
    }
  }
}

std::string NoiseLaw::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::standard_gaussian:
      os << "standard-gaussian";
      break;
    case Kind::affine_gaussian:
      os << "affine-gaussian(a=" << a << ",b=" << b << ")";
      break;
    case Kind::lipschitz_map:
      os << "lipschitz-map(" << grid.size() << " knots, K=" << lipschitz << ")";
      break;
  }
  return os.str();
}

// ---- MGF ----

namespace {

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * 0.39894228040143267794;  // 1/sqrt(2 pi)
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x * 0.7071067811865475244); }

struct QuadBudget {
  long evals = 0;
  static constexpr long kMax = 4'000'000;
};

template <class F>
double simpson_adapt(const F& f, double a, double fa, double b, double fb, double m,
                     double fm, double whole, double eps, int depth, QuadBudget& bud) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  bud.evals += 2;
  if (bud.evals > QuadBudget::kMax)
    throw EstimationError("mgf quadrature exceeded its evaluation budget");
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw EstimationError("mgf quadrature failed to converge");
  if (std::fabs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return simpson_adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1, bud) +
         simpson_adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1, bud);
}

// exp(c^2/2) * Phi(x) without blowing up for the magnitudes used here
// (|c| <= ~K * 2 * 64; fine in double range for the laws we accept)
inline double tail_left(double beta, double zl, double vl, double sl) {
  const double c = beta * sl;
  return std::exp(beta * (vl - sl * zl) + 0.5 * c * c) * normal_cdf(zl - c);
}

inline double tail_right(double beta, double zr, double vr, double sr) {
  const double c = beta * sr;
  return std::exp(beta * (vr - sr * zr) + 0.5 * c * c) * normal_sf(zr - c);
}

// log Phi(x), falling back to the first-order asymptotic once erfc
// underflows; the asymptotic branch only ever describes a summand that is
// astronomically smaller than the dominant one
inline double log_normal_cdf(double x) {
  if (x > -37.0) return std::log(normal_cdf(x));
  return -0.5 * x * x - std::log(-x) - 0.91893853320467274178;
}
inline double log_normal_sf(double x) { return log_normal_cdf(-x); }

// Adaptive Simpson with panel boundaries on `edges`; the tolerance is
// `rel` times the sum of the initial panel estimates, apportioned to the
// panels by width.
template <class F>
double panel_simpson(const F& f, const std::vector<double>& edges, double rel,
                     QuadBudget& bud) {
  struct Panel {
    double a, fa, b, fb, m, fm, whole;
  };
  std::vector<Panel> panels;
  panels.reserve(edges.size() - 1);
  double fprev = f(edges.front());
  bud.evals += 1;
  long double whole_sum = 0.0L;
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    const double m = 0.5 * (a + b);
    const double fm = f(m), fb = f(b);
    bud.evals += 2;
    const double whole = (b - a) / 6.0 * (fprev + 4.0 * fm + fb);
    panels.push_back({a, fprev, b, fb, m, fm, whole});
    whole_sum += whole;
    fprev = fb;
  }
  const double eps = rel * std::max(std::fabs(double(whole_sum)), 1e-300);
  const double span = edges.back() - edges.front();
  long double acc = 0.0L;
  for (const Panel& p : panels)
    acc += simpson_adapt(f, p.a, p.fa, p.b, p.fb, p.m, p.fm, p.whole,
                         eps * ((p.b - p.a) / span), 60, bud);
  return double(acc);
}

}  // namespace

double mgf_quadrature(const NoiseLaw& law, double beta) {
  law.validate();
  // compact region plus exact integrals of the linear tails
  double zl, zr, sl, sr;
  if (law.kind == NoiseLaw::Kind::lipschitz_map) {
    const size_t n = law.grid.size();
    zl = law.grid.front();
    zr = law.grid.back();
    sl = (law.value[1] - law.value[0]) / (law.grid[1] - law.grid[0]);
    sr = (law.value[n - 1] - law.value[n - 2]) / (law.grid[n - 1] - law.grid[n - 2]);
  } else {
    zl = -9.0;
    zr = 9.0;
    sl = sr = (law.kind == NoiseLaw::Kind::affine_gaussian) ? law.a : 1.0;
  }
  const double tails =
      tail_left(beta, zl, law.map(zl), sl) + tail_right(beta, zr, law.map(zr), sr);

  const auto f = [&](double z) { return std::exp(beta * law.map(z)) * normal_pdf(z); };

  // Panel edges sit on the table knots: the integrand is smooth inside each
  // segment and kinked exactly at the knots, where adaptive Simpson would
  // otherwise stall.
  const std::vector<double> plain{zl, zr};
  const std::vector<double>& edges =
      (law.kind == NoiseLaw::Kind::lipschitz_map) ? law.grid : plain;
  QuadBudget bud;
  const double compact = panel_simpson(f, edges, 1e-10, bud);
  const double out = compact + tails;
  if (!std::isfinite(out) || out <= 0.0)
    throw EstimationError("mgf quadrature produced a non-finite or non-positive value");
  return out;
}

double mgf(const NoiseLaw& law, double beta) {
  switch (law.kind) {
    case NoiseLaw::Kind::standard_gaussian:
      return std::exp(0.5 * beta * beta);
    case NoiseLaw::Kind::affine_gaussian:
      return std::exp(beta * law.b + 0.5 * beta * beta * law.a * law.a);
    case NoiseLaw::Kind::lipschitz_map:
    default:
      if (beta == 0.0) return 1.0;
      return mgf_quadrature(law, beta);
  }
}

double log_mgf(const NoiseLaw& law, double beta) {
  switch (law.kind) {
    case NoiseLaw::Kind::standard_gaussian:
      return 0.5 * beta * beta;
    case NoiseLaw::Kind::affine_gaussian:
      return beta * law.b + 0.5 * beta * beta * law.a * law.a;
    case NoiseLaw::Kind::lipschitz_map:
    default:
      break;
  }
  law.validate();
  if (beta == 0.0) return 0.0;
  const size_t n = law.grid.size();
  const double zl = law.grid.front(), zr = law.grid.back();
  const double vl = law.value.front(), vr = law.value.back();
  const double sl = (law.value[1] - law.value[0]) / (law.grid[1] - law.grid[0]);
  const double sr =
      (law.value[n - 1] - law.value[n - 2]) / (law.grid[n - 1] - law.grid[n - 2]);
  const double cl = beta * sl, cr = beta * sr;
  const double logL = beta * (vl - sl * zl) + 0.5 * cl * cl + log_normal_cdf(zl - cl);
  const double logR = beta * (vr - sr * zr) + 0.5 * cr * cr + log_normal_sf(zr - cr);

  // compact piece with the peak exponent factored out; the exponent
  // beta sigma(z) - z^2/2 is concave on each segment, so its max is at a
  // knot or at an interior stationary point z* = beta * slope
  double peak = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i)
    peak = std::max(peak, beta * law.value[i] - 0.5 * law.grid[i] * law.grid[i]);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double s =
        (law.value[i + 1] - law.value[i]) / (law.grid[i + 1] - law.grid[i]);
    const double zs = beta * s;
    if (zs > law.grid[i] && zs < law.grid[i + 1])
      peak = std::max(peak, beta * law.map(zs) - 0.5 * zs * zs);
  }
  const auto f = [&](double z) {
    return std::exp(beta * law.map(z) - 0.5 * z * z - peak);
  };
  QuadBudget bud;
  const double integral = panel_simpson(f, law.grid, 1e-10, bud);
  const double logC = peak + std::log(integral * 0.39894228040143267794);

  const double top = std::max({logL, logC, logR});
  return top + std::log(std::exp(logL - top) + std::exp(logC - top) +
                        std::exp(logR - top));
}

double mu(const NoiseLaw& law, double beta) {
  double v;
  switch (law.kind) {
    case NoiseLaw::Kind::standard_gaussian:
      v = std::exp(beta * beta);
      break;
    case NoiseLaw::Kind::affine_gaussian:
      v = std::exp(beta * beta * law.a * law.a);
      break;
    case NoiseLaw::Kind::lipschitz_map:
    default:
      v = std::exp(log_mgf(law, 2.0 * beta) - 2.0 * log_mgf(law, beta));
      break;
  }
  return std::max(v, 1.0);  // mu(0) = 1 and mu is nondecreasing; clamp fp dust
}

std::optional<double> beta0(const NoiseLaw& law, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0))
    throw ConfigError("beta0 needs a return probability in (0,1)");
  // bisection runs on log mu <= log(1/rho): the log form stays finite at
  // the beta = 64 cap, where mu itself can overflow for table laws
  const double log_target = -std::log(rho);
  const auto log_mu = [&](double b) {
    return std::max(log_mgf(law, 2.0 * b) - 2.0 * log_mgf(law, b), 0.0);
  };
  constexpr double kCap = 64.0;
  if (log_mu(kCap) <= log_target) return std::nullopt;  // effectively infinite
  double lo = 0.0, hi = kCap;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (log_mu(mid) <= log_target ? lo : hi) = mid;
  }
  return lo;
}

// ---- environments ----

Environment Environment::hashed(uint64_t seed, NoiseLaw law) {
  law.validate();
  Environment env;
  env.kind = Kind::hashed;
  env.seed = seed;
  env.law = std::move(law);
  return env;
}

Environment Environment::zeros() {
  Environment env;
  env.kind = Kind::zeros;
  return env;
}

Environment Environment::zeros_with_bump(int64_t t, std::vector<int64_t> x, double v) {
  Environment env;
  env.kind = Kind::bump;
  env.bump_t = t;
  env.bump_x = std::move(x);
  env.bump_value = v;
  return env;
}

}  // namespace dpkz
