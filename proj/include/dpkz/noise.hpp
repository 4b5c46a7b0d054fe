#pragma once
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpkz/error.hpp"
#include "dpkz/rng.hpp"

namespace dpkz {

// Inverse CDF of the standard normal, Wichura's PPND16 rational
// approximations. Absolute error below ~1e-15, far inside the 1e-9 the
// callers need; the unit suite checks it against a long-double
// bisection/Newton oracle built on erfc.
inline double norm_icdf(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

// A noise law is the pushforward of a standard Gaussian Z under a Lipschitz
// map sigma: xi = sigma(Z). The Gaussian kinds have closed-form MGFs used as
// quadrature oracles; lipschitz_map is a strictly increasing piecewise-linear
// table, extended linearly beyond the grid with the boundary slopes.
struct NoiseLaw {
  enum class Kind { standard_gaussian, affine_gaussian, lipschitz_map };

  Kind kind = Kind::standard_gaussian;
  double a = 1.0;  // affine: sigma(z) = a z + b
  double b = 0.0;
  std::vector<double> grid;   // lipschitz_map knots, strictly increasing
  std::vector<double> value;  // sigma(grid[i])
  double lipschitz = 1.0;     // declared bound K on |sigma'|

  static NoiseLaw standard_gaussian();
  static NoiseLaw affine_gaussian(double a, double b);
  static NoiseLaw lipschitz_map(std::vector<double> grid, std::vector<double> value,
                                double lipschitz);
  // two-column CSV (z, sigma) with a header line
  static NoiseLaw lipschitz_map_from_csv(const std::string& path, double lipschitz);

  void validate() const;  // throws ConfigError on a malformed law
  std::string describe() const;

  double map(double z) const {
    switch (kind) {
      case Kind::standard_gaussian:
        return z;
      case Kind::affine_gaussian:
        return a * z + b;
      case Kind::lipschitz_map:
      default: {
        const size_t n = grid.size();
        if (z <= grid.front()) {
          const double s = (value[1] - value[0]) / (grid[1] - grid[0]);
          return value[0] + s * (z - grid[0]);
        }
        if (z >= grid.back()) {
          const double s = (value[n - 1] - value[n - 2]) / (grid[n - 1] - grid[n - 2]);
          return value[n - 1] + s * (z - grid[n - 1]);
        }
        size_t lo = 0, hi = n - 1;
        while (hi - lo > 1) {
          const size_t mid = (lo + hi) / 2;
          (grid[mid] <= z ? lo : hi) = mid;
        }
        const double w = (z - grid[lo]) / (grid[lo + 1] - grid[lo]);
        return value[lo] + w * (value[lo + 1] - value[lo]);
      }
    }
  }
};

// m(beta) = E exp(beta xi). Closed form for the Gaussian kinds, adaptive
// quadrature plus exact linear-tail integrals otherwise.
double mgf(const NoiseLaw& law, double beta);

// quadrature path regardless of kind (test hook: lets the closed forms act
// as oracles for the integrator)
double mgf_quadrature(const NoiseLaw& law, double beta);

// log m(beta), stable for the large beta the threshold bisection probes:
// closed form for the Gaussian kinds; for tables, the compact piece is
// integrated with its peak exponent factored out and the linear tails are
// kept in log form
double log_mgf(const NoiseLaw& law, double beta);

// mu(beta) = m(2 beta) / m(beta)^2, clamped to >= 1 (it is one exactly at
// beta = 0 and nondecreasing)
double mu(const NoiseLaw& law, double beta);

// Largest beta with mu(beta) <= 1/rho, found by bisection to 1e-9.
// nullopt means "no finite threshold below the search cap" (cap 64).
std::optional<double> beta0(const NoiseLaw& law, double rho);

namespace detail {
constexpr uint64_t kEnvSalt = 0x9fb21c651e98df25ULL;
}

// Space-time noise field xi(t, x): a pure function of (seed, t, x) via the
// chained counter hash, so any two evaluations agree no matter the sweep
// order or thread count. zeros/bump are deterministic debug environments for
// closed-form tests.
struct Environment {
  enum class Kind { hashed, zeros, bump };

  Kind kind = Kind::hashed;
  uint64_t seed = 0;
  NoiseLaw law;
  int64_t bump_t = 0;
  std::vector<int64_t> bump_x;
  double bump_value = 0.0;

  static Environment hashed(uint64_t seed, NoiseLaw law);
  static Environment zeros();
  static Environment zeros_with_bump(int64_t t, std::vector<int64_t> x, double v);

  // hash prefix over (seed, t); extend per coordinate. Kernels hoist the
  // prefix over all but the innermost coordinate of a row.
  uint64_t prefix(int64_t t) const {
    return hash_chain(seed ^ detail::kEnvSalt, static_cast<uint64_t>(t));
  }
  static uint64_t extend(uint64_t pfx, int64_t coord) {
    return hash_chain(pfx, zigzag64(coord));
  }

  double xi(int64_t t, const int64_t* x, int d) const {
    switch (kind) {
      case Kind::hashed: {
        uint64_t h = prefix(t);
        for (int i = 0; i < d; ++i) h = extend(h, x[i]);
        return law.map(norm_icdf(to_unit_open(h)));
      }
      case Kind::zeros:
        return 0.0;
      case Kind::bump:
      default: {
        if (t != bump_t || d != static_cast<int>(bump_x.size())) return 0.0;
        for (int i = 0; i < d; ++i)
          if (x[i] != bump_x[i]) return 0.0;
        return bump_value;
      }
    }
  }
  double xi(int64_t t, const std::vector<int64_t>& x) const {
    return xi(t, x.data(), static_cast<int>(x.size()));
  }
};

}  // namespace dpkz
