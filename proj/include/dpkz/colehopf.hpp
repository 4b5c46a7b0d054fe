#pragma once
#include <cstdint>
#include <vector>

#include "dpkz/polymer.hpp"
#include "dpkz/slab.hpp"

namespace dpkz {

// coefficients of the limiting equation dh = nu Lap h + lambda |grad h|^2
struct KpzParams {
  double nu = 0.0;
  double lambda = 0.0;

  static KpzParams from(double beta, int d) {
    if (d < 1) throw ConfigError("dimension must be positive");
    KpzParams p;
    p.nu = 1.0 / double(2 * d);
    p.lambda = beta / double(d);
    return p;
  }
};

// log G_eps(t, .) on a slab, where G_eps(t, x) = E exp(beta g(eps (x + S_t)))
// is the discrete heat semigroup applied to exp(beta g_eps)
Slab heat_surface(const InitialCondition& g, double beta, double eps, int64_t t,
                  const std::vector<int64_t>& center, int64_t pad, bool parallel);

// closed form of log G_eps(t, x) for linear g(u) = a . u:
//   beta eps a.x + t log( (1/d) sum_j cosh(beta eps a_j) )
double logG_linear_closed(const std::vector<double>& a, double beta, double eps,
                          int64_t t, const std::vector<int64_t>& x);

// Exact log G_eps(t, x) at one point for deep t. The walk pmf P(S_t = z) is
// invariant under coordinate permutations and sign flips for every t, so the
// heat recursion runs on sorted-nonnegative tuples only (a 1/2^d d! reduction
// in d=3: 48x) and expands over orbits in the final sum. Bit-for-bit the same
// recursion, far smaller footprint; refuses if even the reduced state would
// not fit in budget_bytes.
double exact_logG_point(const InitialCondition& g, double beta, double eps, int64_t t,
                        const std::vector<int64_t>& x, double budget_bytes = 8e9);

// Solution of the limiting equation via the Cole-Hopf representation
//   h(t, x) = (1/beta) log E exp(beta g(sqrt(t/d) Z + x)),  Z ~ N(0, I_d).
// zero/constant/linear have closed forms; custom profiles integrate by
// adaptive tensor Gauss-Hermite (d <= 3) or randomized quasi-Monte Carlo
// (d > 3, se reported).
struct HValue {
  double h = 0.0;
  double se = 0.0;  // 0 for closed forms and deterministic quadrature
};
HValue cole_hopf_h(const InitialCondition& g, double beta, int d, double t,
                   const std::vector<double>& x);

// side-by-side comparison of the discrete heat value (on the lattice scaled
// by eps) against the continuum Cole-Hopf value at the same macroscopic point
struct GlimRow {
  double eps = 0.0;
  int64_t t_eps = 0;
  double discrete = 0.0;   // (1/beta) log G_eps(t_eps, x_eps)
  double continuum = 0.0;  // h(t, x)
  double gap = 0.0;        // discrete - continuum
};
std::vector<GlimRow> glim_check(const InitialCondition& g, double beta, int d, double t,
                                const std::vector<double>& x,
                                const std::vector<double>& eps_list,
                                double budget_bytes = 8e9);

}  // namespace dpkz
