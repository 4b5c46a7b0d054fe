#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpkz/noise.hpp"
#include "dpkz/slab.hpp"
#include "dpkz/stats.hpp"

namespace dpkz {

// Initial surface profile g, evaluated at macroscopic points u = eps * x.
// Bounded Lipschitz except `linear`, which is the standard growing test
// profile with its own closed forms.
struct InitialCondition {
  enum class Kind { zero, constant, linear, custom };

  Kind kind = Kind::zero;
  double c = 0.0;
  std::vector<double> a;  // linear: g(u) = a . u
  std::function<double(const double*, int)> fn;
  double lipschitz = 0.0;  // bound on the gradient norm
  std::string name = "zero";

  static InitialCondition zero();
  static InitialCondition constant(double c);
  static InitialCondition linear(std::vector<double> a);
  static InitialCondition custom(std::string name,
                                 std::function<double(const double*, int)> fn,
                                 double lipschitz);
  // min(|u|, cap): bounded, Lipschitz constant 1; the CLI's stock non-trivial profile
  static InitialCondition clipped_norm(double cap);

  void validate(int d) const;
  double eval(const double* u, int d) const;
  double eval(const std::vector<double>& u) const { return eval(u.data(), int(u.size())); }
};

// beta * f(t, .) on a box around `center` of half-width t + pad per axis:
// initialize beta * g(eps x) over the box and run t recursion steps.
Slab polymer_surface(const Environment& env, double beta, const InitialCondition& g,
                     double eps, int64_t t, const std::vector<int64_t>& center,
                     int64_t pad, bool parallel);

// point values of the normalized partition functions. F is the renormalized
// log: F = beta f - t log(2d m(beta)); value = exp(F). The law supplies
// m(beta) even when env is a debug environment.
struct NormalizedPoint {
  double value = 0.0;
  double F = 0.0;
};
NormalizedPoint normalized_Y(const Environment& env, const NoiseLaw& law, double beta,
                             int64_t t, const std::vector<int64_t>& x, bool parallel);
NormalizedPoint partition_Z(const Environment& env, const NoiseLaw& law, double beta,
                            const InitialCondition& g, double eps, int64_t t,
                            const std::vector<int64_t>& x, bool parallel);

// exact beta * f(t, x) by full path enumeration; refuses beyond (2d)^t = 1.2e7 paths
double brute_force_logf(const Environment& env, double beta, const InitialCondition& g,
                        double eps, int64_t t, const std::vector<int64_t>& x);

// Split at an intermediate time s: Z(t,x) = sum over y of Y(s,t,x,y) Z(s,y),
// where Y(s,t,x,y) carries the noise on (s, t] and is normalized by
// (2d m)^{t-s}. zeta is Y normalized to a pmf over the reachable set D.
struct MidpointDecomposition {
  int64_t s = 0, t = 0;
  std::vector<int64_t> x;
  std::vector<std::vector<int64_t>> sites;  // D(s,t,x)
  std::vector<double> Y;                    // per site
  std::vector<double> zeta;
  double Y_total = 0.0;
  double Z_t = 0.0;      // Z(t,x) computed directly
  double Z_resum = 0.0;  // sum_y Y(s,t,x,y) Z(s,y)
};
MidpointDecomposition midpoint_decomposition(const Environment& env, const NoiseLaw& law,
                                             double beta, const InitialCondition& g,
                                             double eps, int64_t s, int64_t t,
                                             const std::vector<int64_t>& x, bool parallel);

// eta(beta, t) = E F(t, 0) with flat initial data, one cone run per
// environment shared by every checkpoint in t_list (ascending)
struct EtaPoint {
  int64_t t = 0;
  RunStats stats;
};
std::vector<EtaPoint> eta_estimate(const NoiseLaw& law, double beta, int d,
                                   const std::vector<int64_t>& t_list, int64_t replicates,
                                   uint64_t seed, bool parallel);

// E exp(-theta F(t,0)): boundedness of these is the lower-tail control
struct LowerTailRow {
  double theta = 0.0;
  int64_t t = 0;
  RunStats stats;
};
std::vector<LowerTailRow> lower_tail_check(const NoiseLaw& law, double beta, int d,
                                           const std::vector<double>& thetas,
                                           const std::vector<int64_t>& t_list,
                                           int64_t replicates, uint64_t seed,
                                           bool parallel);

}  // namespace dpkz
