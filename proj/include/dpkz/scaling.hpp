#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "dpkz/polymer.hpp"
#include "dpkz/slab.hpp"

namespace dpkz {

// floor with a snap guard: decimal inputs like 0.1^-2 * 1 land at
// 99.99999999999998 in doubles and must floor to 100, not 99. Anything
// within 1e-9 below an integer is treated as that integer.
inline int64_t floor_snap(double v) {
  double f = std::floor(v);
  if (v - f > 1.0 - 1e-9) f += 1.0;
  return int64_t(f);
}

// (t, x) on the macroscopic grid mapped to lattice coordinates, plus the
// averaging radius r_eps = max(1, c * eps^-gamma)
struct ScalingPoint {
  double eps = 0.0;
  int64_t t_eps = 0;
  std::vector<int64_t> x_eps;
  double r_eps = 1.0;

  static ScalingPoint make(double eps, double t, const std::vector<double>& x,
                           double gamma, double c);
};

// closed Euclidean ball B(center, r) on the lattice, fixed enumeration order
std::vector<std::vector<int64_t>> ball_points(const std::vector<int64_t>& center,
                                              double r);

// X = ball average of F(t_eps, .) = beta f - t_eps log(2d m); the smoothed
// rescaled surface is f_tilde = (X - eta_hat) / beta
struct SmoothedValue {
  double f_tilde = 0.0;
  double X = 0.0;
  int64_t ball_sites = 0;
};
SmoothedValue smoothed_surface(const Slab& slab, const ScalingPoint& sp, double beta,
                               const NoiseLaw& law, double eta_hat);

// single-site (unsmoothed) value of f^(eps) at a lattice site
double unsmoothed_value(const Slab& slab, const std::vector<int64_t>& site, double beta,
                        const NoiseLaw& law, double eta_hat);

// compactly supported test functions on the macroscopic side
struct TestFunction {
  enum class Kind { smooth_bump, tensor_cosine };

  Kind kind = Kind::smooth_bump;
  std::vector<double> center;
  double radius = 1.0;

  // smooth_bump: exp(1 - 1/(1 - |s|^2)) inside the Euclidean ball, 0 outside
  // tensor_cosine: product of cos^2(pi s_i / 2) on [-1,1] per axis
  static TestFunction smooth_bump(std::vector<double> center, double radius);
  static TestFunction tensor_cosine(std::vector<double> center, double radius);

  void validate(int d) const;
  double eval(const double* u, int d) const;
  double eval(const std::vector<double>& u) const { return eval(u.data(), int(u.size())); }
  // L-inf half-width of the support box around `center`
  double support_radius() const { return radius; }
};

// f^(eps) evaluated on a dense lattice window [lo, hi] per axis (inclusive)
struct LatticeField {
  int d = 0;
  std::vector<int64_t> lo, hi;
  std::vector<double> value;  // row-major, last axis fastest

  int64_t index(const int64_t* z) const {
    int64_t idx = 0;
    for (int i = 0; i < d; ++i)
      idx = idx * (hi[size_t(i)] - lo[size_t(i)] + 1) + (z[i] - lo[size_t(i)]);
    return idx;
  }
  double at(const int64_t* z) const { return value[size_t(index(z))]; }
  bool contains(const int64_t* z) const {
    for (int i = 0; i < d; ++i)
      if (z[i] < lo[size_t(i)] || z[i] > hi[size_t(i)]) return false;
    return true;
  }
};
LatticeField build_field(const Slab& slab, double beta, const NoiseLaw& law,
                         double eta_hat, const std::vector<int64_t>& lo,
                         const std::vector<int64_t>& hi);

// lattice window [lo, hi] per axis that covers supp(phi)/eps plus one ring;
// weak_integral sums over exactly this window, planners size slabs with it
void phi_lattice_window(const TestFunction& phi, double eps, int d,
                        std::vector<int64_t>& lo, std::vector<int64_t>& hi);

// eps^d * sum over lattice z of f^(eps)(z) phi(eps z). The field window must
// cover the support of phi inflated by one lattice ring; otherwise
// CoverageError.
double weak_integral(const LatticeField& field, const TestFunction& phi, double eps);

// fine-grid midpoint-rule references for the weak-convergence checks
double reference_integral_phi(const TestFunction& phi, int d, int grid_n);
double reference_integral_h_phi(const InitialCondition& g, double beta, int d, double t,
                                const TestFunction& phi, int grid_n);

}  // namespace dpkz
