#include "dpkz/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpkz/colehopf.hpp"

namespace dpkz {

namespace {
std::string site_str(const int64_t* x, int d) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < d; ++i) os << (i ? "," : "") << x[i];
  os << ")";
  return os.str();
}
}  // namespace

// ---- scaling maps ----

ScalingPoint ScalingPoint::make(double eps, double t, const std::vector<double>& x,
                                double gamma, double c) {
  if (!(eps > 0.0) || !(eps < 1.0)) throw ConfigError("eps must lie in (0,1)");
  if (!(t > 0.0)) throw ConfigError("macroscopic time must be positive");
  if (!(gamma > 0.0) || !(gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  if (!(c > 0.0)) throw ConfigError("radius prefactor must be positive");

  ScalingPoint sp;
  sp.eps = eps;
  sp.t_eps = floor_snap(t / (eps * eps));
  if (sp.t_eps < 1)
    throw ConfigError("t=" + std::to_string(t) + " is below one lattice step at eps=" +
                      std::to_string(eps));
  sp.x_eps.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) sp.x_eps[i] = floor_snap(x[i] / eps);
  sp.r_eps = std::max(1.0, c * std::pow(eps, -gamma));
  if (!(sp.r_eps < 1.0 / eps))
    throw ConfigError("averaging radius " + std::to_string(sp.r_eps) +
                      " reaches the macroscopic scale 1/eps; lower c or gamma");
  return sp;
}

std::vector<std::vector<int64_t>> ball_points(const std::vector<int64_t>& center,
                                              double r) {
  if (!(r >= 0.0)) throw ConfigError("ball radius must be >= 0");
  const int d = int(center.size());
  const int64_t R = int64_t(std::floor(r + 1e-12));
  const double r2 = r * r + 1e-9;  // integer norms sit >= 1 apart; snap boundary

  std::vector<std::vector<int64_t>> pts;
  std::vector<int64_t> off(size_t(d), -R);
  while (true) {
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) n2 += double(off[size_t(i)]) * double(off[size_t(i)]);
    if (n2 <= r2) {
      std::vector<int64_t> p(static_cast<size_t>(d));
      for (int i = 0; i < d; ++i) p[size_t(i)] = center[size_t(i)] + off[size_t(i)];
      pts.push_back(std::move(p));
    }
    int i = d - 1;
    while (i >= 0 && ++off[size_t(i)] > R) off[size_t(i--)] = -R;
    if (i < 0) break;
  }
  return pts;
}

// ---- rescaled surfaces ----

namespace {
double renorm_offset(const Slab& slab, const NoiseLaw& law, double beta) {
  return double(slab.t) * (std::log(2.0 * slab.d) + std::log(mgf(law, beta)));
}
}  // namespace

SmoothedValue smoothed_surface(const Slab& slab, const ScalingPoint& sp, double beta,
                               const NoiseLaw& law, double eta_hat) {
  if (slab.t != sp.t_eps)
    throw ConfigError("slab is at t=" + std::to_string(slab.t) +
                      " but the scaling point expects t=" + std::to_string(sp.t_eps));
  if (int(sp.x_eps.size()) != slab.d) throw ConfigError("scaling point dimension mismatch");
  const auto pts = ball_points(sp.x_eps, sp.r_eps);
  const double off = renorm_offset(slab, law, beta);

  double sum = 0.0;
  for (const auto& p : pts) {
    if (!slab.in_valid(p.data()))
      throw CoverageError("averaging ball site " + site_str(p.data(), slab.d) +
                          " is outside the exact region of the surface");
    sum += slab.v[size_t(slab.index(p.data()))] - off;
  }
  SmoothedValue out;
  out.ball_sites = int64_t(pts.size());
  out.X = sum / double(pts.size());
  out.f_tilde = (out.X - eta_hat) / beta;
  return out;
}

double unsmoothed_value(const Slab& slab, const std::vector<int64_t>& site, double beta,
                        const NoiseLaw& law, double eta_hat) {
  if (int(site.size()) != slab.d) throw ConfigError("site dimension mismatch");
  if (!slab.in_valid(site.data()))
    throw CoverageError("site " + site_str(site.data(), slab.d) +
                        " is outside the exact region of the surface");
  const double off = renorm_offset(slab, law, beta);
  return (slab.v[size_t(slab.index(site.data()))] - off - eta_hat) / beta;
}

// ---- test functions ----

TestFunction TestFunction::smooth_bump(std::vector<double> center, double radius) {
  TestFunction f;
  f.kind = Kind::smooth_bump;
  f.center = std::move(center);
  f.radius = radius;
  return f;
}

TestFunction TestFunction::tensor_cosine(std::vector<double> center, double radius) {
  TestFunction f;
  f.kind = Kind::tensor_cosine;
  f.center = std::move(center);
  f.radius = radius;
  return f;
}

void TestFunction::validate(int d) const {
  if (int(center.size()) != d)
    throw ConfigError("test function center has dimension " +
                      std::to_string(center.size()) + ", need " + std::to_string(d));
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ConfigError("test function radius must be positive and finite");
  for (double c : center)
    if (!std::isfinite(c)) throw ConfigError("test function center must be finite");
}

double TestFunction::eval(const double* u, int d) const {
  switch (kind) {
    case Kind::smooth_bump: {
      double s2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const double s = (u[i] - center[size_t(i)]) / radius;
        s2 += s * s;
      }
      if (s2 >= 1.0) return 0.0;
      return std::exp(1.0 - 1.0 / (1.0 - s2));
    }
    case Kind::tensor_cosine:
    default: {
      double prod = 1.0;
      for (int i = 0; i < d; ++i) {
        const double s = (u[i] - center[size_t(i)]) / radius;
        if (s <= -1.0 || s >= 1.0) return 0.0;
        const double c = std::cos(1.5707963267948966 * s);
        prod *= c * c;
      }
      return prod;
    }
  }
}

// ---- lattice fields and the weak pairing ----

LatticeField build_field(const Slab& slab, double beta, const NoiseLaw& law,
                         double eta_hat, const std::vector<int64_t>& lo,
                         const std::vector<int64_t>& hi) {
  const int d = slab.d;
  if (int(lo.size()) != d || int(hi.size()) != d)
    throw ConfigError("field window dimension mismatch");
  LatticeField f;
  f.d = d;
  f.lo = lo;
  f.hi = hi;
  int64_t total = 1;
  for (int i = 0; i < d; ++i) {
    if (hi[size_t(i)] < lo[size_t(i)]) throw ConfigError("field window is empty");
    total *= hi[size_t(i)] - lo[size_t(i)] + 1;
  }
  f.value.resize(size_t(total));
  const double off = renorm_offset(slab, law, beta);

  std::vector<int64_t> z = lo;
  for (int64_t idx = 0; idx < total; ++idx) {
    if (!slab.in_valid(z.data()))
      throw CoverageError("field site " + site_str(z.data(), d) +
                          " is outside the exact region of the surface");
    f.value[size_t(idx)] = (slab.v[size_t(slab.index(z.data()))] - off - eta_hat) / beta;
    for (int i = d - 1; i >= 0; --i) {
      if (++z[size_t(i)] <= hi[size_t(i)]) break;
      z[size_t(i)] = lo[size_t(i)];
    }
  }
  return f;
}

void phi_lattice_window(const TestFunction& phi, double eps, int d,
                        std::vector<int64_t>& lo, std::vector<int64_t>& hi) {
  phi.validate(d);
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  lo.resize(size_t(d));
  hi.resize(size_t(d));
  const double R = phi.support_radius();
  for (int i = 0; i < d; ++i) {
    lo[size_t(i)] = floor_snap((phi.center[size_t(i)] - R) / eps) - 1;
    hi[size_t(i)] = floor_snap((phi.center[size_t(i)] + R) / eps) + 1;
  }
}

double weak_integral(const LatticeField& field, const TestFunction& phi, double eps) {
  const int d = field.d;
  std::vector<int64_t> lo, hi;
  phi_lattice_window(phi, eps, d, lo, hi);
  for (int i = 0; i < d; ++i) {
    if (field.lo[size_t(i)] > lo[size_t(i)] || field.hi[size_t(i)] < hi[size_t(i)])
      throw CoverageError(
          "field window does not cover the test-function support on axis " +
          std::to_string(i) + ": need [" + std::to_string(lo[size_t(i)]) + "," +
          std::to_string(hi[size_t(i)]) + "], have [" +
          std::to_string(field.lo[size_t(i)]) + "," + std::to_string(field.hi[size_t(i)]) +
          "]");
  }

  double u[16];
  double acc = 0.0;
  std::vector<int64_t> z = lo;
  while (true) {
    for (int i = 0; i < d; ++i) u[i] = eps * double(z[size_t(i)]);
    const double w = phi.eval(u, d);
    if (w != 0.0) acc += field.at(z.data()) * w;
    int i = d - 1;
    while (i >= 0) {
      if (++z[size_t(i)] <= hi[size_t(i)]) break;
      z[size_t(i)] = lo[size_t(i)];
      --i;
    }
    if (i < 0) break;
  }
  return std::pow(eps, double(d)) * acc;
}

// ---- fine-grid references ----

double reference_integral_phi(const TestFunction& phi, int d, int grid_n) {
  phi.validate(d);
  if (grid_n < 2) throw ConfigError("grid resolution must be >= 2");
  const double R = phi.support_radius();
  const double h = 2.0 * R / double(grid_n);
  double u[16];
  int idx[16] = {0};
  double acc = 0.0, comp = 0.0;
  while (true) {
    for (int i = 0; i < d; ++i)
      u[i] = phi.center[size_t(i)] - R + (double(idx[i]) + 0.5) * h;
    const double y = phi.eval(u, d) - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
    int i = d - 1;
    while (i >= 0 && ++idx[i] == grid_n) idx[i--] = 0;
    if (i < 0) break;
  }
  return acc * std::pow(h, double(d));
}

double reference_integral_h_phi(const InitialCondition& g, double beta, int d, double t,
                                const TestFunction& phi, int grid_n) {
  phi.validate(d);
  if (grid_n < 2) throw ConfigError("grid resolution must be >= 2");
  const double R = phi.support_radius();
  const double h = 2.0 * R / double(grid_n);
  std::vector<double> u(static_cast<size_t>(d));
  int idx[16] = {0};
  double acc = 0.0, comp = 0.0;
  while (true) {
    for (int i = 0; i < d; ++i)
      u[size_t(i)] = phi.center[size_t(i)] - R + (double(idx[i]) + 0.5) * h;
    const double w = phi.eval(u.data(), d);
    if (w != 0.0) {
      const double y = w * cole_hopf_h(g, beta, d, t, u).h - comp;
      const double s = acc + y;
      comp = (s - acc) - y;
      acc = s;
    }
    int i = d - 1;
    while (i >= 0 && ++idx[i] == grid_n) idx[i--] = 0;
    if (i < 0) break;
  }
  return acc * std::pow(h, double(d));
}

}  // namespace dpkz
