#include "dpkz/slab.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace dpkz {

namespace {

std::string coords_str(const int64_t* x, int d) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < d; ++i) os << (i ? "," : "") << x[i];
  os << ")";
  return os.str();
}

// flat geometry snapshot so the hot loops never touch std::vector internals
struct Geom {
  int d;
  int64_t center[16];
  int64_t lo[16];
  int64_t stride[16];

  explicit Geom(const Slab& s) : d(s.d) {
    for (int i = 0; i < d; ++i) {
      center[i] = s.center[size_t(i)];
      lo[i] = s.center[size_t(i)] - s.halfw[size_t(i)];
      stride[i] = s.stride[size_t(i)];
    }
  }
};

// Enumerate the rows of the region |x - center|_inf <= R (a row = the run
// along the last axis) and hand each row's base offset to fn. Row order is
// fixed; the parallel variant writes disjoint rows, so results cannot depend
// on the schedule.
//
// DFIX pins the dimension at compile time for the common cases so the
// neighbour-sum loop unrolls; DFIX == 0 is the generic fallback.
template <int DFIX, class RowFn>
void rows_in_radius(const Geom& g, int64_t R, bool parallel, const RowFn& fn) {
  const int d = DFIX ? DFIX : g.d;
  const int64_t L = 2 * R + 1;
  int64_t nrows = 1;
  for (int i = 0; i + 1 < d; ++i) nrows *= L;
  (void)parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && nrows > 7)
#endif
  for (int64_t r = 0; r < nrows; ++r) {
    int64_t outer[16];
    int64_t rem = r;
    int64_t base = g.center[d - 1] - R - g.lo[d - 1];
    for (int i = d - 2; i >= 0; --i) {
      const int64_t oi = g.center[i] - R + (rem % L);
      rem /= L;
      outer[i] = oi;
      base += (oi - g.lo[i]) * g.stride[i];
    }
    fn(outer, g.center[d - 1] - R, base, L);
  }
}

// neighbour sums: dst[j] = sum of src over the 2d neighbours of site j
template <int DFIX>
void sum_row(const Geom& g, const double* src, double* dst, int64_t base, int64_t L) {
  const double* s = src + base;
  double* const out = dst + base;
  if constexpr (DFIX == 3) {
    const int64_t s0 = g.stride[0], s1 = g.stride[1];
    for (int64_t j = 0; j < L; ++j)
      out[j] = s[j - 1] + s[j + 1] + s[j - s0] + s[j + s0] + s[j - s1] + s[j + s1];
  } else {
    const int d = DFIX ? DFIX : g.d;
    for (int64_t j = 0; j < L; ++j) {
      double acc = s[j - 1] + s[j + 1];
      for (int i = 0; i + 1 < d; ++i) acc += s[j - g.stride[i]] + s[j + g.stride[i]];
      out[j] = acc;
    }
  }
}

// one linear-domain step: dst = (per-site weight) * (1/2d) * neighbour sums.
// WeightFn multiplies a finished row in place.
template <int DFIX, class WeightFn>
void sweep_step(const Geom& g, int64_t Rn, const double* src, double* dst, bool parallel,
                const WeightFn& wf) {
  rows_in_radius<DFIX>(g, Rn, parallel,
                       [&](const int64_t* outer, int64_t x0, int64_t base, int64_t L) {
                         sum_row<DFIX>(g, src, dst, base, L);
                         wf(outer, x0, dst + base, L);
                       });
}

struct StepCtx {
  const Environment* env;  // nullptr for the heat recursion
  double beta;
  double inv2d;
  int64_t t_next;
};

template <int DFIX>
void dispatch_step(const Geom& g, const StepCtx& c, int64_t Rn, const double* src,
                   double* dst, bool parallel) {
  const double inv2d = c.inv2d;
  const auto scale_only = [inv2d](const int64_t*, int64_t, double* row, int64_t L) {
    for (int64_t j = 0; j < L; ++j) row[j] *= inv2d;
  };
  if (c.env == nullptr || c.env->kind == Environment::Kind::zeros) {
    sweep_step<DFIX>(g, Rn, src, dst, parallel, scale_only);
    return;
  }
  if (c.env->kind == Environment::Kind::bump) {
    const Environment& env = *c.env;
    const double beta = c.beta;
    const int64_t tn = c.t_next;
    const int d = DFIX ? DFIX : g.d;
    sweep_step<DFIX>(g, Rn, src, dst, parallel,
                     [&, d](const int64_t* outer, int64_t x0, double* row, int64_t L) {
                       for (int64_t j = 0; j < L; ++j) row[j] *= inv2d;
                       if (tn != env.bump_t) return;
                       for (int i = 0; i + 1 < d; ++i)
                         if (outer[i] != env.bump_x[size_t(i)]) return;
                       const int64_t j = env.bump_x[size_t(d - 1)] - x0;
                       if (j >= 0 && j < L) row[j] *= std::exp(beta * env.bump_value);
                     });
    return;
  }
  // hashed noise: hoist the hash prefix over (t, outer coords); one chained
  // hash, one quantile and one exp per site
  const Environment& env = *c.env;
  const double beta = c.beta;
  const int64_t tn = c.t_next;
  const int d = DFIX ? DFIX : g.d;
  const auto run = [&](auto map) {
    sweep_step<DFIX>(g, Rn, src, dst, parallel,
                     [&, d, map](const int64_t* outer, int64_t x0, double* row, int64_t L) {
                       uint64_t pfx = env.prefix(tn);
                       for (int i = 0; i + 1 < d; ++i) pfx = Environment::extend(pfx, outer[i]);
                       for (int64_t j = 0; j < L; ++j) {
                         const uint64_t h = Environment::extend(pfx, x0 + j);
                         const double z = norm_icdf(to_unit_open(h));
                         row[j] *= inv2d * std::exp(beta * map(z));
                       }
                     });
  };
  switch (env.law.kind) {
    case NoiseLaw::Kind::standard_gaussian:
      run([](double z) { return z; });
      break;
    case NoiseLaw::Kind::affine_gaussian: {
      const double a = env.law.a, b = env.law.b;
      run([a, b](double z) { return a * z + b; });
      break;
    }
    case NoiseLaw::Kind::lipschitz_map:
    default: {
      const NoiseLaw* law = &env.law;
      run([law](double z) { return law->map(z); });
      break;
    }
  }
}

void dispatch_step_any(const Geom& g, const StepCtx& c, int64_t Rn, const double* src,
                       double* dst, bool parallel) {
  switch (g.d) {
    case 3: dispatch_step<3>(g, c, Rn, src, dst, parallel); break;
    case 4: dispatch_step<4>(g, c, Rn, src, dst, parallel); break;
    default: dispatch_step<0>(g, c, Rn, src, dst, parallel); break;
  }
}

double max_in_radius(const Geom& g, int64_t R, const double* buf) {
  double mx = -std::numeric_limits<double>::infinity();
  rows_in_radius<0>(g, R, false, [&](const int64_t*, int64_t, int64_t base, int64_t L) {
    for (int64_t j = 0; j < L; ++j) mx = std::max(mx, buf[base + j]);
  });
  return mx;
}

void scale_in_radius(const Geom& g, int64_t R, double* buf, double factor) {
  rows_in_radius<0>(g, R, false, [&](const int64_t*, int64_t, int64_t base, int64_t L) {
    for (int64_t j = 0; j < L; ++j) buf[base + j] *= factor;
  });
}

// zero every site of buf outside |x - center|_inf <= R (full-box sweep)
void zero_outside_radius(const Slab& s, const Geom& g, int64_t R, double* buf) {
  const int d = s.d;
  const int64_t Lbox = 2 * s.halfw[size_t(d - 1)] + 1;
  int64_t nrows = 1;
  for (int i = 0; i + 1 < d; ++i) nrows *= 2 * s.halfw[size_t(i)] + 1;
  for (int64_t r = 0; r < nrows; ++r) {
    int64_t rem = r;
    int64_t base = 0;
    bool outer_ok = true;
    for (int i = d - 2; i >= 0; --i) {
      const int64_t ext = 2 * s.halfw[size_t(i)] + 1;
      const int64_t xi = g.lo[i] + (rem % ext);
      rem /= ext;
      base += (xi - g.lo[i]) * g.stride[i];
      outer_ok = outer_ok && std::llabs(xi - g.center[i]) <= R;
    }
    if (!outer_ok) {
      std::memset(buf + base, 0, size_t(Lbox) * sizeof(double));
      continue;
    }
    const int64_t jlo = (g.center[d - 1] - R) - g.lo[d - 1];
    const int64_t jhi = (g.center[d - 1] + R) - g.lo[d - 1];
    if (jlo > 0) std::memset(buf + base, 0, size_t(jlo) * sizeof(double));
    if (jhi + 1 < Lbox)
      std::memset(buf + base + jhi + 1, 0, size_t(Lbox - jhi - 1) * sizeof(double));
  }
}

// shared multi-step driver; env == nullptr runs the heat recursion
void advance_core(Slab& s, const Environment* env, double beta, int64_t steps,
                  bool parallel) {
  if (steps < 0) throw ConfigError("cannot advance a negative number of steps");
  if (steps == 0) return;
  if (s.valid_radius < steps)
    throw ConeError("advancing " + std::to_string(steps) + " steps needs validity radius >= " +
                    std::to_string(steps) + ", slab has " + std::to_string(s.valid_radius));
  if (env != nullptr && !std::isfinite(beta)) throw ConfigError("beta must be finite");

  const Geom g(s);
  const double inv2d = 1.0 / double(2 * s.d);
  const double step_const = (env != nullptr) ? std::log(double(2 * s.d)) : 0.0;

  // enter the linear domain: w = exp(v - C) on the valid region, 0 elsewhere
  double C = max_in_radius(g, s.valid_radius, s.v.data());
  if (!std::isfinite(C))
    throw EstimationError("slab holds non-finite values; cannot advance");
  rows_in_radius<0>(g, s.valid_radius, parallel,
                    [&](const int64_t*, int64_t, int64_t base, int64_t L) {
                      for (int64_t j = 0; j < L; ++j)
                        s.v[size_t(base + j)] = std::exp(s.v[size_t(base + j)] - C);
                    });
  zero_outside_radius(s, g, s.valid_radius, s.v.data());

  // Ping-pong buffer, cached per thread across calls. It needs no clearing:
  // step k writes the whole radius R-k region before step k+1 reads it.
  static thread_local std::vector<double> scratch;
  if (scratch.size() < s.v.size()) scratch.resize(s.v.size(), 0.0);
  double* a = s.v.data();
  double* b = scratch.data();
  int64_t R = s.valid_radius;

  for (int64_t k = 1; k <= steps; ++k) {
    StepCtx ctx{env, beta, inv2d, s.t + 1};
    dispatch_step_any(g, ctx, R - 1, a, b, parallel);
    std::swap(a, b);
    --R;
    ++s.t;
    C += step_const;
    if ((k & 15) == 0 && k < steps) {
      const double mx = max_in_radius(g, R, a);
      if (!(mx > 0.0) || !std::isfinite(mx))
        throw EstimationError("linear-domain kernel under/overflowed; beta too large "
                              "for this depth");
      if (mx > 1e80 || mx < 1e-80) {
        scale_in_radius(g, R, a, 1.0 / mx);
        C += std::log(mx);
      }
    }
  }

  // back to the log domain (serial: the ok flag is shared)
  bool ok = true;
  rows_in_radius<0>(g, R, false, [&](const int64_t*, int64_t, int64_t base, int64_t L) {
    for (int64_t j = 0; j < L; ++j) {
      const double w = a[base + j];
      if (!(w > 0.0) || !std::isfinite(w)) ok = false;
      s.v[size_t(base + j)] = std::log(w) + C;
    }
  });
  if (!ok)
    throw EstimationError("linear-domain kernel under/overflowed at readout; "
                          "beta too large for this depth");
  s.valid_radius = R;
}

}  // namespace

// ---- Slab basics ----

Slab Slab::make(std::vector<int64_t> center, std::vector<int64_t> halfw, int64_t t0) {
  if (center.empty() || center.size() != halfw.size())
    throw ConfigError("slab needs matching center/half-width dimensions");
  if (center.size() > 16) throw ConfigError("slab dimension capped at 16");
  Slab s;
  s.d = int(center.size());
  s.t = t0;
  s.center = std::move(center);
  s.halfw = std::move(halfw);
  s.stride.assign(size_t(s.d), 1);
  double total = 1.0;
  for (int i = 0; i < s.d; ++i) {
    if (s.halfw[size_t(i)] < 0) throw ConfigError("slab half-widths must be >= 0");
    total *= double(2 * s.halfw[size_t(i)] + 1);
  }
  if (total > 2.0e9) throw BudgetError("slab would hold over 2e9 sites");
  for (int i = s.d - 2; i >= 0; --i)
    s.stride[size_t(i)] = s.stride[size_t(i) + 1] * (2 * s.halfw[size_t(i) + 1] + 1);
  s.valid_radius = *std::min_element(s.halfw.begin(), s.halfw.end());
  s.v.assign(size_t(total), 0.0);
  return s;
}

void Slab::reset(int64_t t0) {
  t = t0;
  valid_radius = *std::min_element(halfw.begin(), halfw.end());
  std::fill(v.begin(), v.end(), 0.0);
}

void Slab::crop(int64_t r) {
  if (r < 0) throw ConfigError("crop radius must be >= 0");
  for (int i = 0; i < d; ++i)
    if (r > halfw[size_t(i)]) throw ConfigError("crop must shrink the box");
  if (r > valid_radius) throw ConeError("crop would keep stale boundary values");

  // pack the rows of the inner box to the front; destinations never run
  // ahead of their sources, so a forward pass with memmove is safe
  const int64_t row = 2 * r + 1;
  std::vector<int64_t> x(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) x[size_t(i)] = center[size_t(i)] - r;
  int64_t rows = 1;
  for (int i = 0; i + 1 < d; ++i) rows *= row;
  int64_t dst = 0;
  for (int64_t n = 0; n < rows; ++n, dst += row) {
    std::memmove(v.data() + dst, v.data() + index(x.data()), size_t(row) * sizeof(double));
    for (int i = d - 2; i >= 0; --i) {
      if (++x[size_t(i)] <= center[size_t(i)] + r) break;
      x[size_t(i)] = center[size_t(i)] - r;
    }
  }
  v.resize(size_t(dst));
  halfw.assign(size_t(d), r);
  stride.assign(size_t(d), 1);
  for (int i = d - 2; i >= 0; --i) stride[size_t(i)] = stride[size_t(i) + 1] * row;
  valid_radius = r;
}

Slab Slab::make_filled(std::vector<int64_t> center, std::vector<int64_t> halfw, int64_t t0,
                       const std::function<double(const int64_t*, int)>& f) {
  Slab s = make(std::move(center), std::move(halfw), t0);
  const int d = s.d;
  std::vector<int64_t> x(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) x[size_t(i)] = s.center[size_t(i)] - s.halfw[size_t(i)];
  for (int64_t idx = 0; idx < s.size(); ++idx) {
    const double val = f(x.data(), d);
    if (!std::isfinite(val)) throw ConfigError("initial slab values must be finite");
    s.v[size_t(idx)] = val;
    for (int i = d - 1; i >= 0; --i) {
      if (++x[size_t(i)] <= s.center[size_t(i)] + s.halfw[size_t(i)]) break;
      x[size_t(i)] = s.center[size_t(i)] - s.halfw[size_t(i)];
    }
  }
  return s;
}

double Slab::at(const int64_t* x) const {
  if (!in_valid(x))
    throw ConeError("site " + coords_str(x, d) + " is outside the exact region (radius " +
                    std::to_string(valid_radius) + " around the center) at t=" +
                    std::to_string(t));
  return v[size_t(index(x))];
}

void Slab::for_each_in_radius(
    int64_t radius, const std::function<void(const int64_t*, int64_t)>& fn) const {
  if (radius > valid_radius)
    throw ConeError("requested radius " + std::to_string(radius) +
                    " exceeds the exact region (" + std::to_string(valid_radius) + ")");
  const Geom g(*this);
  std::vector<int64_t> x(static_cast<size_t>(d));
  rows_in_radius<0>(g, radius, false,
                    [&](const int64_t* outer, int64_t x0, int64_t base, int64_t L) {
                      for (int i = 0; i + 1 < d; ++i) x[size_t(i)] = outer[i];
                      for (int64_t j = 0; j < L; ++j) {
                        x[size_t(d - 1)] = x0 + j;
                        fn(x.data(), base + j);
                      }
                    });
}

// ---- single literal steps (reference implementations) ----

namespace {

Slab step_logspace_impl(const Slab& in, const Environment* env, double beta,
                        bool parallel) {
  if (in.valid_radius < 1)
    throw ConeError("slab has no exact layer left to consume");
  Slab out = Slab::make(in.center, in.halfw, in.t + 1);
  out.valid_radius = in.valid_radius - 1;
  const Geom g(in);
  const int d = in.d;
  const double log2d = std::log(double(2 * d));
  const double* src = in.v.data();

  rows_in_radius<0>(g, out.valid_radius, parallel,
                    [&](const int64_t* outer, int64_t x0, int64_t base, int64_t L) {
                      int64_t coords[16];
                      for (int i = 0; i + 1 < d; ++i) coords[i] = outer[i];
                      for (int64_t j = 0; j < L; ++j) {
                        coords[d - 1] = x0 + j;
                        // fixed neighbour order: axis by axis, minus then plus
                        double vals[32];
                        double mx = -std::numeric_limits<double>::infinity();
                        for (int i = 0; i < d; ++i) {
                          vals[2 * i] = src[base + j - g.stride[i]];
                          vals[2 * i + 1] = src[base + j + g.stride[i]];
                          mx = std::max(mx, std::max(vals[2 * i], vals[2 * i + 1]));
                        }
                        double acc = 0.0;
                        for (int i = 0; i < 2 * d; ++i) acc += std::exp(vals[i] - mx);
                        double val = mx + std::log(acc);
                        if (env != nullptr)
                          val += beta * env->xi(in.t + 1, coords, d);
                        else
                          val -= log2d;
                        out.v[size_t(base + j)] = val;
                      }
                    });
  return out;
}

}  // namespace

Slab step_logspace(const Slab& in, const Environment& env, double beta, bool parallel) {
  return step_logspace_impl(in, &env, beta, parallel);
}

Slab heat_step_logspace(const Slab& in, bool parallel) {
  return step_logspace_impl(in, nullptr, 0.0, parallel);
}

void advance(Slab& s, const Environment& env, double beta, int64_t steps, bool parallel) {
  advance_core(s, &env, beta, steps, parallel);
}

void heat_advance(Slab& s, int64_t steps, bool parallel) {
  advance_core(s, nullptr, 0.0, steps, parallel);
}

}  // namespace dpkz
