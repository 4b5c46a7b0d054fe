#include "dpkz/polymer.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpkz {

namespace {
constexpr uint64_t kStreamEta = 44;
}

// ---- initial conditions ----

InitialCondition InitialCondition::zero() {
  InitialCondition g;
  g.kind = Kind::zero;
  g.lipschitz = 0.0;
  g.name = "zero";
  return g;
}

InitialCondition InitialCondition::constant(double c) {
  InitialCondition g;
  g.kind = Kind::constant;
  g.c = c;
  g.lipschitz = 0.0;
  g.name = "constant";
  return g;
}

InitialCondition InitialCondition::linear(std::vector<double> a) {
  InitialCondition g;
  g.kind = Kind::linear;
  g.a = std::move(a);
  double n2 = 0.0;
  for (double ai : g.a) n2 += ai * ai;
  g.lipschitz = std::sqrt(n2);
  g.name = "linear";
  return g;
}

InitialCondition InitialCondition::custom(std::string name,
                                          std::function<double(const double*, int)> fn,
                                          double lipschitz) {
  InitialCondition g;
  g.kind = Kind::custom;
  g.fn = std::move(fn);
  g.lipschitz = lipschitz;
  g.name = std::move(name);
  return g;
}

InitialCondition InitialCondition::clipped_norm(double cap) {
  if (!(cap > 0.0)) throw ConfigError("clipped-norm cap must be positive");
  return custom("clipped-norm",
                [cap](const double* u, int d) {
                  double n2 = 0.0;
                  for (int i = 0; i < d; ++i) n2 += u[i] * u[i];
                  return std::min(std::sqrt(n2), cap);
                },
                1.0);
}

void InitialCondition::validate(int d) const {
  switch (kind) {
    case Kind::zero:
      return;
    case Kind::constant:
      if (!std::isfinite(c)) throw ConfigError("constant profile must be finite");
      return;
    case Kind::linear:
      if (int(a.size()) != d)
        throw ConfigError("linear profile slope has dimension " +
                          std::to_string(a.size()) + ", need " + std::to_string(d));
      for (double ai : a)
        if (!std::isfinite(ai)) throw ConfigError("linear profile slope must be finite");
      return;
    case Kind::custom:
      if (!fn) throw ConfigError("custom profile has no function");
      if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz))
        throw ConfigError("custom profile needs a finite Lipschitz bound");
      return;
  }
}

double InitialCondition::eval(const double* u, int d) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return c;
    case Kind::linear: {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += a[size_t(i)] * u[i];
      return acc;
    }
    case Kind::custom:
    default:
      return fn(u, d);
  }
}

// ---- surfaces and point values ----

Slab polymer_surface(const Environment& env, double beta, const InitialCondition& g,
                     double eps, int64_t t, const std::vector<int64_t>& center,
                     int64_t pad, bool parallel) {
  const int d = int(center.size());
  if (t < 0) throw ConfigError("time must be >= 0");
  if (pad < 0) throw ConfigError("pad must be >= 0");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  g.validate(d);
  std::vector<int64_t> halfw(size_t(d), t + pad);
  double u[16];
  Slab s = Slab::make_filled(center, halfw, 0, [&](const int64_t* x, int dd) {
    for (int i = 0; i < dd; ++i) u[i] = eps * double(x[i]);
    return beta * g.eval(u, dd);
  });
  advance(s, env, beta, t, parallel);
  return s;
}

namespace {
NormalizedPoint read_normalized(const Slab& s, const NoiseLaw& law, double beta,
                                const std::vector<int64_t>& x) {
  const double log2dm = std::log(2.0 * s.d) + std::log(mgf(law, beta));
  NormalizedPoint p;
  p.F = s.at(x) - double(s.t) * log2dm;
  p.value = std::exp(p.F);
  return p;
}
}  // namespace

NormalizedPoint normalized_Y(const Environment& env, const NoiseLaw& law, double beta,
                             int64_t t, const std::vector<int64_t>& x, bool parallel) {
  Slab s = polymer_surface(env, beta, InitialCondition::zero(), 1.0, t, x, 0, parallel);
  return read_normalized(s, law, beta, x);
}

NormalizedPoint partition_Z(const Environment& env, const NoiseLaw& law, double beta,
                            const InitialCondition& g, double eps, int64_t t,
                            const std::vector<int64_t>& x, bool parallel) {
  Slab s = polymer_surface(env, beta, g, eps, t, x, 0, parallel);
  return read_normalized(s, law, beta, x);
}

// ---- exact enumeration ----

double brute_force_logf(const Environment& env, double beta, const InitialCondition& g,
                        double eps, int64_t t, const std::vector<int64_t>& x) {
  const int d = int(x.size());
  if (t < 0) throw ConfigError("time must be >= 0");
  g.validate(d);
  if (t * std::log(2.0 * d) > std::log(1.2e7))
    throw ConfigError("brute force refused: (2d)^t beyond 1.2e7 paths");

  long double acc = 0.0L;
  std::vector<int64_t> pos = x;
  double u[16];
  const auto leaf = [&](long double w) {
    for (int i = 0; i < d; ++i) u[i] = eps * double(pos[size_t(i)]);
    acc += w * std::exp((long double)(beta * g.eval(u, d)));
  };
  const std::function<void(int64_t, long double)> dfs = [&](int64_t lvl, long double w) {
    if (lvl == 0) {
      leaf(w);
      return;
    }
    const long double w2 =
        w * std::exp((long double)(beta * env.xi(lvl, pos.data(), d)));
    for (int i = 0; i < d; ++i) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        pos[size_t(i)] += sgn;
        dfs(lvl - 1, w2);
        pos[size_t(i)] -= sgn;
      }
    }
  };
  dfs(t, 1.0L);
  return double(std::log(acc));
}

// ---- midpoint split ----

MidpointDecomposition midpoint_decomposition(const Environment& env, const NoiseLaw& law,
                                             double beta, const InitialCondition& g,
                                             double eps, int64_t s, int64_t t,
                                             const std::vector<int64_t>& x,
                                             bool parallel) {
  const int d = int(x.size());
  if (!(0 <= s && s < t)) throw ConfigError("midpoint needs 0 <= s < t");
  const int64_t gap = t - s;
  if (gap * std::log(2.0 * d) > std::log(2.0e6))
    throw ConfigError("midpoint gap too large for exact resummation");
  const double log2dm = std::log(2.0 * d) + std::log(mgf(law, beta));

  MidpointDecomposition out;
  out.s = s;
  out.t = t;
  out.x = x;

  // one slab from time 0, snapshot at s, then continue to t
  std::vector<int64_t> halfw(size_t(d), t);
  double u[16];
  Slab slab = Slab::make_filled(x, halfw, 0, [&](const int64_t* y, int dd) {
    for (int i = 0; i < dd; ++i) u[i] = eps * double(y[i]);
    return beta * g.eval(u, dd);
  });
  advance(slab, env, beta, s, parallel);

  // reachable set D: |y - x|_1 <= t - s with matching parity
  std::vector<double> Zs;
  std::vector<int64_t> y(size_t(d), 0);
  const std::function<void(int)> enumerate = [&](int axis) {
    if (axis == d) {
      int64_t l1 = 0;
      for (int i = 0; i < d; ++i) l1 += std::llabs(y[size_t(i)] - x[size_t(i)]);
      if (l1 > gap || ((l1 ^ gap) & 1)) return;
      out.sites.push_back(y);
      Zs.push_back(std::exp(slab.at(y) - double(s) * log2dm));
      return;
    }
    for (int64_t c = x[size_t(axis)] - gap; c <= x[size_t(axis)] + gap; ++c) {
      y[size_t(axis)] = c;
      enumerate(axis + 1);
    }
  };
  enumerate(0);

  advance(slab, env, beta, gap, parallel);
  out.Z_t = std::exp(slab.at(x) - double(t) * log2dm);

  // Y(s,t,x,y): enumerate the (2d)^{t-s} paths from (s, y); weights sit on
  // the sites visited at times s+1 .. t, and the sum carries the (2d m)^{-gap}
  // normalization
  out.Y.resize(out.sites.size());
  for (size_t yi = 0; yi < out.sites.size(); ++yi) {
    long double acc = 0.0L;
    std::vector<int64_t> pos = out.sites[yi];
    const std::function<void(int64_t, long double)> dfs = [&](int64_t lvl, long double w) {
      if (lvl == t) {
        if (std::equal(pos.begin(), pos.end(), x.begin())) acc += w;
        return;
      }
      for (int i = 0; i < d; ++i) {
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          pos[size_t(i)] += sgn;
          const long double w2 =
              w * std::exp((long double)(beta * env.xi(lvl + 1, pos.data(), d)));
          dfs(lvl + 1, w2);
          pos[size_t(i)] -= sgn;
        }
      }
    };
    dfs(s, 1.0L);
    out.Y[yi] = double(acc) * std::exp(-double(gap) * log2dm);
  }

  out.Y_total = 0.0;
  for (double v : out.Y) out.Y_total += v;
  out.zeta.resize(out.Y.size());
  for (size_t i = 0; i < out.Y.size(); ++i) out.zeta[i] = out.Y[i] / out.Y_total;
  out.Z_resum = 0.0;
  for (size_t i = 0; i < out.Y.size(); ++i) out.Z_resum += out.Y[i] * Zs[i];
  return out;
}

// ---- flat-start cone statistics (eta and the lower tail) ----

namespace {

// F(t, 0) samples for every checkpoint, one shrinking-cone run per replicate
std::vector<std::vector<double>> flat_cone_samples(const NoiseLaw& law, double beta, int d,
                                                   const std::vector<int64_t>& t_list,
                                                   int64_t M, uint64_t seed,
                                                   bool parallel) {
  law.validate();
  if (t_list.empty()) throw ConfigError("need at least one checkpoint");
  for (size_t i = 0; i < t_list.size(); ++i) {
    if (t_list[i] < 1) throw ConfigError("checkpoints must be >= 1");
    if (i > 0 && t_list[i] <= t_list[i - 1])
      throw ConfigError("checkpoints must be strictly increasing");
  }
  if (M < 2) throw ConfigError("need at least 2 replicates");
  const int64_t tmax = t_list.back();
  const double log2dm = std::log(2.0 * d) + std::log(mgf(law, beta));

  std::vector<std::vector<double>> samples(t_list.size(),
                                           std::vector<double>(size_t(M), 0.0));
  const std::vector<int64_t> origin(size_t(d), 0);
  const std::vector<int64_t> halfw(size_t(d), tmax);

  // a throw escaping an OpenMP region aborts the process, so capture and
  // rethrow after the join
  std::exception_ptr eptr = nullptr;
#ifdef _OPENMP
#pragma omp parallel if (parallel)
#endif
  {
    Slab slab = Slab::make(origin, halfw, 0);
#ifdef _OPENMP
#pragma omp for schedule(dynamic)
#endif
    for (int64_t rep = 0; rep < M; ++rep) {
      if (eptr) continue;
      try {
        if (slab.halfw[0] != tmax)  // undo the crops from the previous replicate
          slab = Slab::make(origin, halfw, 0);
        else
          slab.reset(0);
        const Environment env =
            Environment::hashed(derive_seed(seed, kStreamEta, uint64_t(rep)), law);
        int64_t done = 0;
        for (size_t ti = 0; ti < t_list.size(); ++ti) {
          advance(slab, env, beta, t_list[ti] - done, false);
          done = t_list[ti];
          samples[ti][size_t(rep)] = slab.at(origin) - double(done) * log2dm;
          // only the cone of the remaining checkpoints matters from here on
          if (ti + 1 < t_list.size()) slab.crop(tmax - done);
        }
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (!eptr) eptr = std::current_exception();
        }
      }
    }
  }
  if (eptr) std::rethrow_exception(eptr);
  return samples;
}

}  // namespace

std::vector<EtaPoint> eta_estimate(const NoiseLaw& law, double beta, int d,
                                   const std::vector<int64_t>& t_list, int64_t replicates,
                                   uint64_t seed, bool parallel) {
  const auto samples =
      flat_cone_samples(law, beta, d, t_list, replicates, seed, parallel);
  std::vector<EtaPoint> out(t_list.size());
  for (size_t ti = 0; ti < t_list.size(); ++ti) {
    out[ti].t = t_list[ti];
    out[ti].stats = summarize(samples[ti].data(), int64_t(samples[ti].size()));
  }
  return out;
}

std::vector<LowerTailRow> lower_tail_check(const NoiseLaw& law, double beta, int d,
                                           const std::vector<double>& thetas,
                                           const std::vector<int64_t>& t_list,
                                           int64_t replicates, uint64_t seed,
                                           bool parallel) {
  if (thetas.empty()) throw ConfigError("need at least one theta");
  for (double th : thetas)
    if (!(th > 0.0)) throw ConfigError("theta must be positive");
  const auto samples =
      flat_cone_samples(law, beta, d, t_list, replicates, seed, parallel);

  std::vector<LowerTailRow> rows;
  std::vector<double> buf(samples[0].size());
  for (double th : thetas) {
    for (size_t ti = 0; ti < t_list.size(); ++ti) {
      for (size_t r = 0; r < samples[ti].size(); ++r)
        buf[r] = std::exp(-th * samples[ti][r]);
      LowerTailRow row;
      row.theta = th;
      row.t = t_list[ti];
      row.stats = summarize(buf.data(), int64_t(buf.size()));
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace dpkz
