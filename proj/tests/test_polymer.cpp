#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "dpkz/polymer.hpp"

using namespace dpkz;

namespace {

// Memoized dynamic program over the recursion, long-double linear domain.
// Same recurrence as the engine but a different evaluation order, number
// domain, and code path entirely; exact enough at tiny t to pin 1e-12.
struct DpOracle {
  const Environment& env;
  double beta;
  const InitialCondition& g;
  double eps;
  std::map<std::pair<int64_t, std::vector<int64_t>>, long double> memo;

  long double w(int64_t t, const std::vector<int64_t>& x) {
    if (t == 0) {
      std::vector<double> u(x.size());
      for (size_t i = 0; i < x.size(); ++i) u[i] = eps * double(x[i]);
      return expl((long double)beta * (long double)g.eval(u.data(), int(u.size())));
    }
    const auto key = std::make_pair(t, x);
    const auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    long double acc = 0.0L;
    std::vector<int64_t> y = x;
    for (size_t i = 0; i < x.size(); ++i) {
      for (int s : {-1, 1}) {
        y[i] = x[i] + s;
        acc += w(t - 1, y);
      }
      y[i] = x[i];
    }
    const long double out =
        expl((long double)beta * (long double)env.xi(t, x)) * acc;
    memo.emplace(key, out);
    return out;
  }

  double logf(int64_t t, const std::vector<int64_t>& x) {
    return double(logl(w(t, x)));
  }
};

}  // namespace

TEST_CASE("engine, path enumeration, and dynamic program agree at small t") {
  const InitialCondition g = InitialCondition::linear({0.4, -0.2, 0.1});
  const double beta = 0.7, eps = 0.3;
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const Environment env = Environment::hashed(seed, NoiseLaw::standard_gaussian());
    for (int64_t t : {1, 2, 3}) {
      const Slab s = polymer_surface(env, beta, g, eps, t, {0, 0, 0}, 1, false);
      DpOracle dp{env, beta, g, eps, {}};
      for (const std::vector<int64_t> x :
           {std::vector<int64_t>{0, 0, 0}, {1, 0, 0}, {0, -1, 1}}) {
        const double engine = s.at(x);
        const double brute = brute_force_logf(env, beta, g, eps, t, x);
        CHECK(engine == doctest::Approx(brute).epsilon(1e-10));
        CHECK(engine == doctest::Approx(dp.logf(t, x)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("path enumeration at t=0 is the initial profile") {
  const Environment env = Environment::hashed(6, NoiseLaw::standard_gaussian());
  const InitialCondition g = InitialCondition::linear({0.4, -0.2, 0.1});
  const double v = brute_force_logf(env, 0.9, g, 0.25, 0, {2, -1, 3});
  const double u[3] = {0.5, -0.25, 0.75};
  CHECK(v == doctest::Approx(0.9 * g.eval(u, 3)).epsilon(1e-15));
  // and it refuses path counts past its budget
  CHECK_THROWS_AS((void)brute_force_logf(env, 0.9, g, 0.25, 10, {0, 0, 0}),
                  ConfigError);
}

TEST_CASE("adding a constant to g shifts beta f by exactly beta c") {
  const Environment env = Environment::hashed(7, NoiseLaw::standard_gaussian());
  const double beta = 0.5, c = 1.75;
  const Slab base =
      polymer_surface(env, beta, InitialCondition::zero(), 0.2, 4, {0, 0, 0}, 0, false);
  const Slab lift = polymer_surface(env, beta, InitialCondition::constant(c), 0.2, 4,
                                    {0, 0, 0}, 0, false);
  base.for_each_in_radius(base.valid_radius, [&](const int64_t* x, int64_t idx) {
    CHECK(lift.at(x) - base.v[size_t(idx)] == doctest::Approx(beta * c).epsilon(1e-12));
  });
}

TEST_CASE("zero noise gives Y = m^{-t} exactly") {
  const Environment env = Environment::zeros();
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const double beta = 0.6;
  for (int64_t t : {1, 5, 12}) {
    const NormalizedPoint p = normalized_Y(env, law, beta, t, {0, 0, 0}, false);
    CHECK(p.F == doctest::Approx(-double(t) * 0.5 * beta * beta).epsilon(1e-13));
    CHECK(p.value == doctest::Approx(std::exp(p.F)).epsilon(1e-15));
  }
}

TEST_CASE("Y is mean one: the normalization is a martingale") {
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const double beta = 0.3;
  const int64_t t = 8, M = 10000;
  Welford w;
  for (int64_t rep = 0; rep < M; ++rep) {
    const Environment env =
        Environment::hashed(derive_seed(909, 1, uint64_t(rep)), law);
    w.add(normalized_Y(env, law, beta, t, {0, 0, 0}, false).value);
  }
  const RunStats s = w.stats();
  CHECK(std::fabs(s.mean - 1.0) <= 3.0 * s.se);
  CHECK(s.se < 0.02);
}

TEST_CASE("flat initial data collapses Z onto Y") {
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const Environment env = Environment::hashed(8, law);
  const NormalizedPoint y = normalized_Y(env, law, 0.8, 6, {1, 2, 0}, false);
  const NormalizedPoint z = partition_Z(env, law, 0.8, InitialCondition::zero(), 0.1, 6,
                                        {1, 2, 0}, false);
  CHECK(z.F == y.F);  // identical recursion, identical arithmetic
  CHECK(z.value == y.value);
}

TEST_CASE("E Z matches the deterministic heat value") {
  // E exp(beta f) equals the noise-free heat evolution of exp(beta g), so
  // the Monte Carlo mean of Z must sit on it
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const InitialCondition g = InitialCondition::linear({0.3, 0.0, 0.0});
  const double beta = 0.4, eps = 0.2;
  const int64_t t = 6, M = 4000;

  Slab heat = Slab::make_filled({0, 0, 0}, {6 + 2, 6 + 2, 6 + 2}, 0,
                                [&](const int64_t* x, int d) {
                                  std::vector<double> u(static_cast<size_t>(d));
                                  for (int i = 0; i < d; ++i) u[size_t(i)] = eps * double(x[i]);
                                  return beta * g.eval(u.data(), d);
                                });
  heat_advance(heat, t, false);
  const double expected = std::exp(heat.at({0, 0, 0}));  // E Z in the heat normalization

  Welford w;
  for (int64_t rep = 0; rep < M; ++rep) {
    const Environment env = Environment::hashed(derive_seed(910, 2, uint64_t(rep)), law);
    w.add(partition_Z(env, law, beta, g, eps, t, {0, 0, 0}, false).value);
  }
  const RunStats s = w.stats();
  CHECK(std::fabs(s.mean - expected) <= 3.0 * s.se);
}

TEST_CASE("midpoint decomposition resums and its weights are a pmf") {
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const InitialCondition g = InitialCondition::linear({0.2, -0.1, 0.3});
  for (uint64_t seed = 30; seed < 40; ++seed) {
    const Environment env = Environment::hashed(seed, law);
    const MidpointDecomposition md =
        midpoint_decomposition(env, law, 0.5, g, 0.2, 2, 4, {0, 0, 0}, false);
    CHECK(md.sites.size() == 19);  // L1 ball of radius 2, even parity, d=3
    CHECK(md.Y.size() == md.sites.size());
    CHECK(md.zeta.size() == md.sites.size());
    double zeta_sum = 0.0;
    for (double z : md.zeta) {
      CHECK(z >= 0.0);
      zeta_sum += z;
    }
    CHECK(zeta_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(md.Z_resum == doctest::Approx(md.Z_t).epsilon(1e-10));
    CHECK(md.Y_total > 0.0);
  }
}

TEST_CASE("eta vanishes with the coupling and is nonpositive by Jensen") {
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const auto weak = eta_estimate(law, 0.01, 3, {16}, 400, 77, false);
  REQUIRE(weak.size() == 1);
  CHECK(weak[0].t == 16);
  CHECK(weak[0].stats.n == 400);
  CHECK(std::fabs(weak[0].stats.mean) <= 3.0 * weak[0].stats.se + 1e-4);

  const auto strong = eta_estimate(law, 0.5, 3, {4, 8}, 400, 78, false);
  REQUIRE(strong.size() == 2);
  // E F <= log E Y = 0, strictly below for real coupling
  CHECK(strong[0].stats.mean < 0.0);
  CHECK(strong[1].stats.mean < strong[0].stats.mean + 3.0 * strong[1].stats.se);
}

TEST_CASE("lower tail moments stay bounded in t") {
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const auto rows = lower_tail_check(law, 0.3, 3, {0.5, 1.0}, {4, 8, 16}, 2000, 79, false);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.stats.mean));
    // Jensen: E exp(-theta F) >= exp(-theta E F) >= 1
    CHECK(r.stats.mean > 0.9);
    CHECK(r.stats.mean < 10.0);
  }
}

TEST_CASE("initial conditions evaluate and validate") {
  const InitialCondition cn = InitialCondition::clipped_norm(2.0);
  const double u1[3] = {0.3, -0.4, 0.0};
  CHECK(cn.eval(u1, 3) == doctest::Approx(0.5).epsilon(1e-15));
  const double u2[3] = {30.0, 0.0, 0.0};
  CHECK(cn.eval(u2, 3) == 2.0);
  CHECK(cn.lipschitz == 1.0);

  const InitialCondition lin = InitialCondition::linear({1.0, 2.0});
  CHECK_THROWS_AS(lin.validate(3), ConfigError);
  CHECK_NOTHROW(lin.validate(2));
  CHECK_THROWS_AS(InitialCondition::custom("broken", nullptr, 1.0).validate(3),
                  ConfigError);
}
