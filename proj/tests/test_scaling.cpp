#include <cmath>
#include <vector>

#include "doctest.h"
#include "dpkz/scaling.hpp"

using namespace dpkz;

namespace {

int64_t ball_count_oracle(double r) {
  // plain integer arithmetic, no epsilon games
  const int64_t R = int64_t(std::floor(r));
  const double r2 = r * r + 1e-9;
  int64_t n = 0;
  for (int64_t a = -R; a <= R; ++a)
    for (int64_t b = -R; b <= R; ++b)
      for (int64_t c = -R; c <= R; ++c)
        if (double(a * a + b * b + c * c) <= r2) ++n;
  return n;
}

LatticeField const_field(int d, const std::vector<int64_t>& lo,
                         const std::vector<int64_t>& hi, double c) {
  LatticeField f;
  f.d = d;
  f.lo = lo;
  f.hi = hi;
  int64_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= hi[size_t(i)] - lo[size_t(i)] + 1;
  f.value.assign(size_t(cells), c);
  return f;
}

}  // namespace

TEST_CASE("floor snap survives decimal grids") {
  CHECK(floor_snap(1.0 / (0.1 * 0.1)) == 100);  // 99.99999999999998 raw
  CHECK(floor_snap(0.3 / 0.1) == 3);            // 2.9999999999999996 raw
  CHECK(floor_snap(2.5) == 2);
  CHECK(floor_snap(3.0) == 3);
  CHECK(floor_snap(-1.2) == -2);
  CHECK(floor_snap(0.9999999999) == 1);  // within the snap margin
  CHECK(floor_snap(0.9999) == 0);        // outside it
}

TEST_CASE("scaling point maps macroscopic coordinates onto the lattice") {
  const ScalingPoint p = ScalingPoint::make(0.1, 1.0, {0.3, 0.0, 0.0}, 0.5, 1.0);
  CHECK(p.t_eps == 100);
  CHECK(p.x_eps == std::vector<int64_t>{3, 0, 0});
  CHECK(p.r_eps == doctest::Approx(std::pow(0.1, -0.5)).epsilon(1e-12));

  CHECK(ScalingPoint::make(0.01, 1.0, {0.0, 0.0, 0.0}, 0.5, 1.0).r_eps ==
        doctest::Approx(10.0).epsilon(1e-12));

  // radius grows while its macroscopic size shrinks
  double prev_r = 0.0, prev_re = 1e300;
  for (double eps : {0.2, 0.1, 0.05, 0.02}) {
    const ScalingPoint q = ScalingPoint::make(eps, 1.0, {0.0, 0.0, 0.0}, 0.5, 1.0);
    CHECK(q.r_eps > prev_r);
    CHECK(q.r_eps * eps < prev_re);
    prev_r = q.r_eps;
    prev_re = q.r_eps * eps;
  }

  // the averaging window must stay inside one macroscopic unit
  CHECK_THROWS_AS(ScalingPoint::make(0.2, 1.0, {0.0, 0.0, 0.0}, 0.5, 20.0),
                  ConfigError);
  // and the lattice time must be at least one step
  CHECK_THROWS_AS(ScalingPoint::make(0.2, 0.001, {0.0, 0.0, 0.0}, 0.5, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(ScalingPoint::make(1.5, 1.0, {0.0, 0.0, 0.0}, 0.5, 1.0), ConfigError);
}

TEST_CASE("euclidean ball counts on the lattice") {
  CHECK(ball_points({0, 0, 0}, 1.0).size() == 7);
  CHECK(ball_points({0, 0, 0}, 2.0).size() == 33);
  CHECK(ball_points({0, 0, 0}, 3.0).size() == 123);
  for (double r : {1.5, 2.24, 3.9, 5.0}) {
    CHECK(int64_t(ball_points({0, 0, 0}, r).size()) == ball_count_oracle(r));
  }

  const auto b = ball_points({2, -1, 3}, 2.0);
  CHECK(b.size() == 33);
  CHECK(b.front() == std::vector<int64_t>{0, -1, 3});  // row-major scan order
  CHECK(b.back() == std::vector<int64_t>{4, -1, 3});
  for (const auto& pt : b) {
    const double dx = double(pt[0] - 2), dy = double(pt[1] + 1), dz = double(pt[2] - 3);
    CHECK(dx * dx + dy * dy + dz * dz <= 4.0 + 1e-9);
  }
}

TEST_CASE("smoothed surface averages the renormalized slab over the ball") {
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const double beta = 0.5, eta_hat = 0.3;
  const ScalingPoint sp = ScalingPoint::make(0.2, 0.08, {0.0, 0.0, 0.0}, 0.5, 1.0);
  REQUIRE(sp.t_eps == 2);

  Slab slab = Slab::make_filled({0, 0, 0}, {4, 4, 4}, sp.t_eps,
                                [](const int64_t* x, int d) {
                                  double v = 0.1;
                                  for (int i = 0; i < d; ++i)
                                    v += double(x[i]) * (0.3 + 0.1 * i);
                                  return v;
                                });
  const SmoothedValue sv = smoothed_surface(slab, sp, beta, law, eta_hat);

  const double renorm = 2.0 * std::log(6.0 * mgf(law, beta));
  const auto ball = ball_points(sp.x_eps, sp.r_eps);
  CHECK(sv.ball_sites == int64_t(ball.size()));
  double x_acc = 0.0;
  for (const auto& pt : ball) x_acc += slab.at(pt) - renorm;
  const double x_mean = x_acc / double(ball.size());
  CHECK(sv.X == doctest::Approx(x_mean).epsilon(1e-13));
  CHECK(sv.f_tilde == doctest::Approx((x_mean - eta_hat) / beta).epsilon(1e-13));

  // wrong slab time is a contract violation, not a number
  Slab late = slab;
  late.t = 3;
  CHECK_THROWS_AS((void)smoothed_surface(late, sp, beta, law, eta_hat), ConfigError);

  // ball poking out of the exact region must refuse
  Slab tiny = Slab::make_filled({0, 0, 0}, {1, 1, 1}, sp.t_eps,
                                [](const int64_t*, int) { return 0.0; });
  CHECK_THROWS_AS((void)smoothed_surface(tiny, sp, beta, law, eta_hat), CoverageError);
}

TEST_CASE("zero noise and flat data give the deterministic surface value") {
  const NoiseLaw law = NoiseLaw::standard_gaussian();
  const Environment env = Environment::zeros();
  const double beta = 0.4, eta_hat = -0.05;
  const ScalingPoint sp = ScalingPoint::make(0.2, 0.2, {0.0, 0.0, 0.0}, 0.5, 1.0);
  REQUIRE(sp.t_eps == 5);

  const int64_t pad = int64_t(std::floor(sp.r_eps)) + 1;
  const Slab slab = polymer_surface(env, beta, InitialCondition::zero(), sp.eps,
                                    sp.t_eps, sp.x_eps, pad, false);
  const SmoothedValue sv = smoothed_surface(slab, sp, beta, law, eta_hat);
  const double want =
      (-double(sp.t_eps) * std::log(mgf(law, beta)) - eta_hat) / beta;
  CHECK(sv.f_tilde == doctest::Approx(want).epsilon(1e-12));
  CHECK(unsmoothed_value(slab, sp.x_eps, beta, law, eta_hat) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("test functions evaluate as stated") {
  const TestFunction bump = TestFunction::smooth_bump({0.0, 0.0, 0.0}, 1.0);
  const double z0[3] = {0.0, 0.0, 0.0};
  CHECK(bump.eval(z0, 3) == doctest::Approx(1.0).epsilon(1e-15));
  const double z_edge[3] = {0.999999, 0.0, 0.0};
  CHECK(bump.eval(z_edge, 3) >= 0.0);
  CHECK(bump.eval(z_edge, 3) < 1e-6);
  const double z_out[3] = {1.000001, 0.0, 0.0};
  CHECK(bump.eval(z_out, 3) == 0.0);

  const TestFunction cosine = TestFunction::tensor_cosine({0.5, 0.0, 0.0}, 2.0);
  const double c0[3] = {0.5, 0.0, 0.0};
  CHECK(cosine.eval(c0, 3) == doctest::Approx(1.0).epsilon(1e-15));
  const double c1[3] = {1.5, 0.0, 0.0};  // s = (0.5, 0, 0): cos^2(pi/4) = 1/2
  CHECK(cosine.eval(c1, 3) == doctest::Approx(0.5).epsilon(1e-12));
  const double c2[3] = {2.6, 0.0, 0.0};
  CHECK(cosine.eval(c2, 3) == 0.0);
  CHECK(cosine.support_radius() == 2.0);

  CHECK_THROWS_AS(TestFunction::smooth_bump({0.0, 0.0}, 1.0).validate(3), ConfigError);
  CHECK_THROWS_AS(TestFunction::smooth_bump({0.0, 0.0, 0.0}, 0.0).validate(3),
                  ConfigError);
}

TEST_CASE("lattice window covers the support plus one ring") {
  const TestFunction bump = TestFunction::smooth_bump({0.5, 0.0, 0.0}, 1.0);
  std::vector<int64_t> lo, hi;
  phi_lattice_window(bump, 0.25, 3, lo, hi);
  CHECK(lo == std::vector<int64_t>{-3, -5, -5});
  CHECK(hi == std::vector<int64_t>{7, 5, 5});
}

TEST_CASE("weak integral: exact tensor-cosine sum at eps one half") {
  // phi(eps z) is nonzero only for z in {-1,0,1}^3 and takes the dyadic
  // values 1, 1/2, 1/4, 1/8 there; with f = 1 the sum telescopes to 8
  const TestFunction cosine = TestFunction::tensor_cosine({0.0, 0.0, 0.0}, 1.0);
  std::vector<int64_t> lo, hi;
  phi_lattice_window(cosine, 0.5, 3, lo, hi);
  const LatticeField f = const_field(3, lo, hi, 1.0);
  const double I = weak_integral(f, cosine, 0.5);
  CHECK(I == doctest::Approx(0.125 * 8.0).epsilon(1e-12));
}

TEST_CASE("weak integral approximates the continuum pairing") {
  const TestFunction bump = TestFunction::smooth_bump({0.0, 0.0, 0.0}, 1.0);
  const double eps = 0.05, c = 2.3;
  std::vector<int64_t> lo, hi;
  phi_lattice_window(bump, eps, 3, lo, hi);
  const LatticeField f = const_field(3, lo, hi, c);
  const double I = weak_integral(f, bump, eps);
  const double ref = c * reference_integral_phi(bump, 3, 160);
  CHECK(I == doctest::Approx(ref).epsilon(0.01));

  // an odd field against an even phi cancels to rounding
  LatticeField odd = const_field(3, lo, hi, 0.0);
  std::vector<int64_t> z(3);
  for (z[0] = lo[0]; z[0] <= hi[0]; ++z[0])
    for (z[1] = lo[1]; z[1] <= hi[1]; ++z[1])
      for (z[2] = lo[2]; z[2] <= hi[2]; ++z[2])
        odd.value[size_t(odd.index(z.data()))] = double(z[0]);
  CHECK(std::fabs(weak_integral(odd, bump, eps)) <= 1e-12);

  // zero field integrates to zero exactly
  const LatticeField zero = const_field(3, lo, hi, 0.0);
  CHECK(weak_integral(zero, bump, eps) == 0.0);
}

TEST_CASE("weak integral refuses a window that misses support") {
  const TestFunction bump = TestFunction::smooth_bump({0.0, 0.0, 0.0}, 1.0);
  std::vector<int64_t> lo, hi;
  phi_lattice_window(bump, 0.25, 3, lo, hi);
  lo[1] += 2;  // clip one axis
  const LatticeField f = const_field(3, lo, hi, 1.0);
  try {
    (void)weak_integral(f, bump, 0.25);
    FAIL("expected CoverageError");
  } catch (const CoverageError& e) {
    CHECK(std::string(e.what()).find("need") != std::string::npos);
  }
}

TEST_CASE("reference pairings against closed forms") {
  const TestFunction bump = TestFunction::smooth_bump({0.2, 0.0, 0.0}, 0.8);
  const double ip = reference_integral_phi(bump, 3, 120);
  CHECK(ip > 0.0);
  // h for a constant profile is that constant, so the pairing factorizes
  const double c = -1.7;
  const double ihp =
      reference_integral_h_phi(InitialCondition::constant(c), 0.4, 3, 1.0, bump, 120);
  CHECK(ihp == doctest::Approx(c * ip).epsilon(1e-12));
}

TEST_CASE("field accessors round-trip") {
  const LatticeField f = const_field(3, {-1, 0, 2}, {1, 2, 4}, 0.0);
  const int64_t a[3] = {-1, 0, 2};
  CHECK(f.index(a) == 0);
  const int64_t b[3] = {1, 2, 4};
  CHECK(f.index(b) == int64_t(f.value.size()) - 1);
  const int64_t c[3] = {0, 1, 3};
  CHECK(f.contains(c));
  const int64_t d[3] = {0, 3, 3};
  CHECK(!f.contains(d));
}
