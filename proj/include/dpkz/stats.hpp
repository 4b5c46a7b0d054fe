#pragma once
#include <cmath>
#include <cstdint>

#include "dpkz/error.hpp"

namespace dpkz {

// sample summary used everywhere a Monte Carlo estimate is reported
struct RunStats {
  int64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n-1 denominator)
  double se = 0.0;        // sqrt(variance / n)
};

// single-pass Welford accumulator
struct Welford {
  int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double pop_variance() const { return n > 0 ? m2 / double(n) : 0.0; }

  RunStats stats() const {
    if (n < 2) throw EstimationError("at least 2 samples required for a variance");
    RunStats r;
    r.n = n;
    r.mean = mean;
    r.variance = variance();
    r.se = std::sqrt(r.variance / double(n));
    return r;
  }
};

// stats over a finished sample vector (serial, index order: reductions stay
// bit-identical regardless of how the samples were produced)
inline RunStats summarize(const double* xs, int64_t n) {
  Welford w;
  for (int64_t i = 0; i < n; ++i) w.add(xs[i]);
  return w.stats();
}

}  // namespace dpkz
