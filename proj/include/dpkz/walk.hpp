#pragma once
#include <cstdint>
#include <vector>

#include "dpkz/stats.hpp"

namespace dpkz {

// Monte Carlo over simple random walks on Z^d. Replicates use independent
// xoshiro streams derived from (seed, stream, replicate), so results do not
// depend on scheduling.
struct WalkConfig {
  int d = 3;
  int64_t horizon = 100000;    // T, number of steps simulated
  int64_t replicates = 10000;  // M, independent walks (or walk pairs)
  uint64_t seed = 1;

  void validate() const;
};

// P(walk returns to the origin by step T), with an explicit bound on the
// probability mass that truncation at T can hide.
struct RhoEstimate {
  RunStats stats;
  double truncation_bracket;  // upper bound on P(first return in (T, infinity))
  double calibration_c;       // constant calibrated from the first-return histogram
};
RhoEstimate rho_d(const WalkConfig& cfg);

// Two independent walks, the second displaced by `offset` at time 0.
// n_at[i] counts coincidence times n in [0, horizons[i]] with S_n = S'_n.
struct IntersectionSample {
  bool hit = false;
  int64_t first_meeting = -1;  // -1 means none
  std::vector<int64_t> n_at;
};
std::vector<IntersectionSample> sample_intersections(const WalkConfig& cfg,
                                                     const std::vector<int64_t>& offset,
                                                     const std::vector<int64_t>& horizons);

// P(walks from x and y share a site at some common time n <= T). Streams are
// keyed by start point, so kappa_hat(x,y) and kappa_hat(y,x) replay the same
// path pairs and agree exactly.
RunStats kappa_hat(const WalkConfig& cfg, const std::vector<int64_t>& x,
                   const std::vector<int64_t>& y);

// sup_x P(S_n = x) estimated from a dense histogram, times n^{d/2}
struct CltRow {
  int64_t n = 0;
  double sup_mass = 0.0;
  double scaled = 0.0;  // sup_mass * n^{d/2}
  double se = 0.0;      // binomial se of the top-cell mass
};
std::vector<CltRow> local_clt_check(const WalkConfig& cfg,
                                    const std::vector<int64_t>& n_list);

}  // namespace dpkz
