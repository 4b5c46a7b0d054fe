#include "dpkz/walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dpkz/error.hpp"
#include "dpkz/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpkz {

namespace {

constexpr uint64_t kStreamRho = 11;
constexpr uint64_t kStreamPairA = 21;
constexpr uint64_t kStreamPairB = 22;
constexpr uint64_t kStreamClt = 14;
constexpr int kMaxDim = 16;

struct Pos {
  int64_t c[kMaxDim] = {};

  bool is_zero(int d) const {
    int64_t acc = 0;
    for (int i = 0; i < d; ++i) acc |= c[i];
    return acc == 0;
  }
  bool equals(const Pos& o, int d) const {
    for (int i = 0; i < d; ++i)
      if (c[i] != o.c[i]) return false;
    return true;
  }
};

inline void step(Pos& p, Xoshiro256pp& rng, int d) {
  const uint32_t r = rng.below(uint32_t(2 * d));
  p.c[r >> 1] += (r & 1) ? 1 : -1;
}

// hash a start point into a stream id (used to mirror kappa_hat's seeds)
uint64_t point_stream(const std::vector<int64_t>& x) {
  uint64_t h = 0x713c9f0b52a6d4e1ULL;
  for (int64_t c : x) h = hash_chain(h, zigzag64(c));
  return h;
}

RunStats bernoulli_stats(int64_t hits, int64_t n) {
  if (n < 2) throw EstimationError("at least 2 replicates required");
  RunStats r;
  r.n = n;
  r.mean = double(hits) / double(n);
  r.variance = r.mean * (1.0 - r.mean) * double(n) / double(n - 1);
  r.se = std::sqrt(r.variance / double(n));
  return r;
}

}  // namespace

void WalkConfig::validate() const {
  if (d < 3 || d > kMaxDim)
    throw ConfigError("walk dimension must be in [3, " + std::to_string(kMaxDim) + "]");
  if (horizon < 1) throw ConfigError("walk horizon must be >= 1");
  if (replicates < 2) throw ConfigError("walk replicates must be >= 2");
}

// ---- return probability ----

RhoEstimate rho_d(const WalkConfig& cfg) {
  cfg.validate();
  const int64_t T = cfg.horizon, M = cfg.replicates;
  const int d = cfg.d;

  int nbins = 1;
  while ((int64_t(1) << (nbins + 1)) <= T) ++nbins;  // bins [2^k, 2^{k+1}) for k=1..nbins

  int64_t returned = 0;
  std::vector<int64_t> bin_count(size_t(nbins) + 2, 0);

#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    int64_t my_returned = 0;
    std::vector<int64_t> my_bins(bin_count.size(), 0);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (int64_t rep = 0; rep < M; ++rep) {
      Xoshiro256pp rng(derive_seed(cfg.seed, kStreamRho, uint64_t(rep)));
      Pos p;
      for (int64_t n = 1; n <= T; ++n) {
        step(p, rng, d);
        if ((n & 1) == 0 && p.is_zero(d)) {
          ++my_returned;
          int k = 1;
          while ((int64_t(1) << (k + 1)) <= n) ++k;
          ++my_bins[size_t(k)];
          break;
        }
      }
    }
#ifdef _OPENMP
#pragma omp critical
#endif
    {
      returned += my_returned;
      for (size_t i = 0; i < bin_count.size(); ++i) bin_count[i] += my_bins[i];
    }
  }

  // Calibrate c in "first-return mass at step n <= c n^{-d/2}" from the
  // dyadic-bin histogram, then bound the mass beyond T by the tail of the
  // model. Binning keeps the calibration stable where single steps hold at
  // most a handful of samples.
  double c = 0.0;
  for (int k = 1; k <= nbins; ++k) {
    if (bin_count[size_t(k)] == 0) continue;
    const int64_t lo = int64_t(1) << k;
    const int64_t hi = std::min((int64_t(1) << (k + 1)) - 1, T);
    double model = 0.0;
    for (int64_t n = lo + (lo & 1); n <= hi; n += 2) model += std::pow(double(n), -0.5 * d);
    if (model > 0.0) c = std::max(c, (double(bin_count[size_t(k)]) / double(M)) / model);
  }
  // sum over even n > T of n^{-d/2} <= (1/2) int_T^inf u^{-d/2} du + T^{-d/2}
  const double tail_model =
      0.5 * std::pow(double(T), 1.0 - 0.5 * d) / (0.5 * d - 1.0) + std::pow(double(T), -0.5 * d);

  RhoEstimate out;
  out.stats = bernoulli_stats(returned, M);
  out.calibration_c = c;
  out.truncation_bracket = c * tail_model;
  return out;
}

// ---- coincidence samples ----

std::vector<IntersectionSample> sample_intersections(const WalkConfig& cfg,
                                                     const std::vector<int64_t>& offset,
                                                     const std::vector<int64_t>& horizons) {
  cfg.validate();
  if (int(offset.size()) != cfg.d) throw ConfigError("offset dimension mismatch");
  if (horizons.empty()) throw ConfigError("need at least one horizon");
  for (size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1 || horizons[i] > cfg.horizon)
      throw ConfigError("horizons must lie in [1, T]");
    if (i > 0 && horizons[i] <= horizons[i - 1])
      throw ConfigError("horizons must be strictly increasing");
  }
  const int d = cfg.d;
  const int64_t M = cfg.replicates;
  const int64_t T = horizons.back();

  std::vector<IntersectionSample> out(static_cast<size_t>(M));

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t rep = 0; rep < M; ++rep) {
    Xoshiro256pp ra(derive_seed(cfg.seed, kStreamPairA, uint64_t(rep)));
    Xoshiro256pp rb(derive_seed(cfg.seed, kStreamPairB, uint64_t(rep)));
    Pos a, b;
    for (int i = 0; i < d; ++i) b.c[i] = offset[i];

    IntersectionSample s;
    s.n_at.assign(horizons.size(), 0);
    int64_t count = 0;
    if (a.equals(b, d)) {
      count = 1;
      s.first_meeting = 0;
    }
    size_t h = 0;
    for (int64_t n = 1; n <= T; ++n) {
      step(a, ra, d);
      step(b, rb, d);
      if (a.equals(b, d)) {
        ++count;
        if (s.first_meeting < 0) s.first_meeting = n;
      }
      if (n == horizons[h]) s.n_at[h++] = count;
    }
    s.hit = s.first_meeting >= 0;
    out[size_t(rep)] = std::move(s);
  }
  return out;
}

RunStats kappa_hat(const WalkConfig& cfg, const std::vector<int64_t>& x,
                   const std::vector<int64_t>& y) {
  cfg.validate();
  if (int(x.size()) != cfg.d || int(y.size()) != cfg.d)
    throw ConfigError("kappa_hat start point dimension mismatch");
  const int d = cfg.d;
  const int64_t M = cfg.replicates, T = cfg.horizon;
  const uint64_t sx = point_stream(x), sy = point_stream(y);

  int64_t hits = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : hits)
#endif
  for (int64_t rep = 0; rep < M; ++rep) {
    Xoshiro256pp ra(derive_seed(cfg.seed, sx, uint64_t(rep)));
    Xoshiro256pp rb(derive_seed(cfg.seed, sy, uint64_t(rep)));
    Pos a, b;
    for (int i = 0; i < d; ++i) {
      a.c[i] = x[size_t(i)];
      b.c[i] = y[size_t(i)];
    }
    bool hit = a.equals(b, d);
    for (int64_t n = 1; !hit && n <= T; ++n) {
      step(a, ra, d);
      step(b, rb, d);
      hit = a.equals(b, d);
    }
    hits += hit ? 1 : 0;
  }
  return bernoulli_stats(hits, M);
}

// ---- local limit scaling ----

std::vector<CltRow> local_clt_check(const WalkConfig& cfg,
                                    const std::vector<int64_t>& n_list) {
  cfg.validate();
  if (n_list.empty()) throw ConfigError("need at least one checkpoint");
  for (size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 2 || (n_list[i] & 1) != 0)
      throw ConfigError("checkpoints must be even and >= 2");
    if (i > 0 && n_list[i] <= n_list[i - 1])
      throw ConfigError("checkpoints must be strictly increasing");
  }
  const int d = cfg.d;
  const int64_t M = cfg.replicates;

  std::vector<std::vector<int64_t>> hist(n_list.size());
  std::vector<int64_t> side(n_list.size());
  for (size_t i = 0; i < n_list.size(); ++i) {
    side[i] = 2 * n_list[i] + 1;
    double cells = 1.0;
    for (int j = 0; j < d; ++j) cells *= double(side[i]);
    if (cells > 2.5e8)
      throw ConfigError("histogram for n=" + std::to_string(n_list[i]) +
                        " in d=" + std::to_string(d) + " would not fit");
    hist[i].assign(size_t(cells), 0);
  }

#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    std::vector<std::vector<int64_t>> my(hist.size());
    for (size_t i = 0; i < hist.size(); ++i) my[i].assign(hist[i].size(), 0);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (int64_t rep = 0; rep < M; ++rep) {
      Xoshiro256pp rng(derive_seed(cfg.seed, kStreamClt, uint64_t(rep)));
      Pos p;
      size_t h = 0;
      for (int64_t n = 1; n <= n_list.back(); ++n) {
        step(p, rng, d);
        if (n == n_list[h]) {
          size_t idx = 0;
          for (int j = 0; j < d; ++j)
            idx = idx * size_t(side[h]) + size_t(p.c[j] + n_list[h]);
          ++my[h][idx];
          ++h;
        }
      }
    }
#ifdef _OPENMP
#pragma omp critical
#endif
    for (size_t i = 0; i < hist.size(); ++i)
      for (size_t j = 0; j < hist[i].size(); ++j) hist[i][j] += my[i][j];
  }

  std::vector<CltRow> rows(n_list.size());
  for (size_t i = 0; i < n_list.size(); ++i) {
    const int64_t top = *std::max_element(hist[i].begin(), hist[i].end());
    CltRow r;
    r.n = n_list[i];
    r.sup_mass = double(top) / double(M);
    r.scaled = r.sup_mass * std::pow(double(n_list[i]), 0.5 * d);
    r.se = std::sqrt(r.sup_mass * (1.0 - r.sup_mass) / double(M));
    rows[i] = r;
  }
  return rows;
}

}  // namespace dpkz
