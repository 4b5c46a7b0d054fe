#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpkz/error.hpp"
#include "dpkz/noise.hpp"

namespace dpkz {

// Dense log-domain values on an L-infinity box. Every recursion step reads
// all 2d neighbours, so the region of exact values shrinks by one layer per
// step: valid_radius tracks it. Reads outside that region throw ConeError
// rather than silently returning boundary-polluted numbers.
struct Slab {
  int d = 0;
  int64_t t = 0;                // time the stored values belong to
  std::vector<int64_t> center;  // box anchor
  std::vector<int64_t> halfw;   // per-axis half-widths
  int64_t valid_radius = 0;     // exact within this L-inf distance of center
  std::vector<double> v;        // values, last coordinate is the fast axis
  std::vector<int64_t> stride;

  static Slab make(std::vector<int64_t> center, std::vector<int64_t> halfw, int64_t t0);
  static Slab make_filled(std::vector<int64_t> center, std::vector<int64_t> halfw,
                          int64_t t0,
                          const std::function<double(const int64_t*, int)>& f);

  // rewind to flat zeros at time t0 with the full validity radius restored;
  // lets replicate loops reuse one allocation
  void reset(int64_t t0);

  // shrink the box to |x - center|_inf <= r, keeping the stored values.
  // Requires r <= valid_radius: checkpointed runs crop the dead margin off
  // before the next segment instead of stepping it forward.
  void crop(int64_t r);

  int64_t size() const { return int64_t(v.size()); }

  bool in_box(const int64_t* x) const {
    for (int i = 0; i < d; ++i)
      if (x[i] < center[size_t(i)] - halfw[size_t(i)] ||
          x[i] > center[size_t(i)] + halfw[size_t(i)])
        return false;
    return true;
  }

  bool in_valid(const int64_t* x) const {
    for (int i = 0; i < d; ++i) {
      const int64_t dx = x[i] - center[size_t(i)];
      if (dx > valid_radius || -dx > valid_radius) return false;
    }
    return true;
  }

  int64_t index(const int64_t* x) const {  // unchecked; x must be in the box
    int64_t idx = 0;
    for (int i = 0; i < d; ++i)
      idx += (x[i] - (center[size_t(i)] - halfw[size_t(i)])) * stride[size_t(i)];
    return idx;
  }

  double at(const int64_t* x) const;  // throws ConeError outside the valid region
  double at(const std::vector<int64_t>& x) const { return at(x.data()); }

  // visit every site with |x - center|_inf <= radius, in row-major order
  void for_each_in_radius(int64_t radius,
                          const std::function<void(const int64_t*, int64_t)>& fn) const;
};

// One literal recursion step in the log domain (max-subtraction LSE):
//   out(x) = beta * xi(t+1, x) + log sum over |y-x|=1 of exp(in(y))
// Serial reference; `parallel` flips on the OpenMP variant. The two are
// bit-identical because every output site is an independent reduction in a
// fixed neighbour order.
Slab step_logspace(const Slab& in, const Environment& env, double beta, bool parallel);

// Same step without the noise factor and averaged instead of summed:
//   out(x) = log( (1/2d) sum over neighbours exp(in(y)) )
Slab heat_step_logspace(const Slab& in, bool parallel);

// Production multi-step kernels. Same recursions carried in an offset-scaled
// linear domain (one exp per site per step instead of a full LSE), with a
// periodic renormalization guard; results land back in the log domain.
// advance() accumulates log(2d) per step into the stored values so they stay
// equal to what repeated step_logspace() would produce.
void advance(Slab& s, const Environment& env, double beta, int64_t steps, bool parallel);
void heat_advance(Slab& s, int64_t steps, bool parallel);

}  // namespace dpkz
