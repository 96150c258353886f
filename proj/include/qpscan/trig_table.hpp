#pragma once

#include <cstdint>
#include <vector>

namespace qpscan {

// sin/cos of 2*pi*f*x_k for every sample, swept along the arithmetic
// frequency ladder f0 + i*df by a stable rotation recurrence.  Every
// `reseed` steps the table is refilled from libm, so node values are a pure
// function of the node index: node i is defined as an exact fill at the
// start of its reseed block followed by (i mod reseed) recurrence steps.
// move_to() reproduces exactly that, which makes per-node values identical
// no matter how the ladder is partitioned across threads.
class TrigTable {
 public:
  TrigTable(std::vector<double> x, double f0, double df, int reseed = 1024);

  std::int64_t node() const { return node_; }
  double freq() const { return f0_ + static_cast<double>(node_) * df_; }
  int reseed_interval() const { return reseed_; }
  std::size_t size() const { return x_.size(); }
  const double* sin_vals() const { return s_.data(); }
  const double* cos_vals() const { return c_.data(); }

  // Advance to node()+1 along the canonical path.
  void step();
  // Jump to an arbitrary node along its canonical path (exact fill at the
  // block start, then recurrence steps).
  void move_to(std::int64_t node);

 private:
  void fill_exact(std::int64_t node);
  void recur_step();

  std::vector<double> x_, s_, c_, alpha_, beta_;
  double f0_ = 0.0, df_ = 0.0;
  std::int64_t node_ = 0;
  int reseed_ = 1024;
};

}  // namespace qpscan
