#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "finfocal/common.hpp"

namespace finfocal {

// Dormand-Prince 5(4) with the classic quartic continuous extension
// (Hairer, Norsett & Wanner, DOPRI5/CONTD5). Dense output over the whole
// span is stored per accepted step, so paths are cheap to re-query.

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double hmax = std::numeric_limits<double>::infinity();
  double hmin_rel = 1e-14;  // underflow guard relative to the span
  long max_steps = 4000000;
};

struct DenseStep {
  double t0 = 0.0, h = 0.0;
  Vec r1, r2, r3, r4, r5;  // contd5 coefficients
};

class DensePath {
 public:
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  int dim() const { return steps_.empty() ? 0 : static_cast<int>(steps_[0].r1.size()); }

  Vec eval(double t) const;
  void eval_into(double t, Vec& out) const;
  const std::vector<DenseStep>& steps() const { return steps_; }

 private:
  friend class Dopri5;
  std::vector<DenseStep> steps_;
  double t_begin_ = 0.0, t_end_ = 0.0;
};

using OdeRhs = std::function<void(double t, const Vec& y, Vec& dydt)>;
// Called after each accepted step; may project the state (the projected value
// becomes the start of the next step). Return false to abort integration.
using StepHook = std::function<bool(double t, Vec& y)>;

class Dopri5 {
 public:
  static DensePath integrate(const OdeRhs& rhs, Vec y0, double t0, double t1,
                             const OdeOptions& opts, const StepHook& hook = {});
};

}  // namespace finfocal
