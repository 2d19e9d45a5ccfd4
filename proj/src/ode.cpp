#include "finfocal/ode.hpp"

#include <algorithm>
#include <cmath>

namespace finfocal {

namespace {

// Butcher tableau (Dormand & Prince 1980) and interpolation weights as in
// Hairer's dopri5.f.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace

Vec DensePath::eval(double t) const {
  Vec out;
  eval_into(t, out);
  return out;
}

void DensePath::eval_into(double t, Vec& out) const {
  if (steps_.empty()) throw NumericError("empty dense path");
  double lo = std::min(t_begin_, t_end_), hi = std::max(t_begin_, t_end_);
  if (t < lo - 1e-12 || t > hi + 1e-12)
    throw NumericError("dense path queried outside its span");
  // binary search for the step containing t
  size_t a = 0, b = steps_.size() - 1;
  while (a < b) {
    size_t mid = (a + b + 1) / 2;
    if (steps_[mid].t0 <= t)
      a = mid;
    else
      b = mid - 1;
  }
  const DenseStep& s = steps_[a];
  double th = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  double th1 = 1.0 - th;
  out = s.r1 + th * (s.r2 + th1 * (s.r3 + th * (s.r4 + th1 * s.r5)));
}

DensePath Dopri5::integrate(const OdeRhs& rhs, Vec y0, double t0, double t1,
                            const OdeOptions& opts, const StepHook& hook) {
  const int n = static_cast<int>(y0.size());
  DensePath path;
  path.t_begin_ = t0;
  const double span = t1 - t0;
  if (!(span > 0.0)) throw NumericError("integration span must be positive");

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y5(n), err(n);
  rhs(t0, y0, k1);

  // initial step from the standard heuristic, clipped to hmax
  double h;
  {
    double d0 = y0.norm() / std::sqrt(static_cast<double>(n));
    double d1n = k1.norm() / std::sqrt(static_cast<double>(n));
    h = (d1n > 1e-10) ? 0.01 * std::max(1e-6, d0) / d1n : 1e-6 * span;
    h = std::min({h, span, opts.hmax});
    if (h <= 0.0) h = 1e-8 * span;
  }

  double t = t0;
  long steps = 0;
  const double hmin = opts.hmin_rel * span;
  while (t < t1) {
    if (++steps > opts.max_steps) throw StepUnderflow("max step count exceeded");
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    } else if (h < hmin) {
      throw StepUnderflow("step size underflow");
    }

    ytmp = y0 + h * (a21 * k1);
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y0 + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y0 + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y0 + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y0 + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    y5 = y0 + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs(t + h, y5, k7);

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double errnorm = 0.0;
    for (int i = 0; i < n; ++i) {
      double sk = opts.atol + opts.rtol * std::max(std::abs(y0[i]), std::abs(y5[i]));
      double q = err[i] / sk;
      errnorm += q * q;
    }
    errnorm = std::sqrt(errnorm / n);
    if (!std::isfinite(errnorm)) {
      h *= 0.1;
      if (h < hmin) throw StepUnderflow("non-finite error estimate");
      continue;
    }

    if (errnorm <= 1.0) {
      DenseStep s;
      s.t0 = t;
      s.h = h;
      s.r1 = y0;
      s.r2 = y5 - y0;
      s.r3 = h * k1 - s.r2;
      s.r4 = s.r2 - h * k7 - s.r3;
      s.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      path.steps_.push_back(std::move(s));

      t += h;
      y0 = y5;
      k1 = k7;  // FSAL
      if (hook) {
        Vec before = y0;
        if (!hook(t, y0)) {
          path.t_end_ = t;
          return path;
        }
        if ((y0 - before).norm() > 0.0) rhs(t, y0, k1);  // projection invalidates FSAL
      }
      if (last) break;
      double fac = 0.9 * std::pow(std::max(errnorm, 1e-10), -0.2);
      h = std::min({h * std::clamp(fac, 0.2, 10.0), opts.hmax, t1 - t});
      if (h <= 0.0) break;
    } else {
      double fac = 0.9 * std::pow(errnorm, -0.2);
      h *= std::clamp(fac, 0.1, 0.9);
    }
  }
  path.t_end_ = t1;
  return path;
}

}  // namespace finfocal
