#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace podpipe {

/// Kahan-Neumaier compensated accumulator. Keeps reductions insensitive
/// to summation order at the 1e-12 level required of the analytics.
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

/// Linear interpolation over an ascending abscissa; clamps outside the
/// covered range. xs and ys must have equal, nonzero size.
double linear_interp(std::span<const double> xs, std::span<const double> ys, double x);

/// Centered moving average with an odd window; the window shrinks
/// symmetrically near the edges, so linear inputs are reproduced exactly.
std::vector<double> moving_average(std::span<const double> v, int window);

}  // namespace podpipe
