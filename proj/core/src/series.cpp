#include "podpipe/series.hpp"

#include <algorithm>
#include <cstddef>

#include "podpipe/errors.hpp"

namespace podpipe {

double linear_interp(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty() || xs.size() != ys.size())
    fail(Errc::validation, "linear_interp: empty or mismatched series");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double dx = xs[hi] - xs[lo];
  if (dx <= 0.0) return ys[lo];
  const double t = (x - xs[lo]) / dx;
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

std::vector<double> moving_average(std::span<const double> v, int window) {
  if (window < 1 || window % 2 == 0)
    fail(Errc::validation, "moving_average: window must be odd and >= 1");
  const std::size_t n = v.size();
  std::vector<double> out(n);
  const std::size_t h = static_cast<std::size_t>(window / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t half = std::min({h, i, n - 1 - i});
    double s = 0.0;
    for (std::size_t j = i - half; j <= i + half; ++j) s += v[j];
    out[i] = s / static_cast<double>(2 * half + 1);
  }
  return out;
}

}  // namespace podpipe
