#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "krylovflow/types.hpp"

namespace krylovflow {

struct FilterConfig {
  int outlier_window = 9;  // odd, >= 3
  double outlier_k = 3.0;  // threshold in units of 1.4826 * MAD
  int smooth_window = 7;   // odd, >= 1

  void validate() const;
};

struct OutlierResult {
  Series cleaned;
  std::vector<std::size_t> outliers;
};

/// Sliding median/MAD filter. The window is clamped at the ends so it always
/// holds `outlier_window` samples; a point is replaced by the window median
/// when it deviates by more than k * 1.4826 * MAD (strictly). Sweeps repeat
/// until none flags anything, so a second call is a no-op.
OutlierResult remove_outliers(const Series& series, const FilterConfig& cfg);

/// Centered moving average; the window shrinks symmetrically near the ends.
Series smooth(const Series& series, const FilterConfig& cfg);

struct FilteredSeries {
  Series raw;
  Series cleaned;
  Series smoothed;
  std::vector<std::size_t> outliers;
};

FilteredSeries filter_series(const Series& raw, const FilterConfig& cfg);

/// Header `n,raw,cleaned,smoothed`; n counts from `first_index`.
void write_filter_csv(std::ostream& out, const FilteredSeries& f, int first_index);

}  // namespace krylovflow
