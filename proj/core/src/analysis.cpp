#include "krylovflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "krylovflow/csv.hpp"
#include "krylovflow/error.hpp"

namespace krylovflow {

namespace {

constexpr double kMadScale = 1.4826;

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (n % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (lo + m);
  }
  return m;
}

void require_finite(const Series& s, const char* who) {
  for (double x : s) {
    if (!std::isfinite(x)) fail(ErrorKind::kInvalidArgument, std::string(who) + ": non-finite sample");
  }
}

}  // namespace

void FilterConfig::validate() const {
  require(outlier_window >= 3 && outlier_window % 2 == 1, "filter: outlier_window must be odd and >= 3");
  require(std::isfinite(outlier_k) && outlier_k > 0.0, "filter: outlier_k must be positive");
  require(smooth_window >= 1 && smooth_window % 2 == 1, "filter: smooth_window must be odd and >= 1");
}

namespace {

// One sweep over `in`; every window sees the unmodified input.
std::vector<std::size_t> outlier_pass(const Series& in, Series& out, const FilterConfig& cfg) {
  const std::size_t n = in.size();
  const std::size_t w = static_cast<std::size_t>(cfg.outlier_window);
  const std::size_t half = w / 2;
  std::vector<double> window(w);
  std::vector<double> dev(w);
  std::vector<std::size_t> flagged;
  out = in;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= half ? i - half : 0;
    lo = std::min(lo, n - w);
    std::copy(in.begin() + lo, in.begin() + lo + w, window.begin());
    const double med = median_of(window);
    for (std::size_t j = 0; j < w; ++j) dev[j] = std::abs(in[lo + j] - med);
    const double mad = median_of(dev);
    if (std::abs(in[i] - med) > cfg.outlier_k * kMadScale * mad) {
      out[i] = med;
      flagged.push_back(i);
    }
  }
  return flagged;
}

constexpr int kMaxOutlierPasses = 64;

}  // namespace

OutlierResult remove_outliers(const Series& series, const FilterConfig& cfg) {
  cfg.validate();
  require(series.size() >= static_cast<std::size_t>(cfg.outlier_window),
          "remove_outliers: series shorter than outlier_window");
  require_finite(series, "remove_outliers");
  // Replacing a spike shrinks the MAD of nearby windows, so one sweep can
  // expose new outliers. Sweep until nothing is flagged.
  OutlierResult out;
  Series current = series;
  Series next;
  std::vector<char> hit(series.size(), 0);
  for (int pass = 0; pass < kMaxOutlierPasses; ++pass) {
    const auto flagged = outlier_pass(current, next, cfg);
    if (flagged.empty()) {
      out.cleaned = std::move(current);
      for (std::size_t i = 0; i < hit.size(); ++i) {
        if (hit[i]) out.outliers.push_back(i);
      }
      return out;
    }
    for (std::size_t i : flagged) hit[i] = 1;
    current.swap(next);
  }
  fail(ErrorKind::kNumerical, "remove_outliers: no fixed point after " +
                                  std::to_string(kMaxOutlierPasses) + " passes");
}

Series smooth(const Series& series, const FilterConfig& cfg) {
  cfg.validate();
  require(series.size() >= static_cast<std::size_t>(cfg.smooth_window),
          "smooth: series shorter than smooth_window");
  require_finite(series, "smooth");
  const std::size_t n = series.size();
  const std::size_t half = static_cast<std::size_t>(cfg.smooth_window) / 2;
  Series out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min({half, i, n - 1 - i});
    double sum = 0.0;
    for (std::size_t j = i - h; j <= i + h; ++j) sum += series[j];
    out[i] = sum / static_cast<double>(2 * h + 1);
  }
  return out;
}

FilteredSeries filter_series(const Series& raw, const FilterConfig& cfg) {
  FilteredSeries f;
  f.raw = raw;
  OutlierResult r = remove_outliers(raw, cfg);
  f.cleaned = std::move(r.cleaned);
  f.outliers = std::move(r.outliers);
  f.smoothed = smooth(f.cleaned, cfg);
  return f;
}

void write_filter_csv(std::ostream& out, const FilteredSeries& f, int first_index) {
  Series idx(f.raw.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = first_index + static_cast<double>(i);
  write_csv(out, {"n", "raw", "cleaned", "smoothed"}, {idx, f.raw, f.cleaned, f.smoothed});
}

}  // namespace krylovflow
