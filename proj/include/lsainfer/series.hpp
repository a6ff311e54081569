#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lsa {

enum class DistanceMetric { halfspace_sup, ball_sup, kolmogorov_1d_exact, spectral_gap };
enum class ReferenceLaw { sigma_n, sigma_inf, standard_normal, bootstrap_real };

std::string to_string(DistanceMetric m);
std::string to_string(ReferenceLaw r);

struct DistancePoint {
  std::uint64_t n = 0;
  double distance = 0.0;
  double standard_error = 0.0;
};

/// (n, distance) points for rate fitting. Probability-metric series lie in
/// [0, 1]; spectral_gap series hold covariance gaps and are only nonnegative.
struct DistanceSeries {
  std::vector<DistancePoint> points;
  DistanceMetric metric = DistanceMetric::halfspace_sup;
  ReferenceLaw reference = ReferenceLaw::sigma_inf;
  /// Free-form diagnostics (noise-floor warnings, degenerate flags, ...).
  std::vector<std::string> notes;

  std::vector<double> ns() const;
  std::vector<double> distances() const;
  /// Columns n, distance, stderr.
  std::string to_csv() const;
};

/// OLS fit of ln(distance) on ln(n).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

/// Requires >= 3 points, positive distances and >= 2 distinct n after
/// removing duplicates; throws ConfigError otherwise.
RateFit rate_fit(const DistanceSeries& series);
RateFit rate_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lsa
