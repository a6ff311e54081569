#include "lsainfer/series.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "lsainfer/errors.hpp"
#include "lsainfer/io.hpp"

namespace lsa {

std::string to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::halfspace_sup: return "halfspace_sup";
    case DistanceMetric::ball_sup: return "ball_sup";
    case DistanceMetric::kolmogorov_1d_exact: return "kolmogorov_1d_exact";
    case DistanceMetric::spectral_gap: return "spectral_gap";
  }
  return "unknown";
}

std::string to_string(ReferenceLaw r) {
  switch (r) {
    case ReferenceLaw::sigma_n: return "sigma_n";
    case ReferenceLaw::sigma_inf: return "sigma_inf";
    case ReferenceLaw::standard_normal: return "standard_normal";
    case ReferenceLaw::bootstrap_real: return "bootstrap_real";
  }
  return "unknown";
}

std::vector<double> DistanceSeries::ns() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(static_cast<double>(p.n));
  return out;
}

std::vector<double> DistanceSeries::distances() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.distance);
  return out;
}

std::string DistanceSeries::to_csv() const {
  std::string s = "n,distance,stderr\n";
  for (const auto& p : points) {
    s += std::to_string(p.n) + ',' + io::format_double(p.distance) + ',' + io::format_double(p.standard_error) + '\n';
  }
  return s;
}

RateFit rate_fit(const std::vector<double>& x, const std::vector<double>& y) {
  constexpr const char* origin = "gaussapprox.rate_fit";
  if (x.size() != y.size()) throw DimensionError(origin, "x/y length mismatch");
  if (x.size() < 3) throw ConfigError(origin, "at least 3 points are required");
  std::set<std::pair<double, double>> uniq;
  std::set<double> xs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw ConfigError(origin, "nonpositive n in series");
    if (!(y[i] > 0.0)) throw ConfigError(origin, "nonpositive distance in series");
    uniq.emplace(x[i], y[i]);
    xs.insert(x[i]);
  }
  if (uniq.size() < 3 || xs.size() < 2) throw ConfigError(origin, "degenerate design after removing duplicates");

  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    const double dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::log(y[i]) - (f.intercept + f.slope * std::log(x[i]));
    sse += r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  f.slope_stderr = std::sqrt(sse / (m - 2.0) / sxx);
  return f;
}

RateFit rate_fit(const DistanceSeries& series) { return rate_fit(series.ns(), series.distances()); }

}  // namespace lsa
