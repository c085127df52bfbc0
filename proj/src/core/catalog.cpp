#include "catalog.hpp"

#include <cstdio>
#include <string>

#include "error.hpp"

namespace neckcalib {

namespace {

std::string join(std::span<const double> xs) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
    if (i != 0) out += ',';
    out += buf;
  }
  return out;
}

FiberBox window_box(double w) {
  require(w > 0.0, ErrorKind::invalid_argument, "fiber window must be positive");
  return FiberBox{{-w}, {w}};
}

}  // namespace

NeckSpec jlt_neck(std::span<const double> a, double fiber_window) {
  require(a.size() >= 2, ErrorKind::invalid_argument, "jlt neck needs n >= 2 parameters");
  std::vector<FactorProfile> profiles;
  for (double x : a) {
    require(x > 0.0, ErrorKind::invalid_argument, "jlt parameters must be positive");
    profiles.push_back(FactorProfile::jlt(x));
  }
  const int n = static_cast<int>(a.size());
  return NeckSpec("jlt(a=" + join(a) + ")", Geometry::sphere(n), std::move(profiles),
                  FiberMetricSpec::jlt_induced({a.begin(), a.end()}), window_box(fiber_window));
}

NeckSpec split_minimum_neck(double fiber_window) {
  return NeckSpec("split-minimum", Geometry::sphere(2), {FactorProfile::jlt(1.0), FactorProfile::reciprocal_jlt(1.0)},
                  FiberMetricSpec::euclidean(), window_box(fiber_window));
}

NeckSpec constant_neck(std::span<const double> c, double fiber_window) {
  require(c.size() >= 2, ErrorKind::invalid_argument, "constant neck needs n >= 2 factors");
  std::vector<FactorProfile> profiles;
  for (double x : c) profiles.push_back(FactorProfile::constant(x));
  return NeckSpec("constant(c=" + join(c) + ")", Geometry::sphere(static_cast<int>(c.size())), std::move(profiles),
                  FiberMetricSpec::euclidean(), window_box(fiber_window));
}

}  // namespace neckcalib
