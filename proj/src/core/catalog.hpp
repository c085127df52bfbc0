#pragma once

// Ready-made neck specifications.

#include <span>

#include "metric_family.hpp"

namespace neckcalib {

/// Self-expander neck on S^{n-1} x [-window, window]: f_j^2 = 1/a_j + s^2 and the
/// induced fiber metric h = prod_j (1/a_j + s^2) sum_j x_j^2 / (1/a_j + s^2) ds^2.
NeckSpec jlt_neck(std::span<const double> a, double fiber_window);

/// S^1 x [-window, window] with f_1^2 = 1 + s^2 and f_2^2 = 1 / (1 + s^2): the product
/// f_1 f_2 is constant, but the factors are not minimized at a common point.
NeckSpec split_minimum_neck(double fiber_window);

/// S^{n-1} x [-window, window] with constant factors and euclidean fiber metric.
NeckSpec constant_neck(std::span<const double> c, double fiber_window);

}  // namespace neckcalib
