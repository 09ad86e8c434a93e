#include "varopt/numeric.hpp"

#include <algorithm>
#include <iostream>
#include <limits>

#include "varopt/diagnostics.hpp"
#include "varopt/error.hpp"

namespace varopt {

double log_sum_exp(std::span<const double> x) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (x.empty()) return kNegInf;
  const double m = *std::max_element(x.begin(), x.end());
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double sum = 0.0;
  for (double xi : x) sum += std::exp(xi - m);
  return m + std::log(sum);
}

double sample_variance(std::span<const double> x) {
  require(x.size() >= 2, "sample variance needs at least two values");
  double mean = 0.0;
  for (double xi : x) mean += xi;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double xi : x) ss += (xi - mean) * (xi - mean);
  return ss / static_cast<double>(x.size() - 1);
}

namespace {
WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}
}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  WarningHandler previous = std::move(warning_handler());
  warning_handler() = std::move(handler);
  return previous;
}

void warn(const std::string& message) {
  if (warning_handler()) warning_handler()(message);
}

}  // namespace varopt
