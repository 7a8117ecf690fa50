#include "apf/eval/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf::eval {

Metrics metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t n_cases) {
  if (n_cases < 1)
    throw InvalidArgument(fmt::format("metrics need at least one case, got {}", n_cases));
  if (tp < 0 || fp < 0 || fn < 0)
    throw InvalidArgument("metric counts must be non-negative");
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.n_cases = n_cases;
  m.fp_per_case = static_cast<double>(fp) / static_cast<double>(n_cases);
  m.sensitivity_defined = tp + fn > 0;
  m.sensitivity = m.sensitivity_defined ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return m;
}

Metrics compute_metrics(std::span<const Matching> matchings, std::int64_t n_cases) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (const Matching &m : matchings) {
    tp += static_cast<std::int64_t>(m.tp());
    fp += static_cast<std::int64_t>(m.fp());
    fn += static_cast<std::int64_t>(m.fn());
  }
  return metrics_from_counts(tp, fp, fn, n_cases);
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = value * scale;
  // 1e-9 absorbs representation error such as 0.125 * 100 = 12.499999...
  const double rounded = std::floor(std::abs(scaled) + 0.5 + 1e-9);
  return std::copysign(rounded, scaled) / scale;
}

std::string format_fixed(double value, int decimals) {
  return fmt::format("{:.{}f}", round_half_up(value, decimals), decimals);
}

std::optional<double> reduction_percentage(std::int64_t removed, std::int64_t total_fp) {
  if (removed < 0 || total_fp < 0)
    throw InvalidArgument("reduction_percentage: counts must be non-negative");
  if (total_fp == 0)
    return std::nullopt;
  if (removed > total_fp)
    throw InvalidArgument(fmt::format("reduction_percentage: removed {} exceeds total {}", removed, total_fp));
  return 100.0 * static_cast<double>(removed) / static_cast<double>(total_fp);
}

} // namespace apf::eval
