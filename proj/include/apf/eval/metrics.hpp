#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "apf/eval/matching.hpp"

namespace apf::eval {

struct Metrics {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t n_cases = 0;
  double fp_per_case = 0.0;
  /// tp / (tp + fn); 0 when there are no annotations (see sensitivity_defined).
  double sensitivity = 0.0;
  bool sensitivity_defined = false;
};

/// Metrics from integer counts. Throws InvalidArgument when n_cases < 1
/// or a count is negative.
Metrics metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t n_cases);

/// Sums TP/FP/FN over per-case matchings.
Metrics compute_metrics(std::span<const Matching> matchings, std::int64_t n_cases);

/// Round half away from zero (half-up for the non-negative values used
/// here) at `decimals` places, tolerant of binary representation error.
double round_half_up(double value, int decimals);

/// "0.88"-style fixed formatting after round_half_up.
std::string format_fixed(double value, int decimals);

/// 100 * removed / total_fp, or nullopt when total_fp == 0.
/// Throws InvalidArgument for negative counts or removed > total_fp.
std::optional<double> reduction_percentage(std::int64_t removed, std::int64_t total_fp);

} // namespace apf::eval
