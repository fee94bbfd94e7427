#pragma once

#include <span>
#include <vector>

namespace refgrowth::stats {

double mean(std::span<const double> values);
/// Mean of the two central order statistics for an even count.
double median(std::vector<double> values);
/// Unbiased (n - 1) sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> values);

}  // namespace refgrowth::stats
