#include "veil/metrics.hpp"

#include <algorithm>

#include "veil/errors.hpp"

namespace veil {

double macro_f1(std::span<const std::size_t> predictions,
                std::span<const std::size_t> gold, std::size_t n_classes) {
  if (predictions.size() != gold.size()) {
    throw DimensionError("macro_f1: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(gold.size()) +
                         " gold labels");
  }
  if (n_classes == 0) {
    throw ConfigError("macro_f1 needs at least one class");
  }
  std::vector<double> tp(n_classes, 0.0), fp(n_classes, 0.0), fn(n_classes, 0.0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i] >= n_classes || gold[i] >= n_classes) {
      throw DimensionError("macro_f1: label outside [0, " +
                           std::to_string(n_classes) + ")");
    }
    if (predictions[i] == gold[i]) {
      tp[gold[i]] += 1.0;
    } else {
      fp[predictions[i]] += 1.0;
      fn[gold[i]] += 1.0;
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    total += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return 100.0 * total / static_cast<double>(n_classes);
}

double majority_baseline(std::span<const std::size_t> labels) {
  if (labels.empty()) {
    throw DataError("majority baseline of an empty corpus");
  }
  std::map<std::size_t, std::size_t> counts;
  std::size_t best = 0;
  for (std::size_t label : labels) {
    best = std::max(best, ++counts[label]);
  }
  return 100.0 * static_cast<double>(best) / static_cast<double>(labels.size());
}

double group_delta(const std::map<std::string, double>& accuracy) {
  if (accuracy.size() < 2) {
    return 0.0;
  }
  auto [lo, hi] = std::minmax_element(
      accuracy.begin(), accuracy.end(),
      [](const auto& a, const auto& b) { return a.second < b.second; });
  return hi->second - lo->second;
}

}  // namespace veil
