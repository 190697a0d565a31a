#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace veil {

// Unweighted mean of per-class F1, in percent. Classes absent from both
// gold and predictions count with F1 = 0.
double macro_f1(std::span<const std::size_t> predictions,
                std::span<const std::size_t> gold,
                std::size_t n_classes = 5);

// Frequency of the most common label, in percent.
double majority_baseline(std::span<const std::size_t> labels);

// Task accuracy stratified by one protected attribute.
struct GroupReport {
  std::string attribute;
  std::map<std::string, double> accuracy;          // group -> percent
  std::map<std::string, std::size_t> count;        // group -> scored units
  std::map<std::string, double> sentence_accuracy; // tagger only
  double delta = 0.0;                              // max - min over groups
};

// max - min of the group accuracies; 0 for fewer than two groups.
double group_delta(const std::map<std::string, double>& accuracy);

}  // namespace veil
