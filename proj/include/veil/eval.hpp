#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veil/metrics.hpp"
#include "veil/models.hpp"

namespace veil {

struct TaskMetrics {
  double accuracy = 0.0;           // token-level (tagger) or instance-level
  double macro_f1 = 0.0;           // classifier only
  double sentence_accuracy = 0.0;  // tagger: fully correct sentences
  std::size_t units = 0;           // scored tokens or instances
};

TaskMetrics evaluate_task(JointModel& model, const std::vector<Instance>& instances);

// Dev selection metric: token accuracy for the tagger, macro-F1 for the
// classifier.
double selection_metric(TaskKind task, const TaskMetrics& metrics);

GroupReport group_accuracy(JointModel& model, const std::vector<Instance>& instances,
                           const std::string& attribute);

// Test accuracy of the jointly trained discriminator, in percent.
double discriminator_accuracy(JointModel& model,
                              const std::vector<Instance>& instances,
                              const std::string& attribute);

// A post-hoc probe with the discriminator's shape, trained on frozen
// representations.
struct AttackerConfig {
  // Hidden width; attack() treats 0 as "same as the model's discriminators".
  std::size_t hidden = 0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double holdout = 0.1;  // fraction of the attack-train set used for stopping
  std::uint64_t seed = 0;
};

// Trains a fresh probe on (train_reps, train_labels) and returns its test
// accuracy in percent. Throws DataError for single-class training labels.
double train_attacker(const std::vector<std::vector<double>>& train_reps,
                      std::span<const std::size_t> train_labels,
                      const std::vector<std::vector<double>>& test_reps,
                      std::span<const std::size_t> test_labels, std::size_t arity,
                      const AttackerConfig& config);

struct AttackResult {
  std::string attribute;
  double attacker_accuracy = 0.0;
  std::optional<double> discriminator_accuracy;  // when the model has one
  double majority_baseline = 0.0;                // of the test labels
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

// Extracts representations from the frozen model and runs train_attacker.
// The model's parameters are never modified.
AttackResult attack(JointModel& model, const std::vector<Instance>& train_set,
                    const std::vector<Instance>& test_set,
                    const std::string& attribute, const AttackerConfig& config);

struct LeakageReport {
  std::string task_metric_name;  // "accuracy" or "macro_f1"
  double task_metric = 0.0;
  std::vector<AttackResult> attributes;
};

}  // namespace veil
