#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "veil/autodiff.hpp"
#include "veil/models.hpp"

namespace veil {

enum class OptimizerKind { kAdam, kSgd };

const char* optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct TrainConfig {
  // Adversarial weight per protected attribute. Keys must match the
  // model's discriminators exactly; an empty map trains the baseline.
  std::map<std::string, double> lambdas;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  Tensor m;
  Tensor v;
  std::size_t step = 0;
};

// One bias-corrected Adam step using param.grad.
void adam_update(Parameter& param, AdamState& state, double lr, double beta1,
                 double beta2, double eps);

// Adam or plain SGD over a parameter list; state is keyed by parameter name.
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config);

  void step(std::span<Parameter* const> params);

 private:
  TrainConfig config_;
  std::map<std::string, AdamState> state_;
};

// Graph of the joint objective on one instance:
//   task CE + sum_i CE(D_i(grad_reverse(h, lambda_i)), b_i).
// Its value is the plain sum; the -lambda sign only shows up in gradients.
struct JointLoss {
  Var objective;
  Var task;
  std::map<std::string, Var> adversarial;
};

JointLoss joint_loss(Tape& tape, JointModel& model, const Instance& instance,
                     const TrainConfig& config, Mode mode = Mode::kTrain);

struct LossComponents {
  double objective = 0.0;
  double task = 0.0;
  std::map<std::string, double> adversarial;
};

// Zeroes gradients, builds the batch-mean joint objective, runs one backward
// pass and one optimizer update over every parameter. `step_seed` seeds the
// dropout masks.
LossComponents train_step(JointModel& model, std::span<const Instance> batch,
                          const TrainConfig& config, Optimizer& optimizer,
                          std::uint64_t step_seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double task_loss = 0.0;
  std::map<std::string, double> adversarial_loss;
  double dev_metric = 0.0;
  std::map<std::string, double> dev_discriminator_accuracy;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_dev_metric = 0.0;

  bool operator==(const TrainHistory&) const = default;
};

struct TrainResult {
  JointModel model;
  TrainHistory history;
};

// Seeded epoch loop with early stopping on the dev task metric (token
// accuracy for the tagger, macro-F1 for the classifier). Returns the best
// dev snapshot; with an empty dev set the last epoch is returned.
TrainResult train(JointModel model, const std::vector<Instance>& train_set,
                  const std::vector<Instance>& dev_set, const TrainConfig& config);

}  // namespace veil
