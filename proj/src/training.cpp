#include "veil/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "veil/errors.hpp"
#include "veil/eval.hpp"
#include "veil/rng.hpp"

namespace veil {

const char* optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
  for (const auto& [name, lambda] : lambdas) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ConfigError("lambda for " + name + " must be finite and >= 0");
    }
  }
  if (batch_size == 0) {
    throw ConfigError("batch_size must be >= 1");
  }
  if (max_epochs == 0) {
    throw ConfigError("max_epochs must be >= 1");
  }
  if (patience > max_epochs) {
    throw ConfigError("patience (" + std::to_string(patience) +
                      ") exceeds max_epochs (" + std::to_string(max_epochs) + ")");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw ConfigError("Adam needs beta1, beta2 in [0, 1) and epsilon > 0");
  }
}

void adam_update(Parameter& param, AdamState& state, double lr, double beta1,
                 double beta2, double eps) {
  if (state.m.shape() != param.value.shape()) {
    state.m = Tensor(param.value.shape());
    state.v = Tensor(param.value.shape());
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    const double g = param.grad[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    param.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

Optimizer::Optimizer(const TrainConfig& config) : config_(config) {}

void Optimizer::step(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (config_.optimizer == OptimizerKind::kAdam) {
      adam_update(*p, state_[p->name], config_.learning_rate, config_.beta1,
                  config_.beta2, config_.epsilon);
    } else {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        p->value[i] -= config_.learning_rate * p->grad[i];
      }
    }
  }
}

namespace {

void check_attribute_keys(const JointModel& model, const TrainConfig& config) {
  for (const auto& [name, lambda] : config.lambdas) {
    if (!model.discriminators.count(name)) {
      throw ConfigError("lambda given for '" + name +
                        "' but the model has no discriminator for it");
    }
  }
  for (const auto& [name, head] : model.discriminators) {
    if (!config.lambdas.count(name)) {
      throw ConfigError("discriminator '" + name + "' has no lambda");
    }
  }
}

}  // namespace

JointLoss joint_loss(Tape& tape, JointModel& model, const Instance& instance,
                     const TrainConfig& config, Mode mode) {
  check_attribute_keys(model, config);
  const ForwardResult forward =
      task_forward(tape, model, instance, mode, config.dropout);
  JointLoss loss;
  loss.task = task_loss(tape, forward, instance);
  std::vector<Var> terms{loss.task};
  for (auto& [name, head] : model.discriminators) {
    auto label = instance.attributes.find(name);
    if (label == instance.attributes.end()) {
      throw DataError("instance lacks protected attribute '" + name + "'");
    }
    const Var reversed = tape.grad_reverse(forward.representation,
                                           config.lambdas.at(name));
    const Var adv = tape.softmax_cross_entropy(feedforward(tape, head, reversed),
                                               label->second);
    loss.adversarial.emplace(name, adv);
    terms.push_back(adv);
  }
  loss.objective = terms.size() == 1 ? loss.task : tape.add_n(terms);
  return loss;
}

LossComponents train_step(JointModel& model, std::span<const Instance> batch,
                          const TrainConfig& config, Optimizer& optimizer,
                          std::uint64_t step_seed) {
  if (batch.empty()) {
    throw DataError("train_step on an empty batch");
  }
  const auto params = model.parameters();
  for (Parameter* p : params) {
    p->zero_grad();
  }
  Tape tape(step_seed);
  std::vector<Var> objectives;
  LossComponents components;
  objectives.reserve(batch.size());
  for (const Instance& instance : batch) {
    const JointLoss loss = joint_loss(tape, model, instance, config, Mode::kTrain);
    objectives.push_back(loss.objective);
    components.task += tape.value(loss.task)[0];
    for (const auto& [name, v] : loss.adversarial) {
      components.adversarial[name] += tape.value(v)[0];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  const Var total = objectives.size() == 1
                        ? objectives.front()
                        : tape.scale(tape.add_n(objectives), inv);
  tape.backward(total);
  optimizer.step(params);

  components.objective = tape.value(total)[0];
  components.task *= inv;
  for (auto& [name, v] : components.adversarial) {
    v *= inv;
  }
  return components;
}

TrainResult train(JointModel model, const std::vector<Instance>& train_set,
                  const std::vector<Instance>& dev_set, const TrainConfig& config) {
  config.validate();
  check_attribute_keys(model, config);
  if (train_set.empty()) {
    throw DataError("training set is empty");
  }

  Optimizer optimizer(config);
  TrainResult result{model, {}};
  double best = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::uint64_t global_step = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Instance> batch;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng(config.seed + seed_offset::kShuffle + epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(train_set[order[i]]);
      }
      ++global_step;
      const LossComponents step = train_step(
          model, batch, config, optimizer,
          config.seed + seed_offset::kDropout * global_step);
      const double weight = static_cast<double>(batch.size());
      record.task_loss += step.task * weight;
      for (const auto& [name, v] : step.adversarial) {
        record.adversarial_loss[name] += v * weight;
      }
    }
    const double n = static_cast<double>(train_set.size());
    record.task_loss /= n;
    for (auto& [name, v] : record.adversarial_loss) {
      v /= n;
    }

    if (dev_set.empty()) {
      result.model = model;
      result.history.best_epoch = epoch;
      result.history.epochs.push_back(record);
      continue;
    }
    record.dev_metric =
        selection_metric(model.spec.task, evaluate_task(model, dev_set));
    for (const auto& [name, head] : model.discriminators) {
      record.dev_discriminator_accuracy[name] =
          discriminator_accuracy(model, dev_set, name);
    }
    result.history.epochs.push_back(record);
    if (record.dev_metric > best) {
      best = record.dev_metric;
      result.model = model;
      result.history.best_epoch = epoch;
      result.history.best_dev_metric = best;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace veil
