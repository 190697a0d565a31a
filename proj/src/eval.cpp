#include "veil/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "veil/dataset.hpp"
#include "veil/errors.hpp"
#include "veil/rng.hpp"
#include "veil/training.hpp"

namespace veil {

namespace {

struct Scored {
  std::size_t correct = 0;
  std::size_t total = 0;
  bool sentence_correct = true;
};

Scored score(JointModel& model, const Instance& instance) {
  const auto predicted = predict(model, instance);
  Scored s;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int gold = i < instance.targets.size() ? instance.targets[i] : -1;
    const bool ok = gold >= 0 && predicted[i] == static_cast<std::size_t>(gold);
    s.correct += ok ? 1 : 0;
    s.sentence_correct = s.sentence_correct && ok;
    ++s.total;
  }
  return s;
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

TaskMetrics evaluate_task(JointModel& model, const std::vector<Instance>& instances) {
  TaskMetrics metrics;
  std::size_t correct = 0, sentences_ok = 0;
  std::vector<std::size_t> predictions, gold;
  for (const Instance& inst : instances) {
    const auto predicted = predict(model, inst);
    bool all_ok = true;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const int g = i < inst.targets.size() ? inst.targets[i] : -1;
      const bool ok = g >= 0 && predicted[i] == static_cast<std::size_t>(g);
      correct += ok ? 1 : 0;
      all_ok = all_ok && ok;
      ++metrics.units;
    }
    sentences_ok += all_ok ? 1 : 0;
    if (model.spec.task == TaskKind::kSentiment && !inst.targets.empty() &&
        inst.targets[0] >= 0) {
      predictions.push_back(predicted[0]);
      gold.push_back(static_cast<std::size_t>(inst.targets[0]));
    }
  }
  metrics.accuracy = percent(correct, metrics.units);
  metrics.sentence_accuracy = percent(sentences_ok, instances.size());
  if (model.spec.task == TaskKind::kSentiment && !gold.empty()) {
    metrics.macro_f1 = macro_f1(predictions, gold, kRatingClasses);
  }
  return metrics;
}

double selection_metric(TaskKind task, const TaskMetrics& metrics) {
  return task == TaskKind::kTagger ? metrics.accuracy : metrics.macro_f1;
}

GroupReport group_accuracy(JointModel& model, const std::vector<Instance>& instances,
                           const std::string& attribute) {
  const AttributeSchema& schema = attribute_schema(attribute);
  const auto labels = attribute_labels(instances, attribute);
  std::vector<std::size_t> correct(schema.arity(), 0), total(schema.arity(), 0);
  std::vector<std::size_t> sent_ok(schema.arity(), 0), sent_total(schema.arity(), 0);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Scored s = score(model, instances[i]);
    correct[labels[i]] += s.correct;
    total[labels[i]] += s.total;
    sent_ok[labels[i]] += s.sentence_correct ? 1 : 0;
    ++sent_total[labels[i]];
  }
  GroupReport report;
  report.attribute = attribute;
  for (std::size_t g = 0; g < schema.arity(); ++g) {
    if (total[g] == 0) {
      continue;
    }
    report.accuracy[schema.values[g]] = percent(correct[g], total[g]);
    report.count[schema.values[g]] = total[g];
    if (model.spec.task == TaskKind::kTagger) {
      report.sentence_accuracy[schema.values[g]] = percent(sent_ok[g], sent_total[g]);
    }
  }
  report.delta = group_delta(report.accuracy);
  return report;
}

double discriminator_accuracy(JointModel& model,
                              const std::vector<Instance>& instances,
                              const std::string& attribute) {
  const auto labels = attribute_labels(instances, attribute);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    correct += discriminator_predict(model, attribute, instances[i]) == labels[i];
  }
  return percent(correct, instances.size());
}

namespace {

Tensor stack(const std::vector<std::vector<double>>& reps,
             std::span<const std::size_t> rows) {
  const std::size_t d = reps.at(rows.front()).size();
  Tensor out({rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& v = reps[rows[r]];
    if (v.size() != d) {
      throw DimensionError("representations have inconsistent widths");
    }
    std::copy(v.begin(), v.end(), out.data() + r * d);
  }
  return out;
}

double probe_accuracy(FeedForwardHead& probe, const std::vector<std::vector<double>>& reps,
                      std::span<const std::size_t> labels,
                      std::span<const std::size_t> rows) {
  if (rows.empty()) {
    return 0.0;
  }
  Tape tape;
  const Var logits = feedforward(tape, probe, tape.constant(stack(reps, rows)));
  const Tensor& z = tape.value(logits);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    correct += argmax(z.values().subspan(r * z.cols(), z.cols())) == labels[rows[r]];
  }
  return percent(correct, rows.size());
}

}  // namespace

double train_attacker(const std::vector<std::vector<double>>& train_reps,
                      std::span<const std::size_t> train_labels,
                      const std::vector<std::vector<double>>& test_reps,
                      std::span<const std::size_t> test_labels, std::size_t arity,
                      const AttackerConfig& config) {
  if (train_reps.size() != train_labels.size() || test_reps.size() != test_labels.size()) {
    throw DimensionError("attacker: representation and label counts differ");
  }
  if (train_reps.empty() || test_reps.empty()) {
    throw DataError("attacker needs non-empty train and test sets");
  }
  for (std::size_t l : train_labels) {
    if (l >= arity) throw DataError("attacker label outside attribute arity");
  }
  for (std::size_t l : test_labels) {
    if (l >= arity) throw DataError("attacker label outside attribute arity");
  }
  if (std::set<std::size_t>(train_labels.begin(), train_labels.end()).size() < 2) {
    throw DataError("attacker training labels contain a single class");
  }

  std::vector<std::size_t> order(train_reps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_hold = static_cast<std::size_t>(config.holdout *
                                               static_cast<double>(order.size()));
  std::vector<std::size_t> fit(order.begin(), order.end() - n_hold);
  std::vector<std::size_t> hold(order.end() - n_hold, order.end());

  FeedForwardHead probe = FeedForwardHead::init(
      "probe", train_reps.front().size(), config.hidden, arity, rng);
  TrainConfig opt_config;
  opt_config.learning_rate = config.learning_rate;
  Optimizer optimizer(opt_config);
  const auto params = probe.parameters();

  FeedForwardHead best = probe;
  double best_hold = -1.0;
  std::size_t since_best = 0;
  const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng(config.seed + 1 + epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(fit));
    for (std::size_t start = 0; start < fit.size(); start += batch_size) {
      const std::size_t end = std::min(fit.size(), start + batch_size);
      const std::span<const std::size_t> rows(fit.data() + start, end - start);
      for (Parameter* p : params) {
        p->zero_grad();
      }
      Tape tape;
      const Var logits = feedforward(tape, probe, tape.constant(stack(train_reps, rows)));
      std::vector<Var> losses;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        losses.push_back(
            tape.softmax_cross_entropy(tape.row(logits, r), train_labels[rows[r]]));
      }
      const Var loss = tape.scale(tape.add_n(losses), 1.0 / static_cast<double>(rows.size()));
      tape.backward(loss);
      optimizer.step(params);
    }
    if (hold.empty()) {
      best = probe;
      continue;
    }
    const double acc = probe_accuracy(probe, train_reps, train_labels, hold);
    if (acc > best_hold) {
      best_hold = acc;
      best = probe;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  std::vector<std::size_t> test_rows(test_reps.size());
  std::iota(test_rows.begin(), test_rows.end(), std::size_t{0});
  return probe_accuracy(best, test_reps, test_labels, test_rows);
}

AttackResult attack(JointModel& model, const std::vector<Instance>& train_set,
                    const std::vector<Instance>& test_set,
                    const std::string& attribute, const AttackerConfig& config) {
  const AttributeSchema& schema = attribute_schema(attribute);
  const auto train_labels = attribute_labels(train_set, attribute);
  const auto test_labels = attribute_labels(test_set, attribute);
  std::vector<std::vector<double>> train_reps, test_reps;
  train_reps.reserve(train_set.size());
  for (const Instance& inst : train_set) {
    train_reps.push_back(extract_representation(model, inst));
  }
  test_reps.reserve(test_set.size());
  for (const Instance& inst : test_set) {
    test_reps.push_back(extract_representation(model, inst));
  }
  AttackerConfig probe_config = config;
  if (probe_config.hidden == 0) {
    probe_config.hidden = model.spec.discriminator_hidden;
  }
  AttackResult result;
  result.attribute = attribute;
  result.n_train = train_set.size();
  result.n_test = test_set.size();
  result.majority_baseline = majority_baseline(test_labels);
  result.attacker_accuracy = train_attacker(train_reps, train_labels, test_reps,
                                            test_labels, schema.arity(), probe_config);
  if (model.discriminators.count(attribute)) {
    result.discriminator_accuracy = discriminator_accuracy(model, test_set, attribute);
  }
  return result;
}

}  // namespace veil
