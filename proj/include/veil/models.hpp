#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "veil/autodiff.hpp"
#include "veil/layers.hpp"

namespace veil {

enum class TaskKind { kTagger, kSentiment };

const char* task_name(TaskKind task);
TaskKind parse_task(const std::string& name);

// One encoded example. For the tagger `targets` holds one tag id per token;
// for the classifier a single rating class. A target of -1 marks a label
// never seen in training: it is always scored as an error.
struct Instance {
  std::vector<std::size_t> tokens;
  std::vector<int> targets;
  std::map<std::string, std::size_t> attributes;
};

inline constexpr std::size_t kRatingClasses = 5;

struct ModelSpec {
  TaskKind task = TaskKind::kSentiment;
  std::size_t vocab_size = 2;
  std::size_t num_classes = kRatingClasses;  // tagset size for the tagger
  std::size_t embedding_dim = 300;
  // Width of the tagger's [h_n; h'_1]; each direction gets half.
  std::size_t hidden_total = 300;
  std::vector<std::size_t> filter_widths{3, 4, 5};
  std::size_t feature_maps = 100;
  std::size_t discriminator_hidden = 300;
  // Protected attributes with an adversarial head: name -> arity.
  std::map<std::string, std::size_t> attributes;

  std::size_t representation_dim() const;
  void validate() const;
};

struct TaggerModel {
  EmbeddingTable embeddings;
  LstmParams forward;
  LstmParams backward;
  FeedForwardHead output;  // linear: no hidden layer

  std::vector<Parameter*> parameters();
};

struct SentimentModel {
  EmbeddingTable embeddings;
  ConvBank conv;
  FeedForwardHead output;  // linear over 5 rating classes

  std::vector<Parameter*> parameters();
};

// Task model (encoder + output) plus one discriminator per protected
// attribute.
struct JointModel {
  ModelSpec spec;
  std::variant<TaggerModel, SentimentModel> encoder;
  std::map<std::string, FeedForwardHead> discriminators;

  // Initialisation draws each component from its own sub-seed, so the task
  // parameters do not depend on which discriminators exist.
  static JointModel create(const ModelSpec& spec, std::uint64_t seed);

  std::vector<Parameter*> task_parameters();
  std::vector<Parameter*> discriminator_parameters(const std::string& attribute);
  std::vector<Parameter*> parameters();
  EmbeddingTable& embeddings();
};

struct ForwardResult {
  Var logits;          // [n × tags] for the tagger, [1 × 5] for sentiment
  Var representation;  // h consumed by discriminators, never dropped out
};

ForwardResult tagger_forward(Tape& tape, TaggerModel& model,
                             const Instance& instance, Mode mode,
                             double dropout);
ForwardResult sentiment_forward(Tape& tape, SentimentModel& model,
                                const Instance& instance, Mode mode,
                                double dropout);
ForwardResult task_forward(Tape& tape, JointModel& model,
                           const Instance& instance, Mode mode, double dropout);

// Mean per-token cross-entropy (tagger) or the rating cross-entropy.
Var task_loss(Tape& tape, const ForwardResult& forward, const Instance& instance);

// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// Eval-mode argmax per token (tagger) or over the 5 rating classes.
std::vector<std::size_t> predict(JointModel& model, const Instance& instance);

// The exact h the discriminators consume, computed in eval mode.
std::vector<double> extract_representation(JointModel& model,
                                           const Instance& instance);

// The jointly trained discriminator's predicted class on an instance.
std::size_t discriminator_predict(JointModel& model, const std::string& attribute,
                                  const Instance& instance);

// FNV-1a over every parameter's bytes, in parameters() order.
std::uint64_t parameter_hash(JointModel& model);

}  // namespace veil
