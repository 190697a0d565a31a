#include "veil/models.hpp"

#include <cstring>

#include "veil/errors.hpp"
#include "veil/rng.hpp"

namespace veil {

const char* task_name(TaskKind task) {
  return task == TaskKind::kTagger ? "tagger" : "sentiment";
}

TaskKind parse_task(const std::string& name) {
  if (name == "tagger") return TaskKind::kTagger;
  if (name == "sentiment") return TaskKind::kSentiment;
  throw ConfigError("unknown task '" + name + "' (expected tagger or sentiment)");
}

std::size_t ModelSpec::representation_dim() const {
  if (task == TaskKind::kTagger) {
    return hidden_total;
  }
  return filter_widths.size() * feature_maps;
}

void ModelSpec::validate() const {
  if (vocab_size < 2) {
    throw ConfigError("vocab_size must include PAD and UNK");
  }
  if (embedding_dim == 0 || num_classes < 1) {
    throw ConfigError("embedding_dim and num_classes must be positive");
  }
  if (task == TaskKind::kTagger) {
    if (hidden_total == 0 || hidden_total % 2 != 0) {
      throw ConfigError("hidden_total must be a positive even number, got " +
                        std::to_string(hidden_total));
    }
  } else {
    if (num_classes != kRatingClasses) {
      throw ConfigError("sentiment model has exactly 5 rating classes");
    }
    if (filter_widths.empty() || feature_maps == 0) {
      throw ConfigError("sentiment model needs filter widths and feature maps");
    }
  }
  for (const auto& [name, arity] : attributes) {
    if (arity < 2) {
      throw ConfigError("attribute " + name + " needs arity >= 2");
    }
  }
}

std::vector<Parameter*> TaggerModel::parameters() {
  std::vector<Parameter*> out{&embeddings.matrix};
  for (Parameter* p : forward.parameters()) out.push_back(p);
  for (Parameter* p : backward.parameters()) out.push_back(p);
  for (Parameter* p : output.parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> SentimentModel::parameters() {
  std::vector<Parameter*> out{&embeddings.matrix};
  for (Parameter* p : conv.parameters()) out.push_back(p);
  for (Parameter* p : output.parameters()) out.push_back(p);
  return out;
}

namespace {

std::uint64_t name_seed(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h = (h ^ c) * 1099511628211ULL;
  }
  return h;
}

}  // namespace

JointModel JointModel::create(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng encoder_rng(seed + seed_offset::kEncoderInit);
  Rng head_rng(seed + seed_offset::kTaskHeadInit);
  auto embeddings = EmbeddingTable::random("embedding", spec.vocab_size,
                                           spec.embedding_dim, encoder_rng);
  JointModel model{spec, TaggerModel{}, {}};
  if (spec.task == TaskKind::kTagger) {
    const std::size_t half = spec.hidden_total / 2;
    TaggerModel tagger;
    tagger.embeddings = std::move(embeddings);
    tagger.forward = LstmParams::init("lstm.fwd", spec.embedding_dim, half, encoder_rng);
    tagger.backward = LstmParams::init("lstm.bwd", spec.embedding_dim, half, encoder_rng);
    tagger.output = FeedForwardHead::init("output", spec.hidden_total, 0,
                                          spec.num_classes, head_rng);
    model.encoder = std::move(tagger);
  } else {
    SentimentModel sentiment;
    sentiment.embeddings = std::move(embeddings);
    sentiment.conv = ConvBank::init("conv", spec.embedding_dim, spec.filter_widths,
                                    spec.feature_maps, encoder_rng);
    sentiment.output = FeedForwardHead::init("output", sentiment.conv.output_dim(),
                                             0, kRatingClasses, head_rng);
    model.encoder = std::move(sentiment);
  }
  for (const auto& [name, arity] : spec.attributes) {
    Rng rng(seed + seed_offset::kDiscriminatorInit + name_seed(name));
    model.discriminators.emplace(
        name, FeedForwardHead::init("disc." + name, spec.representation_dim(),
                                    spec.discriminator_hidden, arity, rng));
  }
  return model;
}

std::vector<Parameter*> JointModel::task_parameters() {
  return std::visit([](auto& enc) { return enc.parameters(); }, encoder);
}

std::vector<Parameter*> JointModel::discriminator_parameters(
    const std::string& attribute) {
  auto it = discriminators.find(attribute);
  if (it == discriminators.end()) {
    throw ConfigError("model has no discriminator for '" + attribute + "'");
  }
  return it->second.parameters();
}

std::vector<Parameter*> JointModel::parameters() {
  auto out = task_parameters();
  for (auto& [name, head] : discriminators) {
    for (Parameter* p : head.parameters()) {
      out.push_back(p);
    }
  }
  return out;
}

EmbeddingTable& JointModel::embeddings() {
  return std::visit([](auto& enc) -> EmbeddingTable& { return enc.embeddings; },
                    encoder);
}

ForwardResult tagger_forward(Tape& tape, TaggerModel& model,
                             const Instance& instance, Mode mode,
                             double dropout) {
  if (instance.tokens.empty()) {
    throw DataError("tagger input sentence is empty");
  }
  const Var xs = embed(tape, model.embeddings, instance.tokens);
  const BiLstmOutput enc = bilstm_encode(tape, model.forward, model.backward, xs);
  const Var states = tape.dropout(enc.per_token, dropout, mode);
  return {feedforward(tape, model.output, states), enc.sentence};
}

ForwardResult sentiment_forward(Tape& tape, SentimentModel& model,
                                const Instance& instance, Mode mode,
                                double dropout) {
  if (instance.tokens.size() < model.conv.max_width()) {
    throw DataError("classifier input has " + std::to_string(instance.tokens.size()) +
                    " tokens; pad to at least " +
                    std::to_string(model.conv.max_width()));
  }
  const Var xs = embed(tape, model.embeddings, instance.tokens);
  const Var h = conv_maxpool(tape, model.conv, xs);
  const Var dropped = tape.dropout(h, dropout, mode);
  return {feedforward(tape, model.output, dropped), h};
}

ForwardResult task_forward(Tape& tape, JointModel& model,
                           const Instance& instance, Mode mode, double dropout) {
  if (auto* tagger = std::get_if<TaggerModel>(&model.encoder)) {
    return tagger_forward(tape, *tagger, instance, mode, dropout);
  }
  return sentiment_forward(tape, std::get<SentimentModel>(model.encoder),
                           instance, mode, dropout);
}

Var task_loss(Tape& tape, const ForwardResult& forward, const Instance& instance) {
  // Copy the row count: tape.row() below may reallocate node storage.
  const std::size_t rows = tape.value(forward.logits).rows();
  if (instance.targets.size() != rows) {
    throw DataError("instance has " + std::to_string(instance.targets.size()) +
                    " targets for " + std::to_string(rows) + " output rows");
  }
  std::vector<Var> terms;
  terms.reserve(instance.targets.size());
  for (std::size_t i = 0; i < instance.targets.size(); ++i) {
    const int target = instance.targets[i];
    if (target < 0) {
      throw DataError("cannot train on a label unseen at vocabulary build time");
    }
    const Var row = rows == 1 ? forward.logits : tape.row(forward.logits, i);
    terms.push_back(tape.softmax_cross_entropy(row, static_cast<std::size_t>(target)));
  }
  if (terms.size() == 1) {
    return terms.front();
  }
  return tape.scale(tape.add_n(terms), 1.0 / static_cast<double>(terms.size()));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) {
      best = i;
    }
  }
  return best;
}

std::vector<std::size_t> predict(JointModel& model, const Instance& instance) {
  Tape tape;
  const ForwardResult out = task_forward(tape, model, instance, Mode::kEval, 0.0);
  const Tensor& logits = tape.value(out.logits);
  std::vector<std::size_t> labels(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    labels[i] = argmax(logits.values().subspan(i * logits.cols(), logits.cols()));
  }
  return labels;
}

std::vector<double> extract_representation(JointModel& model,
                                           const Instance& instance) {
  Tape tape;
  const ForwardResult out = task_forward(tape, model, instance, Mode::kEval, 0.0);
  const auto values = tape.value(out.representation).values();
  return {values.begin(), values.end()};
}

std::size_t discriminator_predict(JointModel& model, const std::string& attribute,
                                  const Instance& instance) {
  auto it = model.discriminators.find(attribute);
  if (it == model.discriminators.end()) {
    throw ConfigError("model has no discriminator for '" + attribute + "'");
  }
  Tape tape;
  const ForwardResult out = task_forward(tape, model, instance, Mode::kEval, 0.0);
  const Var logits = feedforward(tape, it->second, out.representation);
  return argmax(tape.value(logits).values());
}

std::uint64_t parameter_hash(JointModel& model) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Parameter* p : model.parameters()) {
    for (double v : p->value.values()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h = (h ^ b) * 1099511628211ULL;
      }
    }
  }
  return h;
}

}  // namespace veil
