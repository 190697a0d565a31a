#include "veil/synthetic.hpp"

#include <numeric>
#include <sstream>

#include "veil/errors.hpp"
#include "veil/rng.hpp"

namespace veil {

void validate(const SyntheticSpec& spec) {
  if (!(spec.confound >= 0.0 && spec.confound <= 1.0)) {
    throw ConfigError("confound strength must lie in [0, 1]");
  }
  if (!(spec.task_signal >= 0.0 && spec.task_signal <= 1.0)) {
    throw ConfigError("task_signal must lie in [0, 1]");
  }
  const AttributeSchema& schema = attribute_schema(spec.attribute);
  if (spec.attribute_arity != schema.arity()) {
    throw ConfigError("attribute_arity " + std::to_string(spec.attribute_arity) +
                      " does not match " + spec.attribute + " (arity " +
                      std::to_string(schema.arity()) + ")");
  }
  if (spec.task_classes < 2 || spec.task_classes < spec.attribute_arity) {
    throw ConfigError("task_classes must be >= 2 and >= attribute_arity");
  }
  if (spec.indicators_per_class == 0 || spec.indicators_per_value == 0) {
    throw ConfigError("indicator counts must be positive");
  }
  const std::size_t indicators = spec.task_classes * spec.indicators_per_class +
                                 spec.attribute_arity * spec.indicators_per_value;
  if (spec.vocab_size < indicators + 2) {
    throw ConfigError("vocab_size " + std::to_string(spec.vocab_size) +
                      " cannot hold " + std::to_string(indicators) +
                      " indicator tokens plus filler");
  }
  if (spec.length == 0 || spec.attribute_tokens + spec.task_tokens > spec.length) {
    throw ConfigError("length must fit attribute_tokens + task_tokens");
  }
}

namespace {

std::string task_token(std::size_t c, std::size_t j) {
  return "task" + std::to_string(c) + "x" + std::to_string(j);
}

std::string attr_token(std::size_t v, std::size_t j) {
  return "attr" + std::to_string(v) + "x" + std::to_string(j);
}

SyntheticInstance sample(const SyntheticSpec& spec, bool flipped, Rng& rng,
                         std::size_t filler_count) {
  const std::size_t arity = spec.attribute_arity;
  SyntheticInstance inst;
  inst.attribute_class = rng.index(arity);
  const std::size_t b = inst.attribute_class;

  const bool confounded = rng.bernoulli(spec.confound);
  std::vector<std::size_t> candidates;
  for (std::size_t c = 0; c < spec.task_classes; ++c) {
    const bool affine = c % arity == b;
    if (!confounded || affine != flipped) {
      candidates.push_back(c);
    }
  }
  inst.label = candidates[rng.index(candidates.size())];

  inst.tokens.resize(spec.length);
  for (auto& t : inst.tokens) {
    t = "w" + std::to_string(rng.index(filler_count));
  }
  std::vector<std::size_t> positions(spec.length);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(positions));
  std::size_t next = 0;
  for (std::size_t i = 0; i < spec.attribute_tokens; ++i) {
    inst.tokens[positions[next++]] =
        attr_token(b, rng.index(spec.indicators_per_value));
  }
  if (rng.bernoulli(spec.task_signal)) {
    for (std::size_t i = 0; i < spec.task_tokens; ++i) {
      inst.tokens[positions[next++]] =
          task_token(inst.label, rng.index(spec.indicators_per_class));
    }
  }

  for (const auto& schema : standard_attributes()) {
    const std::size_t v =
        schema.name == spec.attribute ? b : rng.index(schema.arity());
    inst.attributes[schema.name] = schema.values[v];
  }
  return inst;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t filler =
      spec.vocab_size - spec.task_classes * spec.indicators_per_class -
      spec.attribute_arity * spec.indicators_per_value;
  Rng rng(spec.seed);
  SyntheticData data;
  data.train.reserve(spec.n_train);
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    data.train.push_back(sample(spec, false, rng, filler));
  }
  data.test.reserve(spec.n_test);
  for (std::size_t i = 0; i < spec.n_test; ++i) {
    data.test.push_back(sample(spec, spec.flip_out_of_domain, rng, filler));
  }
  return data;
}

bool is_attribute_indicator(const std::string& token) {
  return token.rfind("attr", 0) == 0;
}

int task_indicator_class(const std::string& token) {
  if (token.rfind("task", 0) != 0) {
    return -1;
  }
  const auto sep = token.find('x', 4);
  return std::stoi(token.substr(4, sep - 4));
}

double confound_association(const std::vector<SyntheticInstance>& instances,
                            std::size_t arity) {
  if (instances.empty() || arity == 0) {
    return 0.0;
  }
  std::vector<double> p_affinity(arity, 0.0), p_attr(arity, 0.0);
  double agree = 0.0;
  for (const auto& inst : instances) {
    const std::size_t a = inst.label % arity;
    p_affinity[a] += 1.0;
    p_attr[inst.attribute_class] += 1.0;
    agree += a == inst.attribute_class ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(instances.size());
  double chance = 0.0;
  for (std::size_t v = 0; v < arity; ++v) {
    chance += (p_affinity[v] / n) * (p_attr[v] / n);
  }
  return agree / n - chance;
}

ReviewCorpus to_review_corpus(const std::vector<SyntheticInstance>& instances) {
  ReviewCorpus corpus;
  corpus.provenance = "synthetic";
  for (const auto& inst : instances) {
    if (inst.label >= 5) {
      throw ConfigError("review ratings cover 5 classes; got label " + std::to_string(inst.label));
    }
    ReviewRecord r;
    std::ostringstream text;
    for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
      text << (i ? " " : "") << inst.tokens[i];
    }
    r.text = text.str();
    r.rating = static_cast<int>(inst.label) + 1;
    r.sex = inst.attributes.at("sex");
    r.age = inst.attributes.at("age");
    r.loc = inst.attributes.at("loc");
    corpus.reviews.push_back(std::move(r));
  }
  return corpus;
}

TaggedCorpus to_tagged_corpus(const std::vector<SyntheticInstance>& instances) {
  TaggedCorpus corpus;
  corpus.provenance = "synthetic";
  for (const auto& inst : instances) {
    TaggedSentence s;
    s.tokens = inst.tokens;
    s.tags.assign(inst.tokens.size(), "C" + std::to_string(inst.label));
    s.attributes = inst.attributes;
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace veil
