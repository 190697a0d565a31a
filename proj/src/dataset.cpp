#include "veil/dataset.hpp"

#include <algorithm>

#include "veil/errors.hpp"

namespace veil {

std::vector<std::vector<std::string>> token_lists(const TaggedCorpus& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) {
    out.push_back(s.tokens);
  }
  return out;
}

std::vector<std::vector<std::string>> token_lists(const ReviewCorpus& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.reviews.size());
  for (const auto& r : corpus.reviews) {
    out.push_back(tokenize_review(r.text));
  }
  return out;
}

namespace {

std::map<std::string, std::size_t> encode_attributes(
    const std::map<std::string, std::string>& raw) {
  std::map<std::string, std::size_t> out;
  for (const auto& [name, value] : raw) {
    const auto idx = attribute_schema(name).index_of(value);
    if (!idx) {
      throw DataError("attribute " + name + " has invalid value '" + value + "'");
    }
    out[name] = *idx;
  }
  return out;
}

}  // namespace

std::vector<Instance> encode_tagged(const TaggedCorpus& corpus, const Vocab& vocab,
                                    const std::vector<std::string>& tagset) {
  std::map<std::string, int> tag_index;
  for (std::size_t i = 0; i < tagset.size(); ++i) {
    tag_index[tagset[i]] = static_cast<int>(i);
  }
  std::vector<Instance> out;
  out.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) {
    Instance inst;
    inst.tokens = vocab.encode(s.tokens);
    for (const auto& tag : s.tags) {
      auto it = tag_index.find(tag);
      inst.targets.push_back(it == tag_index.end() ? -1 : it->second);
    }
    inst.attributes = encode_attributes(s.attributes);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Instance> encode_reviews(const ReviewCorpus& corpus, const Vocab& vocab,
                                     std::size_t pad_width, std::size_t min_length,
                                     std::size_t max_tokens) {
  std::vector<Instance> out;
  out.reserve(corpus.reviews.size());
  for (const auto& r : corpus.reviews) {
    auto tokens = tokenize_review(r.text);
    if (tokens.size() > max_tokens) {
      tokens.resize(max_tokens);
    }
    Instance inst;
    inst.tokens.assign(pad_width, Vocab::kPad);
    for (const auto& t : tokens) {
      inst.tokens.push_back(vocab.id(t));
    }
    inst.tokens.insert(inst.tokens.end(), pad_width, Vocab::kPad);
    if (inst.tokens.size() < min_length) {
      inst.tokens.resize(min_length, Vocab::kPad);
    }
    inst.targets = {static_cast<int>(r.rating_class())};
    inst.attributes = encode_attributes({{"sex", r.sex}, {"age", r.age}, {"loc", r.loc}});
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<std::size_t> attribute_labels(const std::vector<Instance>& instances,
                                          const std::string& attribute) {
  std::vector<std::size_t> labels;
  labels.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto it = instances[i].attributes.find(attribute);
    if (it == instances[i].attributes.end()) {
      throw DataError("instance " + std::to_string(i) + " has no '" + attribute +
                      "' attribute");
    }
    labels.push_back(it->second);
  }
  return labels;
}

}  // namespace veil
