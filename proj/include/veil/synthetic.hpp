#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "veil/corpus.hpp"

namespace veil {

// Parameters of the confounded text generator.
//
// Token inventory (set by the SyntheticSpec fields, independent of the seed):
//   task<c>x<j>   indicators for task class c   (indicators_per_class each)
//   attr<v>x<j>   indicators for attribute value v (indicators_per_value each)
//   w<k>          filler, the remaining vocab_size slots
//
// Each instance is generated as:
//   1. b ~ U{0..arity-1}.
//   2. With probability confound, y ~ U{c : c mod arity == b} (training and
//      in-domain test) or y ~ U{c : c mod arity != b} (flipped test);
//      otherwise y ~ U{0..task_classes-1}.
//   3. `length` filler tokens; `attribute_tokens` distinct positions are
//      overwritten with indicators of b; with probability task_signal a
//      further `task_tokens` positions get indicators of y. Instances without
//      task indicators can only be guessed from the confound.
//   4. The remaining standard attributes are drawn uniformly.
//
// The train split never depends on flip_out_of_domain, and the test split
// consumes the same random draws in both settings, so flipped and unflipped
// test sets differ only in how y relates to b.
struct SyntheticSpec {
  std::size_t n_train = 2000;
  std::size_t n_test = 1000;
  std::size_t vocab_size = 200;
  double confound = 0.8;
  bool flip_out_of_domain = false;
  std::size_t task_classes = 5;
  std::size_t attribute_arity = 2;
  std::uint64_t seed = 0;

  std::string attribute = "sex";
  std::size_t length = 16;
  std::size_t attribute_tokens = 2;
  std::size_t task_tokens = 2;
  double task_signal = 0.88;
  std::size_t indicators_per_class = 4;
  std::size_t indicators_per_value = 4;
};

struct SyntheticInstance {
  std::vector<std::string> tokens;
  std::size_t label = 0;
  std::map<std::string, std::string> attributes;  // all standard attributes
  std::size_t attribute_class = 0;                // index of spec.attribute
};

struct SyntheticData {
  std::vector<SyntheticInstance> train;
  std::vector<SyntheticInstance> test;
};

// Throws ConfigError for specs whose vocabulary cannot hold every indicator
// plus filler, or whose arity does not match the named attribute.
void validate(const SyntheticSpec& spec);
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// True if `token` is an attribute indicator in the generator's inventory.
bool is_attribute_indicator(const std::string& token);
// Task indicator class of `token`, or -1.
int task_indicator_class(const std::string& token);

// P(y mod arity == b) minus its value under independence. Positive when the
// attribute co-occurs with its affine task classes, negative when flipped.
double confound_association(const std::vector<SyntheticInstance>& instances,
                            std::size_t arity);

// Ratings are label + 1; throws ConfigError for labels above 4.
ReviewCorpus to_review_corpus(const std::vector<SyntheticInstance>& instances);
// Every token is tagged C<label>: sentence classification posed as tagging.
TaggedCorpus to_tagged_corpus(const std::vector<SyntheticInstance>& instances);

}  // namespace veil
