#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "veil/corpus.hpp"
#include "veil/models.hpp"
#include "veil/vocab.hpp"

namespace veil {

inline constexpr std::size_t kMaxReviewTokens = 256;

std::vector<std::vector<std::string>> token_lists(const TaggedCorpus& corpus);
std::vector<std::vector<std::string>> token_lists(const ReviewCorpus& corpus);

// Tags outside `tagset` become -1. Attributes are mapped through the
// standard schema.
std::vector<Instance> encode_tagged(const TaggedCorpus& corpus, const Vocab& vocab,
                                    const std::vector<std::string>& tagset);

// Tokenizes, truncates to max_tokens, then pads with pad_width PAD tokens on
// each side (and more on the right if still shorter than min_length).
std::vector<Instance> encode_reviews(const ReviewCorpus& corpus, const Vocab& vocab,
                                     std::size_t pad_width, std::size_t min_length,
                                     std::size_t max_tokens = kMaxReviewTokens);

// Attribute class labels; throws DataError if any instance lacks it.
std::vector<std::size_t> attribute_labels(const std::vector<Instance>& instances,
                                          const std::string& attribute);

template <typename T>
std::vector<T> select(const std::vector<T>& items,
                      const std::vector<std::size_t>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    out.push_back(items.at(i));
  }
  return out;
}

}  // namespace veil
