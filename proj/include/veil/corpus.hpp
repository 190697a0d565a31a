#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace veil {

// A protected attribute and its ordered class labels.
struct AttributeSchema {
  std::string name;
  std::vector<std::string> values;

  std::size_t arity() const noexcept { return values.size(); }
  std::optional<std::size_t> index_of(std::string_view value) const;
};

// sex {F, M}; age {O45, U35}; loc {US, UK, DE, DK, FR}.
const std::vector<AttributeSchema>& standard_attributes();
// Throws ConfigError for names outside the standard schema.
const AttributeSchema& attribute_schema(std::string_view name);

// Maps a raw attribute value onto its schema label. Numeric ages are banded
// (>= 45 -> O45, < 35 -> U35); ages in [35, 45) yield nullopt, meaning the
// record is dropped. Throws DataError for values outside the schema.
std::optional<std::string> normalize_attribute(const AttributeSchema& schema,
                                               std::string_view raw);

// ---------------------------------------------------------------------------
// Tagging corpus: "# key=value ..." header, token<TAB>tag lines, blank line.
// ---------------------------------------------------------------------------

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::map<std::string, std::string> attributes;

  bool operator==(const TaggedSentence&) const = default;
};

struct TaggedCorpus {
  std::vector<TaggedSentence> sentences;
  std::string provenance;
  std::size_t dropped = 0;  // sentences removed by age banding

  // Sorted distinct tags.
  std::vector<std::string> tagset() const;
  std::size_t size() const noexcept { return sentences.size(); }
};

TaggedCorpus parse_tagging_corpus(std::istream& in, std::string provenance = "");
TaggedCorpus parse_tagging_corpus(const std::filesystem::path& path);
void write_tagging_corpus(std::ostream& out, const TaggedCorpus& corpus);
void write_tagging_corpus(const std::filesystem::path& path,
                          const TaggedCorpus& corpus);

// ---------------------------------------------------------------------------
// Review corpus: one JSON object per line with exactly
// {text, rating, sex, age, loc}.
// ---------------------------------------------------------------------------

struct ReviewRecord {
  std::string text;
  int rating = 1;  // 1..5
  std::string sex;
  std::string age;
  std::string loc;

  const std::string& attribute(std::string_view name) const;
  std::size_t rating_class() const { return static_cast<std::size_t>(rating - 1); }

  bool operator==(const ReviewRecord&) const = default;
};

struct ReviewParseReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t dropped_age_band = 0;
  std::vector<std::string> messages;  // one per rejected line
};

struct ReviewCorpus {
  std::vector<ReviewRecord> reviews;
  std::vector<std::string> locations = attribute_schema("loc").values;
  std::string provenance;

  std::size_t size() const noexcept { return reviews.size(); }
};

ReviewCorpus parse_review_corpus(std::istream& in, ReviewParseReport* report = nullptr,
                                 std::string provenance = "");
ReviewCorpus parse_review_corpus(const std::filesystem::path& path,
                                 ReviewParseReport* report = nullptr);
void write_review_corpus(std::ostream& out, const ReviewCorpus& corpus);
void write_review_corpus(const std::filesystem::path& path,
                         const ReviewCorpus& corpus);

// Lowercases ASCII letters and splits punctuation into separate tokens.
std::vector<std::string> tokenize_review(std::string_view text);

// Exactly n_per_class records per class of `attribute`, sampled without
// replacement and returned in their original order.
ReviewCorpus balance_subsample(const ReviewCorpus& corpus,
                               std::string_view attribute,
                               std::size_t n_per_class, std::uint64_t seed);

}  // namespace veil
