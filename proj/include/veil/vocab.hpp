#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace veil {

// Token <-> id map with PAD=0 and UNK=1 reserved. Ids are assigned by
// descending frequency, ties broken lexicographically.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();

  static Vocab build(std::span<const std::vector<std::string>> sentences,
                     std::size_t min_count = 2);
  // tokens[0] and tokens[1] must be the PAD and UNK tokens.
  static Vocab from_tokens(std::vector<std::string> tokens,
                           std::size_t min_count);

  std::size_t id(std::string_view token) const;
  std::optional<std::size_t> find(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t min_count() const noexcept { return min_count_; }

  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

  // "# min_count=N" then one "token<TAB>id" line per entry.
  void save(std::ostream& out) const;
  static Vocab load(std::istream& in);

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_ && min_count_ == other.min_count_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t min_count_ = 2;
};

}  // namespace veil
