#include "veil/vocab.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "veil/errors.hpp"

namespace veil {

Vocab::Vocab()
    : tokens_{std::string(kPadToken), std::string(kUnkToken)},
      index_{{std::string(kPadToken), kPad}, {std::string(kUnkToken), kUnk}} {}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, std::size_t min_count) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw DataError("vocabulary must start with <pad> and <unk>");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.min_count_ = min_count;
  v.index_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw DataError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

Vocab Vocab::build(std::span<const std::vector<std::string>> sentences,
                   std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : sentences) {
    for (const auto& token : sentence) {
      ++counts[token];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_count && token != kPadToken && token != kUnkToken) {
      kept.emplace_back(token, count);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already lexicographic
  });
  std::vector<std::string> tokens{std::string(kPadToken), std::string(kUnkToken)};
  for (auto& [token, count] : kept) {
    tokens.push_back(token);
  }
  return from_tokens(std::move(tokens), min_count);
}

std::optional<std::size_t> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::size_t Vocab::id(std::string_view token) const {
  return find(token).value_or(kUnk);
}

std::vector<std::size_t> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    ids.push_back(id(t));
  }
  return ids;
}

void Vocab::save(std::ostream& out) const {
  out << "# min_count=" << min_count_ << "\n";
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << "\t" << i << "\n";
  }
}

Vocab Vocab::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t min_count = 2;
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    if (line.front() == '#') {
      const auto pos = line.find("min_count=");
      if (pos != std::string::npos) {
        try {
          min_count = std::stoul(line.substr(pos + 10));
        } catch (const std::exception&) {
          throw DataError("bad min_count header", line_no);
        }
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("expected token<TAB>id", line_no);
    }
    std::size_t id = 0;
    try {
      std::size_t consumed = 0;
      id = std::stoul(line.substr(tab + 1), &consumed);
      if (consumed != line.size() - tab - 1) {
        throw DataError("trailing characters after id", line_no);
      }
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("bad token id", line_no);
    }
    if (id != tokens.size()) {
      throw DataError("ids must be dense and ascending, expected " +
                          std::to_string(tokens.size()),
                      line_no);
    }
    tokens.push_back(line.substr(0, tab));
  }
  return from_tokens(std::move(tokens), min_count);
}

}  // namespace veil
