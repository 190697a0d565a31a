#include "veil/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "veil/errors.hpp"
#include "veil/rng.hpp"

namespace veil {

std::optional<std::size_t> AttributeSchema::index_of(std::string_view value) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == value) {
      return i;
    }
  }
  return std::nullopt;
}

const std::vector<AttributeSchema>& standard_attributes() {
  static const std::vector<AttributeSchema> schemas{
      {"sex", {"F", "M"}},
      {"age", {"O45", "U35"}},
      {"loc", {"US", "UK", "DE", "DK", "FR"}},
  };
  return schemas;
}

const AttributeSchema& attribute_schema(std::string_view name) {
  for (const auto& s : standard_attributes()) {
    if (s.name == name) {
      return s;
    }
  }
  throw ConfigError("unknown attribute '" + std::string(name) +
                    "' (known: sex, age, loc)");
}

std::optional<std::string> normalize_attribute(const AttributeSchema& schema,
                                               std::string_view raw) {
  if (schema.index_of(raw)) {
    return std::string(raw);
  }
  if (schema.name == "age") {
    int years = 0;
    const auto [end, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), years);
    if (ec == std::errc() && end == raw.data() + raw.size() && years >= 0) {
      if (years >= 45) {
        return std::string("O45");
      }
      if (years < 35) {
        return std::string("U35");
      }
      return std::nullopt;
    }
  }
  throw DataError("value '" + std::string(raw) + "' is not valid for attribute " +
                  schema.name);
}

// ---------------------------------------------------------------------------
// Tagging format
// ---------------------------------------------------------------------------

std::vector<std::string> TaggedCorpus::tagset() const {
  std::set<std::string> tags;
  for (const auto& s : sentences) {
    tags.insert(s.tags.begin(), s.tags.end());
  }
  return {tags.begin(), tags.end()};
}

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
}

std::map<std::string, std::string> parse_header(const std::string& line,
                                                std::size_t line_no,
                                                bool& drop) {
  std::map<std::string, std::string> attributes;
  std::size_t pos = 1;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) {
      ++pos;
    }
    if (pos >= line.size()) {
      break;
    }
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) {
      ++end;
    }
    const std::string field = line.substr(pos, end - pos);
    pos = end;
    const auto eq = field.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == field.size()) {
      throw DataError("header field '" + field + "' is not key=value", line_no);
    }
    const std::string key = field.substr(0, eq);
    const AttributeSchema* schema = nullptr;
    try {
      schema = &attribute_schema(key);
    } catch (const ConfigError&) {
      throw DataError("unknown attribute key '" + key + "'", line_no);
    }
    std::optional<std::string> value;
    try {
      value = normalize_attribute(*schema, field.substr(eq + 1));
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
    if (!value) {
      drop = true;
      continue;
    }
    if (!attributes.emplace(key, *value).second) {
      throw DataError("duplicate attribute key '" + key + "'", line_no);
    }
  }
  return attributes;
}

}  // namespace

TaggedCorpus parse_tagging_corpus(std::istream& in, std::string provenance) {
  TaggedCorpus corpus;
  corpus.provenance = std::move(provenance);

  std::optional<TaggedSentence> current;
  bool drop_current = false;
  std::size_t sentence_start = 0;
  auto finish = [&](std::size_t line_no) {
    if (!current) {
      return;
    }
    if (current->tokens.empty()) {
      throw DataError("sentence has a header but no tokens",
                      sentence_start == 0 ? line_no : sentence_start);
    }
    if (drop_current) {
      ++corpus.dropped;
    } else {
      corpus.sentences.push_back(std::move(*current));
    }
    current.reset();
    drop_current = false;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) {
      finish(line_no);
      continue;
    }
    // Token lines always carry a tab, so "#word<TAB>X" stays a token.
    if (line.front() == '#' && line.find('\t') == std::string::npos) {
      if (current && !current->tokens.empty()) {
        throw DataError("header inside a sentence; missing blank line", line_no);
      }
      if (current) {
        throw DataError("two consecutive header lines", line_no);
      }
      current.emplace();
      sentence_start = line_no;
      current->attributes = parse_header(line, line_no, drop_current);
      continue;
    }
    if (!current) {
      current.emplace();
      sentence_start = line_no;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw DataError("expected exactly one token<TAB>tag pair", line_no);
    }
    current->tokens.push_back(line.substr(0, tab));
    current->tags.push_back(line.substr(tab + 1));
  }
  if (in.bad()) {
    throw IoError("read failure in tagging corpus " + corpus.provenance);
  }
  finish(line_no);
  return corpus;
}

TaggedCorpus parse_tagging_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open tagging corpus " + path.string());
  }
  try {
    return parse_tagging_corpus(in, path.string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_tagging_corpus(std::ostream& out, const TaggedCorpus& corpus) {
  for (const auto& s : corpus.sentences) {
    out << "#";
    for (const auto& [key, value] : s.attributes) {
      out << " " << key << "=" << value;
    }
    out << "\n";
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i] << "\t" << s.tags[i] << "\n";
    }
    out << "\n";
  }
}

void write_tagging_corpus(const std::filesystem::path& path,
                          const TaggedCorpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  write_tagging_corpus(out, corpus);
}

// ---------------------------------------------------------------------------
// Review format
// ---------------------------------------------------------------------------

const std::string& ReviewRecord::attribute(std::string_view name) const {
  if (name == "sex") return sex;
  if (name == "age") return age;
  if (name == "loc") return loc;
  throw ConfigError("unknown attribute '" + std::string(name) + "'");
}

namespace {

// Returns nullopt when the record falls in the dropped age band.
std::optional<ReviewRecord> parse_review_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw DataError("not valid JSON");
  }
  if (!j.is_object()) {
    throw DataError("record is not a JSON object");
  }
  static const std::set<std::string> kFields{"text", "rating", "sex", "age", "loc"};
  for (const auto& field : kFields) {
    if (!j.contains(field)) {
      throw DataError("missing field '" + field + "'");
    }
  }
  for (const auto& item : j.items()) {
    if (!kFields.count(item.key())) {
      throw DataError("unexpected field '" + item.key() + "'");
    }
  }
  if (!j["text"].is_string()) {
    throw DataError("field 'text' must be a string");
  }
  if (!j["rating"].is_number_integer()) {
    throw DataError("field 'rating' must be an integer");
  }
  const auto rating = j["rating"].get<long long>();
  if (rating < 1 || rating > 5) {
    throw DataError("rating " + std::to_string(rating) + " outside 1-5");
  }
  ReviewRecord record;
  record.text = j["text"].get<std::string>();
  record.rating = static_cast<int>(rating);
  for (const char* name : {"sex", "age", "loc"}) {
    const auto& field = j[name];
    std::string raw;
    if (field.is_string()) {
      raw = field.get<std::string>();
    } else if (std::string_view(name) == "age" && field.is_number_integer()) {
      raw = std::to_string(field.get<long long>());
    } else {
      throw DataError(std::string("field '") + name + "' must be a string");
    }
    const auto value = normalize_attribute(attribute_schema(name), raw);
    if (!value) {
      return std::nullopt;
    }
    if (std::string_view(name) == "sex") record.sex = *value;
    if (std::string_view(name) == "age") record.age = *value;
    if (std::string_view(name) == "loc") record.loc = *value;
  }
  return record;
}

}  // namespace

ReviewCorpus parse_review_corpus(std::istream& in, ReviewParseReport* report,
                                 std::string provenance) {
  ReviewCorpus corpus;
  corpus.provenance = std::move(provenance);
  ReviewParseReport local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    try {
      auto record = parse_review_line(line);
      if (!record) {
        ++local.dropped_age_band;
        continue;
      }
      corpus.reviews.push_back(std::move(*record));
      ++local.accepted;
    } catch (const DataError& e) {
      ++local.rejected;
      local.messages.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) {
    throw IoError("read failure in review corpus " + corpus.provenance);
  }
  if (report != nullptr) {
    *report = std::move(local);
  }
  return corpus;
}

ReviewCorpus parse_review_corpus(const std::filesystem::path& path,
                                 ReviewParseReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open review corpus " + path.string());
  }
  return parse_review_corpus(in, report, path.string());
}

void write_review_corpus(std::ostream& out, const ReviewCorpus& corpus) {
  for (const auto& r : corpus.reviews) {
    nlohmann::ordered_json j;
    j["text"] = r.text;
    j["rating"] = r.rating;
    j["sex"] = r.sex;
    j["age"] = r.age;
    j["loc"] = r.loc;
    out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
  }
}

void write_review_corpus(const std::filesystem::path& path,
                         const ReviewCorpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  write_review_corpus(out, corpus);
}

std::vector<std::string> tokenize_review(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 128 && std::isspace(u)) {
      flush();
    } else if (u < 128 && std::ispunct(u)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  flush();
  return tokens;
}

ReviewCorpus balance_subsample(const ReviewCorpus& corpus,
                               std::string_view attribute,
                               std::size_t n_per_class, std::uint64_t seed) {
  const AttributeSchema& schema = attribute_schema(attribute);
  std::vector<std::vector<std::size_t>> by_class(schema.arity());
  for (std::size_t i = 0; i < corpus.reviews.size(); ++i) {
    const auto cls = schema.index_of(corpus.reviews[i].attribute(attribute));
    if (!cls) {
      throw DataError("record " + std::to_string(i) + " has invalid " +
                      std::string(attribute));
    }
    by_class[*cls].push_back(i);
  }
  std::string deficits;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < n_per_class) {
      deficits += " " + schema.values[c] + " (has " +
                  std::to_string(by_class[c].size()) + ", needs " +
                  std::to_string(n_per_class) + ")";
    }
  }
  if (!deficits.empty()) {
    throw DataError("insufficient records per class:" + deficits);
  }
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& members : by_class) {
    // Partial Fisher-Yates: the first n_per_class slots become the sample.
    for (std::size_t i = 0; i < n_per_class; ++i) {
      std::swap(members[i], members[i + rng.index(members.size() - i)]);
    }
    chosen.insert(chosen.end(), members.begin(), members.begin() + n_per_class);
  }
  std::sort(chosen.begin(), chosen.end());
  ReviewCorpus out;
  out.locations = corpus.locations;
  out.provenance = corpus.provenance;
  out.reviews.reserve(chosen.size());
  for (std::size_t i : chosen) {
    out.reviews.push_back(corpus.reviews[i]);
  }
  return out;
}

}  // namespace veil
