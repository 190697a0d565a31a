#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "veil/corpus.hpp"
#include "veil/errors.hpp"

namespace veil::cli {

namespace {

constexpr Command kTrain = Command::kTrain;
constexpr Command kEval = Command::kEval;
constexpr Command kAttack = Command::kAttack;
constexpr Command kCrossval = Command::kCrossval;
constexpr Command kSynth = Command::kSynth;

const std::vector<Command> kAll{kTrain, kEval, kAttack, kCrossval, kSynth};
const std::vector<Command> kFit{kTrain, kCrossval};

std::vector<KeyInfo> build_keys() {
  std::vector<KeyInfo> keys{
      {"task", "sentiment", "tagger or sentiment", {kTrain, kEval, kAttack, kCrossval}},
      {"train", "", "training corpus (attack: the attacker's training corpus)",
       {kTrain, kAttack}},
      {"dev", "", "dev corpus for early stopping; empty trains for max_epochs", {kTrain}},
      {"test", "", "test corpus", {kEval, kAttack}},
      {"data", "", "corpus to split into folds", {kCrossval}},
      {"checkpoint", "", "trained model file", {kEval, kAttack}},
      {"pretrained", "", "word vectors, one 'token v1 v2 ...' line each", kFit},
      {"pretrain", "", "tagging corpus the tagger is first trained on, without adversaries",
       kFit},
      {"out", "", "output directory", kAll},
      {"json", "false", "print the report as JSON instead of a table", kAll, true},
      {"seed", "0", "run seed; every random stream is derived from it", kAll},

      {"adv", "none", "attributes with an adversarial head: comma list or none", kFit},
      {"lambda", "0.001", "adversarial weight: one value, or name=value,... per attribute",
       kFit},
      {"optimizer", "adam", "adam or sgd", kFit},
      {"learning_rate", "0.001", "step size", kFit},
      {"beta1", "0.9", "Adam first-moment decay", kFit},
      {"beta2", "0.999", "Adam second-moment decay", kFit},
      {"epsilon", "1e-08", "Adam denominator offset", kFit},
      {"batch_size", "16", "instances per update", kFit},
      {"max_epochs", "50", "epoch limit", kFit},
      {"patience", "5", "epochs without dev improvement before stopping", kFit},
      {"dropout", "0.5", "dropout rate on h before the task head", kFit},
      {"embedding_dim", "300", "word embedding width", kFit},
      {"hidden_dim", "300", "tagger: width of [h_n; h'_1], half per direction", kFit},
      {"filter_widths", "3,4,5", "sentiment: convolution widths", kFit},
      {"feature_maps", "100", "sentiment: filters per width", kFit},
      {"discriminator_hidden", "300", "discriminator hidden width", kFit},
      {"min_count", "2", "vocabulary frequency cut-off", kFit},

      {"k", "10", "number of folds", {kCrossval}},
      {"attributes", "auto",
       "attributes to report on: comma list, or auto for all present ones",
       {kEval, kAttack, kCrossval}},
      {"attacker_hidden", "0", "attacker hidden width; 0 uses the discriminator width",
       {kAttack, kCrossval}},
      {"attacker_learning_rate", "0.001", "attacker step size", {kAttack, kCrossval}},
      {"attacker_batch_size", "32", "attacker batch size", {kAttack, kCrossval}},
      {"attacker_epochs", "100", "attacker epoch limit", {kAttack, kCrossval}},
      {"attacker_patience", "5", "attacker early-stopping patience", {kAttack, kCrossval}},
      {"attacker_holdout", "0.1", "share of attack-train data held out for stopping",
       {kAttack, kCrossval}},

      {"format", "reviews", "reviews (JSON lines) or tagging", {kSynth}},
      {"n_train", "2000", "training instances", {kSynth}},
      {"n_test", "1000", "test instances", {kSynth}},
      {"n_dev", "0", "dev instances, from an independent stream; 0 writes none", {kSynth}},
      {"vocab_size", "200", "generator vocabulary size", {kSynth}},
      {"confound", "0.8", "rho: how often the task label follows the attribute", {kSynth}},
      {"flip_out_of_domain", "false", "reverse the confound in the test split", {kSynth},
       true},
      {"task_classes", "5", "task label count", {kSynth}},
      {"attribute", "sex", "confounded attribute", {kSynth}},
      {"length", "16", "tokens per instance", {kSynth}},
      {"attribute_tokens", "2", "attribute indicators per instance", {kSynth}},
      {"task_tokens", "2", "task indicators per instance", {kSynth}},
      {"task_signal", "0.88", "probability that an instance has task indicators", {kSynth}},
      {"indicators_per_class", "4", "task indicator inventory per class", {kSynth}},
      {"indicators_per_value", "4", "attribute indicator inventory per value", {kSynth}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  const std::string& text(const std::string& key) const { return raw_.values.at(key); }

  double real(const std::string& key) const {
    const std::string& v = text(key);
    return parse_real(key, v);
  }

  static double parse_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(out)) {
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
  }

  std::uint64_t integer(const std::string& key) const { return parse_integer(key, text(key)); }

  static std::uint64_t parse_integer(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
    return out;
  }

  bool boolean(const std::string& key) const {
    const std::string& v = text(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
  }

 private:
  const RawConfig& raw_;
};

std::vector<std::string> attribute_list(const std::string& key, const std::string& text,
                                        bool allow_none) {
  if (allow_none && text == "none") {
    return {};
  }
  std::vector<std::string> out;
  for (const std::string& name : split_list(text)) {
    try {
      attribute_schema(name);
    } catch (const ConfigError&) {
      throw ConfigError("key '" + key + "': unknown attribute '" + name + "'");
    }
    if (std::find(out.begin(), out.end(), name) != out.end()) {
      throw ConfigError("key '" + key + "': attribute '" + name + "' listed twice");
    }
    out.push_back(name);
  }
  if (out.empty()) {
    throw ConfigError("key '" + key + "': empty attribute list");
  }
  return out;
}

std::map<std::string, double> lambda_map(const std::string& text,
                                         const std::vector<std::string>& adv) {
  std::map<std::string, double> out;
  if (adv.empty()) {
    return out;
  }
  if (text.find('=') == std::string::npos) {
    const double value = Reader::parse_real("lambda", trim(text));
    for (const auto& name : adv) {
      out[name] = value;
    }
    return out;
  }
  for (const std::string& item : split_list(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("key 'lambda': expected name=value, got '" + item + "'");
    }
    const std::string name = trim(item.substr(0, eq));
    if (std::find(adv.begin(), adv.end(), name) == adv.end()) {
      throw ConfigError("key 'lambda': '" + name + "' is not in adv");
    }
    out[name] = Reader::parse_real("lambda", trim(item.substr(eq + 1)));
  }
  for (const auto& name : adv) {
    if (!out.contains(name)) {
      throw ConfigError("key 'lambda': no value for adv attribute '" + name + "'");
    }
  }
  return out;
}

}  // namespace

const char* command_name(Command command) {
  switch (command) {
    case Command::kTrain: return "train";
    case Command::kEval: return "eval";
    case Command::kAttack: return "attack";
    case Command::kCrossval: return "crossval";
    case Command::kSynth: return "synth";
  }
  return "?";
}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = build_keys();
  return keys;
}

const KeyInfo* find_key(const std::string& name) {
  for (const KeyInfo& key : config_keys()) {
    if (key.name == name) {
      return &key;
    }
  }
  return nullptr;
}

std::vector<const KeyInfo*> keys_for(Command command) {
  std::vector<const KeyInfo*> out;
  for (const KeyInfo& key : config_keys()) {
    if (std::find(key.commands.begin(), key.commands.end(), command) != key.commands.end()) {
      out.push_back(&key);
    }
  }
  return out;
}

bool RawConfig::explicitly_set(const std::string& key) const {
  const auto it = origin.find(key);
  return it != origin.end() && it->second != "default";
}

std::map<std::string, std::string> parse_config_text(std::istream& in,
                                                     const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = source + ":" + std::to_string(number) + ": ";
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + "expected key=value");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key == "config") {
      throw ConfigError(where + "config files cannot include other config files");
    }
    if (find_key(key) == nullptr) {
      throw ConfigError(where + "unknown key '" + key + "'");
    }
    if (out.contains(key)) {
      throw ConfigError(where + "duplicate key '" + key + "'");
    }
    out[key] = trim(body.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path.string());
  }
  return parse_config_text(in, path.string());
}

RawConfig layer_config(const std::map<std::string, std::string>& file_values,
                       const std::map<std::string, std::string>& cli_values) {
  RawConfig raw;
  for (const KeyInfo& key : config_keys()) {
    raw.values[key.name] = key.default_value;
    raw.origin[key.name] = "default";
  }
  for (const auto& [layer, source] :
       {std::pair{&file_values, "file"}, std::pair{&cli_values, "cli"}}) {
    for (const auto& [key, value] : *layer) {
      if (find_key(key) == nullptr) {
        throw ConfigError("unknown key '" + key + "'");
      }
      raw.values[key] = value;
      raw.origin[key] = source;
    }
  }
  return raw;
}

RunConfig resolve(Command command, const RawConfig& raw) {
  const Reader r(raw);
  RunConfig c;
  c.command = command;
  try {
    c.task = parse_task(r.text("task"));
  } catch (const ConfigError&) {
    throw ConfigError("key 'task': expected tagger or sentiment, got '" + r.text("task") + "'");
  }
  c.task_given = raw.explicitly_set("task");
  c.train_path = r.text("train");
  c.dev_path = r.text("dev");
  c.test_path = r.text("test");
  c.data_path = r.text("data");
  c.checkpoint_path = r.text("checkpoint");
  c.pretrained_path = r.text("pretrained");
  c.pretrain_path = r.text("pretrain");
  c.out_dir = r.text("out");
  c.json = r.boolean("json");

  c.adv = attribute_list("adv", r.text("adv"), true);
  c.train.lambdas = lambda_map(r.text("lambda"), c.adv);
  try {
    c.train.optimizer = parse_optimizer(r.text("optimizer"));
  } catch (const ConfigError&) {
    throw ConfigError("key 'optimizer': expected adam or sgd, got '" + r.text("optimizer") + "'");
  }
  c.train.learning_rate = r.real("learning_rate");
  c.train.beta1 = r.real("beta1");
  c.train.beta2 = r.real("beta2");
  c.train.epsilon = r.real("epsilon");
  c.train.batch_size = r.integer("batch_size");
  c.train.max_epochs = r.integer("max_epochs");
  c.train.patience = r.integer("patience");
  c.train.dropout = r.real("dropout");
  c.train.seed = r.integer("seed");

  c.embedding_dim = r.integer("embedding_dim");
  c.hidden_dim = r.integer("hidden_dim");
  for (const std::string& w : split_list(r.text("filter_widths"))) {
    c.filter_widths.push_back(Reader::parse_integer("filter_widths", w));
  }
  c.feature_maps = r.integer("feature_maps");
  c.discriminator_hidden = r.integer("discriminator_hidden");
  c.min_count = r.integer("min_count");

  c.k = r.integer("k");
  if (r.text("attributes") != "auto") {
    c.attributes = attribute_list("attributes", r.text("attributes"), false);
  }
  c.attacker.hidden = r.integer("attacker_hidden");
  c.attacker.learning_rate = r.real("attacker_learning_rate");
  c.attacker.batch_size = r.integer("attacker_batch_size");
  c.attacker.max_epochs = r.integer("attacker_epochs");
  c.attacker.patience = r.integer("attacker_patience");
  c.attacker.holdout = r.real("attacker_holdout");
  c.attacker.seed = c.train.seed + seed_offset::kAttacker;

  c.format = r.text("format");
  if (c.format != "reviews" && c.format != "tagging") {
    throw ConfigError("key 'format': expected reviews or tagging, got '" + c.format + "'");
  }
  c.synth.n_train = r.integer("n_train");
  c.synth.n_test = r.integer("n_test");
  c.n_dev = r.integer("n_dev");
  c.synth.vocab_size = r.integer("vocab_size");
  c.synth.confound = r.real("confound");
  c.synth.flip_out_of_domain = r.boolean("flip_out_of_domain");
  c.synth.task_classes = r.integer("task_classes");
  c.synth.attribute = r.text("attribute");
  c.synth.length = r.integer("length");
  c.synth.attribute_tokens = r.integer("attribute_tokens");
  c.synth.task_tokens = r.integer("task_tokens");
  c.synth.task_signal = r.real("task_signal");
  c.synth.indicators_per_class = r.integer("indicators_per_class");
  c.synth.indicators_per_value = r.integer("indicators_per_value");
  c.synth.seed = c.train.seed;
  try {
    c.synth.attribute_arity = attribute_schema(c.synth.attribute).arity();
  } catch (const ConfigError&) {
    throw ConfigError("key 'attribute': unknown attribute '" + c.synth.attribute + "'");
  }

  if (command == Command::kTrain || command == Command::kCrossval) {
    c.train.validate();
  }
  return c;
}

std::string echo_config(Command command, const RawConfig& raw) {
  std::ostringstream out;
  out << "# veil " << command_name(command) << "\n";
  for (const auto& [key, value] : raw.values) {
    if (key == "out") {
      continue;
    }
    out << key << "=" << value << "\n";
  }
  return out.str();
}

nlohmann::json config_json(const RawConfig& raw) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : raw.values) {
    if (key != "out" && key != "json") {
      j[key] = value;
    }
  }
  return j;
}

}  // namespace veil::cli
