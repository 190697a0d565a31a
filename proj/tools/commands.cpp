#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <variant>

#include "veil/checkpoint.hpp"
#include "veil/corpus.hpp"
#include "veil/dataset.hpp"
#include "veil/errors.hpp"
#include "veil/eval.hpp"
#include "veil/layers.hpp"
#include "veil/rng.hpp"
#include "veil/split.hpp"
#include "veil/synthetic.hpp"
#include "veil/vocab.hpp"

namespace veil::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Corpus = std::variant<TaggedCorpus, ReviewCorpus>;

void require(const std::string& value, const std::string& key, Command command) {
  if (value.empty()) {
    throw ConfigError(std::string("key '") + key + "' is required for " +
                      command_name(command));
  }
}

Corpus load_corpus(TaskKind task, const std::string& path) {
  if (task == TaskKind::kTagger) {
    return parse_tagging_corpus(fs::path(path));
  }
  return parse_review_corpus(fs::path(path));
}

std::size_t corpus_size(const Corpus& corpus) {
  return std::visit([](const auto& c) { return c.size(); }, corpus);
}

Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  if (const auto* tagged = std::get_if<TaggedCorpus>(&corpus)) {
    TaggedCorpus out;
    out.provenance = tagged->provenance;
    out.sentences = select(tagged->sentences, indices);
    return out;
  }
  const auto& reviews = std::get<ReviewCorpus>(corpus);
  ReviewCorpus out;
  out.provenance = reviews.provenance;
  out.locations = reviews.locations;
  out.reviews = select(reviews.reviews, indices);
  return out;
}

// Everything needed to turn raw text into model input; saved with the model.
struct Encoder {
  TaskKind task = TaskKind::kSentiment;
  Vocab vocab;
  std::vector<std::string> tagset;
  std::size_t pad_width = 0;

  std::vector<Instance> encode(const Corpus& corpus) const {
    if (task == TaskKind::kTagger) {
      return encode_tagged(std::get<TaggedCorpus>(corpus), vocab, tagset);
    }
    // Shorter reviews are padded so that the widest filter fits once.
    return encode_reviews(std::get<ReviewCorpus>(corpus), vocab, pad_width,
                          2 * pad_width + 1);
  }

  json to_json() const {
    return {{"task", task_name(task)},
            {"vocab", vocab.tokens()},
            {"min_count", vocab.min_count()},
            {"tagset", tagset},
            {"pad_width", pad_width}};
  }

  static Encoder from_json(const json& j) {
    try {
      Encoder e;
      e.task = parse_task(j.at("task").get<std::string>());
      e.vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>(),
                                   j.at("min_count").get<std::size_t>());
      e.tagset = j.at("tagset").get<std::vector<std::string>>();
      e.pad_width = j.at("pad_width").get<std::size_t>();
      return e;
    } catch (const json::exception& ex) {
      throw CheckpointError(std::string("checkpoint metadata lacks a usable encoder: ") +
                            ex.what());
    }
  }
};

Encoder fit_encoder(const RunConfig& c, const Corpus& train) {
  Encoder e;
  e.task = c.task;
  const auto lists = std::visit([](const auto& corpus) { return token_lists(corpus); }, train);
  e.vocab = Vocab::build(lists, c.min_count);
  if (c.task == TaskKind::kTagger) {
    e.tagset = std::get<TaggedCorpus>(train).tagset();
  } else if (!c.filter_widths.empty()) {
    e.pad_width = *std::max_element(c.filter_widths.begin(), c.filter_widths.end()) - 1;
  }
  return e;
}

// Standard attributes that every instance carries.
std::vector<std::string> present_attributes(const std::vector<Instance>& instances) {
  std::vector<std::string> out;
  if (instances.empty()) {
    return out;
  }
  for (const auto& schema : standard_attributes()) {
    const bool everywhere = std::all_of(instances.begin(), instances.end(), [&](const Instance& i) {
      return i.attributes.contains(schema.name);
    });
    if (everywhere) {
      out.push_back(schema.name);
    }
  }
  return out;
}

std::vector<std::string> report_attributes(const RunConfig& c,
                                           const std::vector<Instance>& instances) {
  return c.attributes.empty() ? present_attributes(instances) : c.attributes;
}

void check_task(const RunConfig& c, TaskKind model_task) {
  if (c.task_given && c.task != model_task) {
    throw ConfigError(std::string("key 'task': checkpoint holds a ") + task_name(model_task) +
                      " model, not " + task_name(c.task));
  }
}

fs::path output_path(const RunConfig& c, const std::string& name) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + c.out_dir + ": " + ec.message());
  }
  return fs::path(c.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
}

void write_report(const RunConfig& c, const std::string& name, const json& report) {
  if (!c.out_dir.empty()) {
    write_text(output_path(c, name), report.dump(2) + "\n");
  }
}

json metrics_json(const TaskMetrics& m, TaskKind task) {
  json j = {{"accuracy", m.accuracy}, {"units", m.units}};
  if (task == TaskKind::kTagger) {
    j["sentence_accuracy"] = m.sentence_accuracy;
  } else {
    j["macro_f1"] = m.macro_f1;
  }
  return j;
}

json group_json(const GroupReport& g) {
  json j = {{"attribute", g.attribute},
            {"accuracy", g.accuracy},
            {"count", g.count},
            {"delta", g.delta}};
  if (!g.sentence_accuracy.empty()) {
    j["sentence_accuracy"] = g.sentence_accuracy;
  }
  return j;
}

json attack_json(const AttackResult& r) {
  return {{"attribute", r.attribute},
          {"attacker_accuracy", r.attacker_accuracy},
          {"discriminator_accuracy",
           r.discriminator_accuracy ? json(*r.discriminator_accuracy) : json(nullptr)},
          {"majority_baseline", r.majority_baseline},
          {"n_train", r.n_train},
          {"n_test", r.n_test}};
}

json epoch_json(const EpochRecord& e) {
  return {{"epoch", e.epoch},
          {"task_loss", e.task_loss},
          {"adversarial_loss", e.adversarial_loss},
          {"dev_metric", e.dev_metric},
          {"dev_discriminator_accuracy", e.dev_discriminator_accuracy}};
}

struct Fitted {
  Encoder encoder;
  TrainResult result;
  std::size_t pretrained_rows = 0;
  std::size_t n_pretrain = 0;
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
};

Fitted fit(const RunConfig& c, const Corpus& train_corpus, const Corpus* dev_corpus,
           std::uint64_t seed) {
  // Pretraining shares the vocabulary and tagset, so the encoder is fitted on
  // both corpora together.
  std::optional<TaggedCorpus> pretrain_corpus;
  if (!c.pretrain_path.empty()) {
    if (c.task != TaskKind::kTagger) {
      throw ConfigError("key 'pretrain': only the tagger can be pretrained");
    }
    pretrain_corpus = parse_tagging_corpus(fs::path(c.pretrain_path));
  }
  Corpus vocabulary_source = train_corpus;
  if (pretrain_corpus) {
    auto& merged = std::get<TaggedCorpus>(vocabulary_source).sentences;
    merged.insert(merged.end(), pretrain_corpus->sentences.begin(),
                  pretrain_corpus->sentences.end());
  }
  Fitted f{fit_encoder(c, vocabulary_source), TrainResult{}, 0, 0, 0, 0};
  const auto train_set = f.encoder.encode(train_corpus);
  const auto dev_set = dev_corpus ? f.encoder.encode(*dev_corpus) : std::vector<Instance>{};
  f.n_train = train_set.size();
  f.n_dev = dev_set.size();
  if (train_set.empty()) {
    throw DataError("training corpus is empty");
  }

  ModelSpec spec;
  spec.task = c.task;
  spec.vocab_size = f.encoder.vocab.size();
  if (c.task == TaskKind::kTagger) {
    spec.num_classes = f.encoder.tagset.size();
  }
  spec.embedding_dim = c.embedding_dim;
  spec.hidden_total = c.hidden_dim;
  spec.filter_widths = c.filter_widths;
  spec.feature_maps = c.feature_maps;
  spec.discriminator_hidden = c.discriminator_hidden;
  for (const std::string& name : c.adv) {
    spec.attributes[name] = attribute_schema(name).arity();
    attribute_labels(train_set, name);  // DataError if some instance lacks it
    if (!dev_set.empty()) {
      attribute_labels(dev_set, name);
    }
  }

  TrainConfig config = c.train;
  config.seed = seed;
  JointModel model = JointModel::create(spec, seed);
  if (!c.pretrained_path.empty()) {
    f.pretrained_rows =
        load_pretrained_embeddings(c.pretrained_path, f.encoder.vocab, model.embeddings());
  }
  if (pretrain_corpus) {
    // Baseline pass over the pretraining corpus; its task parameters then
    // seed the joint model. Discriminators start fresh.
    const auto pretrain_set = f.encoder.encode(Corpus(*pretrain_corpus));
    f.n_pretrain = pretrain_set.size();
    ModelSpec base_spec = spec;
    base_spec.attributes.clear();
    TrainConfig base_config = config;
    base_config.lambdas.clear();
    base_config.seed = seed + seed_offset::kPretrain;
    JointModel base = JointModel::create(base_spec, seed);
    auto copy_task = [](JointModel& from, JointModel& to) {
      const auto src = from.task_parameters();
      const auto dst = to.task_parameters();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
    };
    copy_task(model, base);  // carries any loaded word vectors
    TrainResult pretrained = train(std::move(base), pretrain_set, {}, base_config);
    copy_task(pretrained.model, model);
  }
  f.result = train(std::move(model), train_set, dev_set, config);
  return f;
}

struct Loaded {
  Encoder encoder;
  JointModel model;
};

Loaded load_model(const RunConfig& c) {
  auto checkpoint = load_checkpoint(c.checkpoint_path);
  Encoder encoder = Encoder::from_json(checkpoint.metadata.value("encoder", json::object()));
  check_task(c, checkpoint.model.spec.task);
  return {std::move(encoder), std::move(checkpoint.model)};
}

// ---------------------------------------------------------------------------
// Table rendering

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void print(std::ostream& out) const {
    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        // First column left-aligned, numbers right-aligned.
        const std::string pad(width[i] - cells[i].size(), ' ');
        out << (i == 0 ? cells[i] + pad : pad + cells[i]) << (i + 1 < cells.size() ? "  " : "\n");
      }
    };
    line(header);
    std::vector<std::string> rule;
    for (std::size_t w : width) rule.push_back(std::string(w, '-'));
    line(rule);
    for (const auto& row : rows) line(row);
  }
};

std::string num(const json& value) {
  if (value.is_null()) return "-";
  if (value.is_number_integer() || value.is_number_unsigned()) return value.dump();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value.get<double>());
  return buf;
}

void print_groups(std::ostream& out, const json& groups) {
  for (const auto& g : groups) {
    Table t{{g["attribute"].get<std::string>(), "accuracy", "units"}, {}};
    for (const auto& [name, acc] : g["accuracy"].items()) {
      t.rows.push_back({name, num(acc), num(g["count"][name])});
    }
    t.rows.push_back({"delta", num(g["delta"]), ""});
    out << "\n";
    t.print(out);
  }
}

void print_attacks(std::ostream& out, const json& results) {
  Table t{{"attribute", "attacker", "discriminator", "majority", "n_train", "n_test"}, {}};
  for (const auto& r : results) {
    t.rows.push_back({r["attribute"].get<std::string>(), num(r["attacker_accuracy"]),
                      num(r["discriminator_accuracy"]), num(r["majority_baseline"]),
                      num(r["n_train"]), num(r["n_test"])});
  }
  t.print(out);
}

}  // namespace

json cmd_train(const RunConfig& c, const RawConfig& raw) {
  require(c.train_path, "train", c.command);
  require(c.out_dir, "out", c.command);
  const Corpus train_corpus = load_corpus(c.task, c.train_path);
  std::optional<Corpus> dev_corpus;
  if (!c.dev_path.empty()) {
    dev_corpus = load_corpus(c.task, c.dev_path);
  }
  Fitted f = fit(c, train_corpus, dev_corpus ? &*dev_corpus : nullptr, c.train.seed);

  const json metadata = {{"config", config_json(raw)}, {"encoder", f.encoder.to_json()}};
  const fs::path checkpoint = output_path(c, "model.veil");
  save_checkpoint(checkpoint, f.result.model, metadata);

  std::string history;
  for (const auto& e : f.result.history.epochs) {
    history += epoch_json(e).dump() + "\n";
  }
  write_text(output_path(c, "history.jsonl"), history);
  write_text(output_path(c, "config.txt"), echo_config(c.command, raw));

  json report = {{"command", "train"},
                 {"task", task_name(c.task)},
                 {"n_train", f.n_train},
                 {"n_dev", f.n_dev},
                 {"vocab_size", f.encoder.vocab.size()},
                 {"adv", c.adv},
                 {"lambdas", c.train.lambdas},
                 {"epochs_run", f.result.history.epochs.size()},
                 {"best_epoch", f.result.history.best_epoch},
                 {"best_dev_metric", f.result.history.best_dev_metric},
                 {"pretrained_rows", f.pretrained_rows},
                 {"n_pretrain", f.n_pretrain},
                 {"parameter_hash", parameter_hash(f.result.model)}};
  write_report(c, "train.json", report);
  return report;
}

json cmd_eval(const RunConfig& c) {
  require(c.checkpoint_path, "checkpoint", c.command);
  require(c.test_path, "test", c.command);
  Loaded m = load_model(c);
  const auto test = m.encoder.encode(load_corpus(m.model.spec.task, c.test_path));
  json report = {{"command", "eval"},
                 {"task", task_name(m.model.spec.task)},
                 {"n_test", test.size()},
                 {"metrics", metrics_json(evaluate_task(m.model, test), m.model.spec.task)},
                 {"groups", json::array()},
                 {"discriminators", json::object()}};
  for (const std::string& name : report_attributes(c, test)) {
    report["groups"].push_back(group_json(group_accuracy(m.model, test, name)));
  }
  for (const auto& [name, head] : m.model.discriminators) {
    if (std::all_of(test.begin(), test.end(),
                    [&](const Instance& i) { return i.attributes.contains(name); })) {
      report["discriminators"][name] = discriminator_accuracy(m.model, test, name);
    }
  }
  write_report(c, "eval.json", report);
  return report;
}

json cmd_attack(const RunConfig& c) {
  require(c.checkpoint_path, "checkpoint", c.command);
  require(c.train_path, "train", c.command);
  require(c.test_path, "test", c.command);
  Loaded m = load_model(c);
  const auto train_set = m.encoder.encode(load_corpus(m.model.spec.task, c.train_path));
  const auto test_set = m.encoder.encode(load_corpus(m.model.spec.task, c.test_path));
  const auto attributes = report_attributes(c, train_set);
  if (attributes.empty()) {
    throw DataError("no protected attribute is present on every instance");
  }
  json report = {{"command", "attack"},
                 {"task", task_name(m.model.spec.task)},
                 {"results", json::array()}};
  for (const std::string& name : attributes) {
    report["results"].push_back(attack_json(attack(m.model, train_set, test_set, name, c.attacker)));
  }
  write_report(c, "attack.json", report);
  return report;
}

json cmd_crossval(const RunConfig& c) {
  require(c.data_path, "data", c.command);
  const Corpus corpus = load_corpus(c.task, c.data_path);
  const SplitPlan plan = kfold_split(corpus_size(corpus), c.k, c.train.seed + seed_offset::kSplit);

  json folds = json::array();
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const Fold& fold = plan.folds[f];
    const Corpus train_corpus = subset(corpus, fold.train);
    const Corpus dev_corpus = subset(corpus, fold.dev);
    // Fold f trains with seed + f, so folds draw distinct streams.
    Fitted fitted = fit(c, train_corpus, &dev_corpus, c.train.seed + f);
    JointModel& model = fitted.result.model;
    const auto train_set = fitted.encoder.encode(train_corpus);
    const auto test_set = fitted.encoder.encode(subset(corpus, fold.test));

    json entry = {{"fold", f},
                  {"n_train", fold.train.size()},
                  {"n_dev", fold.dev.size()},
                  {"n_test", fold.test.size()},
                  {"best_epoch", fitted.result.history.best_epoch},
                  {"metrics", metrics_json(evaluate_task(model, test_set), c.task)},
                  {"groups", json::array()},
                  {"leakage", json::array()}};
    AttackerConfig attacker = c.attacker;
    attacker.seed += f;
    const auto attributes = report_attributes(c, test_set);
    for (const std::string& name : attributes) {
      entry["groups"].push_back(group_json(group_accuracy(model, test_set, name)));
    }
    for (const std::string& name : report_attributes(c, train_set)) {
      if (std::find(attributes.begin(), attributes.end(), name) != attributes.end()) {
        entry["leakage"].push_back(attack_json(attack(model, train_set, test_set, name, attacker)));
      }
    }
    folds.push_back(entry);
  }

  // Means over folds, accumulated in fold order.
  const double k = static_cast<double>(folds.size());
  auto accumulate = [k](json& slot, const std::string& key, const json& value) {
    slot[key] = (slot.contains(key) ? slot[key].get<double>() : 0.0) + value.get<double>() / k;
  };
  json mean = {{"groups", json::object()}, {"leakage", json::object()}};
  for (const auto& fold : folds) {
    accumulate(mean, "accuracy", fold["metrics"]["accuracy"]);
    if (c.task == TaskKind::kSentiment) {
      accumulate(mean, "macro_f1", fold["metrics"]["macro_f1"]);
    }
    for (const auto& g : fold["groups"]) {
      json& slot = mean["groups"][g["attribute"].get<std::string>()];
      for (const auto& [name, acc] : g["accuracy"].items()) {
        accumulate(slot["accuracy"], name, acc);
      }
      accumulate(slot, "delta", g["delta"]);
    }
    for (const auto& r : fold["leakage"]) {
      json& slot = mean["leakage"][r["attribute"].get<std::string>()];
      accumulate(slot, "attacker_accuracy", r["attacker_accuracy"]);
      accumulate(slot, "majority_baseline", r["majority_baseline"]);
    }
  }

  json report = {{"command", "crossval"},
                 {"task", task_name(c.task)},
                 {"k", c.k},
                 {"adv", c.adv},
                 {"lambdas", c.train.lambdas},
                 {"folds", folds},
                 {"mean", mean}};
  write_report(c, "crossval.json", report);
  return report;
}

json cmd_synth(const RunConfig& c) {
  require(c.out_dir, "out", c.command);
  const SyntheticData data = generate_synthetic(c.synth);
  std::vector<std::pair<std::string, const std::vector<SyntheticInstance>*>> splits{
      {"train", &data.train}, {"test", &data.test}};
  SyntheticData dev;
  if (c.n_dev > 0) {
    SyntheticSpec dev_spec = c.synth;
    dev_spec.seed = c.synth.seed + seed_offset::kSyntheticDev;
    dev_spec.flip_out_of_domain = false;
    dev_spec.n_train = c.n_dev;
    dev = generate_synthetic(dev_spec);
    splits.insert(splits.begin() + 1, {"dev", &dev.train});
  }

  const std::string ext = c.format == "reviews" ? ".jsonl" : ".txt";
  json files = json::object();
  json association = json::object();
  for (const auto& [name, instances] : splits) {
    const fs::path path = output_path(c, name + ext);
    if (c.format == "reviews") {
      write_review_corpus(path, to_review_corpus(*instances));
    } else {
      write_tagging_corpus(path, to_tagged_corpus(*instances));
    }
    files[name] = path.filename().string();
    association[name] = confound_association(*instances, c.synth.attribute_arity);
  }

  const SyntheticSpec& s = c.synth;
  json report = {{"command", "synth"},
                 {"format", c.format},
                 {"seed", s.seed},
                 {"confound", s.confound},
                 {"flip_out_of_domain", s.flip_out_of_domain},
                 {"attribute", s.attribute},
                 {"attribute_arity", s.attribute_arity},
                 {"task_classes", s.task_classes},
                 {"n_train", s.n_train},
                 {"n_test", s.n_test},
                 {"n_dev", c.n_dev},
                 {"vocab_size", s.vocab_size},
                 {"length", s.length},
                 {"attribute_tokens", s.attribute_tokens},
                 {"task_tokens", s.task_tokens},
                 {"task_signal", s.task_signal},
                 {"indicators_per_class", s.indicators_per_class},
                 {"indicators_per_value", s.indicators_per_value},
                 {"files", files},
                 {"measured_association", association}};
  write_text(output_path(c, "manifest.json"), report.dump(2) + "\n");
  return report;
}

void print_table(std::ostream& out, Command command, const json& r) {
  switch (command) {
    case Command::kTrain: {
      Table t{{"field", "value"}, {}};
      for (const char* key : {"task", "n_train", "n_dev", "vocab_size", "epochs_run", "best_epoch",
                              "best_dev_metric", "pretrained_rows", "n_pretrain"}) {
        t.rows.push_back({key, r[key].is_string() ? r[key].get<std::string>() : num(r[key])});
      }
      for (const auto& [name, lambda] : r["lambdas"].items()) {
        t.rows.push_back({"lambda." + name, lambda.dump()});
      }
      t.print(out);
      return;
    }
    case Command::kEval: {
      Table t{{"metric", "value"}, {}};
      for (const auto& [name, value] : r["metrics"].items()) t.rows.push_back({name, num(value)});
      for (const auto& [name, value] : r["discriminators"].items()) {
        t.rows.push_back({"discriminator." + name, num(value)});
      }
      t.print(out);
      print_groups(out, r["groups"]);
      return;
    }
    case Command::kAttack:
      print_attacks(out, r["results"]);
      return;
    case Command::kCrossval: {
      // One row per fold plus the mean: task accuracy, then per attribute the
      // group accuracies, their gap and the attacker's accuracy.
      std::vector<std::string> header{"fold", "accuracy"};
      std::vector<std::pair<std::string, std::string>> group_columns;
      const json& mean = r["mean"];
      for (const auto& [attr, slot] : mean["groups"].items()) {
        for (const auto& [group, acc] : slot["accuracy"].items()) {
          header.push_back(attr + ":" + group);
          group_columns.emplace_back(attr, group);
        }
        header.push_back("delta:" + attr);
      }
      for (const auto& [attr, slot] : mean["leakage"].items()) header.push_back("attack:" + attr);

      Table t{header, {}};
      auto row_for = [&](const std::string& label, const json& accuracy,
                         const std::map<std::string, json>& groups,
                         const std::map<std::string, json>& leakage) {
        std::vector<std::string> row{label, num(accuracy)};
        for (const auto& [attr, slot] : mean["groups"].items()) {
          for (const auto& [group, unused] : slot["accuracy"].items()) {
            const auto it = groups.find(attr);
            row.push_back(it == groups.end() ? "-" : num(it->second["accuracy"].value(group, json())));
          }
          const auto it = groups.find(attr);
          row.push_back(it == groups.end() ? "-" : num(it->second["delta"]));
        }
        for (const auto& [attr, unused] : mean["leakage"].items()) {
          const auto it = leakage.find(attr);
          row.push_back(it == leakage.end() ? "-" : num(it->second["attacker_accuracy"]));
        }
        t.rows.push_back(row);
      };
      for (const auto& fold : r["folds"]) {
        std::map<std::string, json> groups, leakage;
        for (const auto& g : fold["groups"]) groups[g["attribute"]] = g;
        for (const auto& l : fold["leakage"]) leakage[l["attribute"]] = l;
        row_for(std::to_string(fold["fold"].get<std::size_t>()), fold["metrics"]["accuracy"], groups,
                leakage);
      }
      std::map<std::string, json> groups, leakage;
      for (const auto& [attr, slot] : mean["groups"].items()) groups[attr] = slot;
      for (const auto& [attr, slot] : mean["leakage"].items()) leakage[attr] = slot;
      row_for("mean", mean["accuracy"], groups, leakage);
      t.print(out);
      return;
    }
    case Command::kSynth: {
      Table t{{"split", "file", "association"}, {}};
      for (const auto& [name, file] : r["files"].items()) {
        t.rows.push_back({name, file.get<std::string>(), num(r["measured_association"][name])});
      }
      t.print(out);
      return;
    }
  }
}

}  // namespace veil::cli
