#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "veil/eval.hpp"
#include "veil/models.hpp"
#include "veil/synthetic.hpp"
#include "veil/training.hpp"

namespace veil::cli {

enum class Command { kTrain, kEval, kAttack, kCrossval, kSynth };

const char* command_name(Command command);

// One configuration key. The command-line flag is "--" + name.
struct KeyInfo {
  std::string name;
  std::string default_value;
  std::string help;
  std::vector<Command> commands;  // where the flag is offered
  bool is_flag = false;           // boolean switch without a value
};

const std::vector<KeyInfo>& config_keys();
const KeyInfo* find_key(const std::string& name);
std::vector<const KeyInfo*> keys_for(Command command);

// Raw key -> value text after layering defaults, file and command line.
struct RawConfig {
  std::map<std::string, std::string> values;
  std::map<std::string, std::string> origin;  // "default", "file", "cli"
  bool explicitly_set(const std::string& key) const;
};

// Flat key=value lines; '#' starts a comment, blank lines are skipped.
// Unknown keys and duplicate keys are ConfigErrors naming the line.
std::map<std::string, std::string> parse_config_text(std::istream& in,
                                                     const std::string& source);
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

// Precedence: cli > file > defaults.
RawConfig layer_config(const std::map<std::string, std::string>& file_values,
                       const std::map<std::string, std::string>& cli_values);

struct RunConfig {
  Command command = Command::kTrain;
  TaskKind task = TaskKind::kSentiment;
  bool task_given = false;

  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string data_path;
  std::string checkpoint_path;
  std::string pretrained_path;
  std::string pretrain_path;  // tagger only
  std::string out_dir;
  bool json = false;

  std::vector<std::string> adv;  // attributes with an adversarial head
  TrainConfig train;             // lambdas keyed by adv attribute
  std::size_t embedding_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<std::size_t> filter_widths;
  std::size_t feature_maps = 0;
  std::size_t discriminator_hidden = 0;
  std::size_t min_count = 1;

  std::size_t k = 10;
  // Attributes to report groups and leakage for; empty means every standard
  // attribute that all instances carry.
  std::vector<std::string> attributes;
  AttackerConfig attacker;

  SyntheticSpec synth;
  std::string format = "reviews";
  std::size_t n_dev = 0;
};

// Typed view of a layered config. Conversion errors name the key.
RunConfig resolve(Command command, const RawConfig& raw);

// key=value lines for every key except out and config, sorted by key.
// Feeding the text back through --config reproduces the run.
std::string echo_config(Command command, const RawConfig& raw);

// The values that shape a model (the echo minus json), stored in checkpoint
// metadata.
nlohmann::json config_json(const RawConfig& raw);

}  // namespace veil::cli
