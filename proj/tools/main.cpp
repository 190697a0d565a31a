// veil command-line entry point. Flags and config-file keys share one
// namespace: --learning_rate on the command line is learning_rate= in a file.
#include <algorithm>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_config.hpp"
#include "veil/errors.hpp"

namespace {

using veil::cli::Command;

struct Subcommand {
  Command command;
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::map<std::string, CLI::Option*> options;
};

const char* describe(Command command) {
  switch (command) {
    case Command::kTrain: return "train a tagger or sentiment model, with or without adversaries";
    case Command::kEval: return "task accuracy, per-group accuracy and gaps of a checkpoint";
    case Command::kAttack: return "train fresh attackers on frozen representations";
    case Command::kCrossval: return "k-fold train and evaluate with leakage probes";
    case Command::kSynth: return "write a confounded synthetic corpus and its manifest";
  }
  return "";
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error: " << kind << ": " << one_line(message) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veil: adversarial removal of demographic signal from text representations"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);  // subcommands copy the formatter

  std::vector<Subcommand> subs;
  subs.reserve(5);
  for (Command command : {Command::kTrain, Command::kEval, Command::kAttack, Command::kCrossval,
                          Command::kSynth}) {
    subs.push_back(Subcommand{command});
    Subcommand& sub = subs.back();
    sub.app = app.add_subcommand(veil::cli::command_name(command), describe(command));
    sub.app->add_option("--config", sub.config_path,
                        "key=value file; command-line flags override its values");
    for (const veil::cli::KeyInfo* key : veil::cli::keys_for(command)) {
      const std::string flag = "--" + key->name;
      if (key->is_flag) {
        sub.options[key->name] = sub.app->add_flag(flag, sub.switches[key->name], key->help);
      } else {
        sub.options[key->name] = sub.app->add_option(flag, sub.values[key->name], key->help)
                                     ->default_str(key->default_value);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    return fail("UsageError", e.what(), 2);
  }

  for (Subcommand& sub : subs) {
    if (!sub.app->parsed()) {
      continue;
    }
    try {
      std::map<std::string, std::string> cli_values;
      for (const auto& [name, option] : sub.options) {
        if (option->count() == 0) {
          continue;
        }
        cli_values[name] = sub.switches.contains(name) ? (sub.switches[name] ? "true" : "false")
                                                       : sub.values[name];
      }
      std::map<std::string, std::string> file_values;
      if (!sub.config_path.empty()) {
        file_values = veil::cli::parse_config_file(sub.config_path);
      }
      const auto raw = veil::cli::layer_config(file_values, cli_values);
      const auto config = veil::cli::resolve(sub.command, raw);

      nlohmann::json report;
      switch (sub.command) {
        case Command::kTrain: report = veil::cli::cmd_train(config, raw); break;
        case Command::kEval: report = veil::cli::cmd_eval(config); break;
        case Command::kAttack: report = veil::cli::cmd_attack(config); break;
        case Command::kCrossval: report = veil::cli::cmd_crossval(config); break;
        case Command::kSynth: report = veil::cli::cmd_synth(config); break;
      }
      if (config.json) {
        std::cout << report.dump(2) << "\n";
      } else {
        veil::cli::print_table(std::cout, sub.command, report);
      }
      return 0;
    } catch (const veil::Error& e) {
      return fail(e.kind(), e.what(), 1);
    } catch (const nlohmann::json::exception& e) {
      return fail("DataError", e.what(), 1);
    } catch (const std::exception& e) {
      return fail("InternalError", e.what(), 1);
    }
  }
  return fail("UsageError", "no command given", 2);
}
