#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "survml/config.hpp"
#include "survml/models.hpp"

namespace survml::app {

/// Settings shared by every verb: the flat config file with command-line
/// flags applied on top.
struct RunConfig {
  KeyValueConfig values;
  std::uint64_t seed = 42;
  std::filesystem::path out = "out";
  std::vector<Family> families;

  static RunConfig from(const KeyValueConfig& values);

  std::filesystem::path prep_dir() const { return out / "prep"; }
  std::filesystem::path hpo_dir() const { return out / "hpo"; }
  std::filesystem::path train_eval_dir() const { return out / "train_eval"; }
  std::filesystem::path explain_dir() const { return out / "explain"; }
  std::filesystem::path synth_dir() const { return out / "synth"; }
};

void cmd_prep(const RunConfig& cfg);
void cmd_synth(const RunConfig& cfg);
void cmd_hpo(const RunConfig& cfg);
void cmd_train_eval(const RunConfig& cfg);
void cmd_explain(const RunConfig& cfg);

/// Exit status for an exception escaping a command: 2 configuration,
/// 3 data, 4 training failure, 1 anything else.
int exit_code_for(const std::exception& e);

/// Full command-line entry point; returns the process exit status.
int run(int argc, char** argv);

}  // namespace survml::app
