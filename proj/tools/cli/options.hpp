#pragma once

#include <string>
#include <vector>

#include "CLI11.hpp"
#include "das/error.hpp"
#include "das/optimizer.hpp"
#include "das/tasks.hpp"

namespace das::cli {

// Option errors exit with code 2 (configuration), unlike runtime failures
// which exit with 1.
struct ConfigError : Error {
  using Error::Error;
};

// Flag-level mirror of RunConfig plus artifact options. Defaults match the
// reference configuration; a config file (key=value lines, loaded with
// --config) fills unset fields and explicit flags override the file.
struct CommonOptions {
  std::string config_file;
  int steps = 100;
  double learning_rate = 0.2;
  std::vector<int> resolutions;
  int shift_max = 56;
  double noise_std = 0.2;
  int batch = 32;
  int out_size = 224;
  uint64_t seed = 0;
  std::string init = "gaussian";
  double init_sigma = 0.01;
  std::string grad_mode = "raw";
  bool no_augment = false;

  std::vector<std::string> encoders = {"toy"};
  std::string out_prefix = "das_run";
  bool save_canvas = false;
  bool emit_spectrum = false;

  RunConfig to_run_config() const;  // throws ConfigError naming the field
};

// Target selection shared by generate/modify/inpaint/ablate.
struct TargetOptions {
  std::vector<std::string> prompts;            // weight 1
  std::vector<std::string> weighted_prompts;   // "text:weight"
  std::vector<std::string> embedding_files;    // "path[:weight]"
  std::vector<std::string> image_files;        // "path[:weight]"

  bool empty() const {
    return prompts.empty() && weighted_prompts.empty() &&
           embedding_files.empty() && image_files.empty();
  }
};

// Splits "body:weight" on the last colon when the suffix parses as a
// number; otherwise returns fallback_weight.
std::pair<std::string, double> split_weight_suffix(const std::string& spec,
                                                   double fallback_weight);

void attach_common(CLI::App& app, CommonOptions& opt);
void attach_targets(CLI::App& app, TargetOptions& opt);

// Applies key=value lines from `path` to every option of `cmd` the command
// line left unset, so explicit flags keep precedence. Keys are the long
// option names without dashes; unknown keys are ConfigErrors.
void apply_config_file(CLI::App& cmd, const std::string& path);

}  // namespace das::cli
