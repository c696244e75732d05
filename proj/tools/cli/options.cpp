#include "options.hpp"

#include <cstdlib>
#include <fstream>

namespace das::cli {

namespace {

std::string trim(const std::string& s) {
  const size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

RunConfig CommonOptions::to_run_config() const {
  RunConfig cfg;
  cfg.steps = steps;
  cfg.learning_rate = learning_rate;
  cfg.resolutions = resolutions;
  cfg.shift_max = shift_max;
  cfg.noise_std = noise_std;
  cfg.batch = batch;
  cfg.out_size = out_size;
  cfg.seed = seed;
  if (init == "zeros") {
    cfg.init.kind = PyramidInit::Kind::Zeros;
  } else if (init == "gaussian") {
    cfg.init.kind = PyramidInit::Kind::Gaussian;
  } else {
    throw ConfigError("config: init must be 'zeros' or 'gaussian', got '" +
                      init + "'");
  }
  cfg.init.sigma = init_sigma;
  if (grad_mode == "raw") {
    cfg.grad_mode = GradMode::RawMean;
  } else if (grad_mode == "normalized") {
    cfg.grad_mode = GradMode::NormalizedMean;
  } else {
    throw ConfigError("config: grad-mode must be 'raw' or 'normalized', got '" +
                      grad_mode + "'");
  }
  cfg.augment = !no_augment;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::pair<std::string, double> split_weight_suffix(const std::string& spec,
                                                   double fallback_weight) {
  const size_t colon = spec.rfind(':');
  if (colon != std::string::npos && colon + 1 < spec.size()) {
    const std::string suffix = spec.substr(colon + 1);
    char* end = nullptr;
    const double w = std::strtod(suffix.c_str(), &end);
    if (end != suffix.c_str() && *end == '\0') {
      return {spec.substr(0, colon), w};
    }
  }
  return {spec, fallback_weight};
}

void apply_config_file(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw ConfigError("config: cannot read config file '" + path + "'");
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#' || entry[0] == ';') continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected key=value, got '" + entry + "'");
    }
    const std::string key = trim(entry.substr(0, eq));
    std::string value = trim(entry.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    CLI::Option* option = cmd.get_option_no_throw("--" + key);
    if (option == nullptr || key == "config") {
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
    if (option->count() > 0) continue;  // the command line set it already
    option->add_result(value);
    option->run_callback();
  }
}

void attach_common(CLI::App& app, CommonOptions& opt) {
  app.add_option("--config", opt.config_file,
                 "Config file with key=value lines (explicit flags override)");
  app.add_option("--steps", opt.steps, "Ascent steps");
  app.add_option("--lr", opt.learning_rate, "Learning rate");
  app.add_option("--resolutions", opt.resolutions,
                 "Pyramid resolutions, ascending (default: powers of two)")
      ->delimiter(',');
  app.add_option("--shift", opt.shift_max, "Max augmentation shift s");
  app.add_option("--noise", opt.noise_std, "Augmentation noise std");
  app.add_option("--batch", opt.batch, "Augmented views per step");
  app.add_option("--out-size", opt.out_size, "Output/encoder image size");
  app.add_option("--seed", opt.seed, "Master seed");
  app.add_option("--init", opt.init, "Component init: zeros|gaussian");
  app.add_option("--init-sigma", opt.init_sigma, "Gaussian init std");
  app.add_option("--grad-mode", opt.grad_mode,
                 "Ensemble gradient mode: raw|normalized");
  app.add_flag("--no-augment", opt.no_augment,
               "Single noise-free centered view per step");
  app.add_option("--encoder", opt.encoders,
                 "Encoders: toy | toy:0xHEX | clip:DIR (repeat or comma list)")
      ->delimiter(',');
  app.add_option("--out", opt.out_prefix, "Artifact path prefix");
  app.add_flag("--save-canvas", opt.save_canvas,
               "Also write the full canvas PNG");
  app.add_flag("--spectrum", opt.emit_spectrum,
               "Also write a spectrum report for the final image");
}

void attach_targets(CLI::App& app, TargetOptions& opt) {
  app.add_option("--prompt", opt.prompts, "Text prompt, weight 1 (repeatable)");
  app.add_option("--prompt-weight", opt.weighted_prompts,
                 "Weighted prompt 'text:weight' (repeatable)");
  app.add_option("--target-embedding", opt.embedding_files,
                 "Embedding JSON target 'path[:weight]' (repeatable)");
  app.add_option("--target-image", opt.image_files,
                 "Image-derived target 'path[:weight]' (repeatable)");
}

}  // namespace das::cli
