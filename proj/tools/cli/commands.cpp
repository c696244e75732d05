#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "das/clip/backend.hpp"
#include "das/diagnostics.hpp"
#include "das/manifest.hpp"
#include "das/png_io.hpp"
#include "das/tasks.hpp"
#include "das/toy_encoder.hpp"
#include "json.hpp"
#include "options.hpp"

namespace das::cli {

namespace {

struct EncoderSet {
  std::vector<std::unique_ptr<Encoder>> owned;
  std::vector<const Encoder*> ptrs;
  std::vector<EncoderDescriptor> descriptors;
};

uint64_t parse_hex_seed(const std::string& text) {
  char* end = nullptr;
  const uint64_t v = std::strtoull(text.c_str(), &end, 16);
  if (text.empty() || end == nullptr || *end != '\0') {
    throw ConfigError("config: bad encoder seed '" + text +
                      "' (expected hex)");
  }
  return v;
}

// Weight directories resolve against $DAS_WEIGHTS when the literal path does
// not exist: "clip" alone means the env directory itself, "clip:name" falls
// back to $DAS_WEIGHTS/name.
std::string resolve_weight_dir(const std::string& spec) {
  const char* env = std::getenv("DAS_WEIGHTS");
  if (spec.empty()) {
    if (env == nullptr || *env == '\0') {
      throw ConfigError(
          "config: encoder 'clip' needs a directory (clip:DIR) or the "
          "DAS_WEIGHTS environment variable");
    }
    return env;
  }
  if (std::filesystem::is_directory(spec)) return spec;
  if (env != nullptr && *env != '\0') {
    const std::string nested = std::string(env) + "/" + spec;
    if (std::filesystem::is_directory(nested)) return nested;
  }
  return spec;  // let the loader report the missing directory
}

EncoderSet make_encoders(const std::vector<std::string>& names,
                         const RunConfig& cfg) {
  if (names.empty()) throw ConfigError("config: at least one encoder required");
  EncoderSet set;
  for (const std::string& name : names) {
    if (name == "toy") {
      set.owned.push_back(std::make_unique<ToyEncoder>(cfg.out_size));
      set.descriptors.push_back({set.owned.back()->name(), "", ""});
    } else if (name.rfind("toy:", 0) == 0) {
      set.owned.push_back(std::make_unique<ToyEncoder>(
          cfg.out_size, parse_hex_seed(name.substr(4))));
      set.descriptors.push_back({set.owned.back()->name(), "", ""});
    } else if (name == "clip" || name.rfind("clip:", 0) == 0) {
      const std::string dir =
          resolve_weight_dir(name == "clip" ? "" : name.substr(5));
      auto enc = clip::ClipEncoder::load(dir);
      if (enc->input_size() != cfg.out_size) {
        throw ConfigError("config: out_size " + std::to_string(cfg.out_size) +
                          " does not match encoder input size " +
                          std::to_string(enc->input_size()) + " of " + name);
      }
      const std::string weights = dir + "/weights.safetensors";
      set.descriptors.push_back(
          {enc->name(), weights, hex_u64(file_checksum(weights))});
      set.owned.push_back(std::move(enc));
    } else {
      throw ConfigError("config: unknown encoder '" + name +
                        "' (expected toy, toy:0xHEX, or clip:DIR)");
    }
  }
  for (const auto& e : set.owned) set.ptrs.push_back(e.get());
  return set;
}

std::vector<TargetSet> resolve_targets(const TargetOptions& opt,
                                       const EncoderSet& encoders) {
  if (opt.empty()) {
    throw ConfigError(
        "config: at least one target required "
        "(--prompt / --prompt-weight / --target-embedding / --target-image)");
  }
  const size_t n = encoders.ptrs.size();
  std::vector<TargetSet> sets(n);

  std::vector<Prompt> prompts;
  for (const std::string& text : opt.prompts) prompts.push_back({text, 1.0});
  for (const std::string& spec : opt.weighted_prompts) {
    const auto [text, weight] = split_weight_suffix(spec, 1.0);
    prompts.push_back({text, weight});
  }
  if (!prompts.empty()) {
    std::vector<TargetSet> t = targets_from_prompts(encoders.ptrs, prompts);
    for (size_t i = 0; i < n; ++i) {
      sets[i].insert(sets[i].end(), t[i].begin(), t[i].end());
    }
  }
  for (const std::string& spec : opt.embedding_files) {
    const auto [path, weight] = split_weight_suffix(spec, 1.0);
    std::vector<TargetSet> t = targets_from_embedding(
        encoders.ptrs, read_embedding(path), weight, path);
    for (size_t i = 0; i < n; ++i) sets[i].push_back(std::move(t[i][0]));
  }
  for (const std::string& spec : opt.image_files) {
    const auto [path, weight] = split_weight_suffix(spec, 1.0);
    std::vector<TargetSet> t = targets_from_image(
        encoders.ptrs, read_png_square(path), weight, path);
    for (size_t i = 0; i < n; ++i) sets[i].push_back(std::move(t[i][0]));
  }
  return sets;
}

// Collects artifacts and finishes with the manifest, which echoes the run
// closely enough to replay it.
class ArtifactWriter {
 public:
  ArtifactWriter(const std::string& command, const CommonOptions& opt,
                 const RunConfig& cfg, const EncoderSet& encoders,
                 const std::vector<std::string>& argv)
      : opt_(opt), start_(std::chrono::steady_clock::now()) {
    manifest_.command = command;
    manifest_.argv = argv;
    manifest_.config = cfg;
    manifest_.encoders = encoders.descriptors;
  }

  std::string path(const char* suffix) const { return opt_.out_prefix + suffix; }

  void add(const std::string& role, const std::string& file) {
    manifest_.artifacts.emplace_back(role, file);
  }

  void write_trace(const RunTrace& trace) {
    write_png(path(".png"), trace.final_image);
    add("image", path(".png"));
    if (opt_.save_canvas) {
      write_png(path("_canvas.png"), trace.final_canvas);
      add("canvas", path("_canvas.png"));
    }
    write_trace_jsonl(path("_trace.jsonl"), trace);
    add("trace", path("_trace.jsonl"));
    if (opt_.emit_spectrum) {
      if (trace.final_image.width >= 32) {
        std::ofstream out(path("_spectrum.json"));
        out << power_spectrum(trace.final_image).to_json() << "\n";
        add("spectrum", path("_spectrum.json"));
      } else {
        std::cerr << "spectrum: skipped, output smaller than 32x32\n";
      }
    }
  }

  void finish() {
    manifest_.timestamp = utc_timestamp();
    manifest_.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    manifest_.write(path("_manifest.json"));
  }

 private:
  const CommonOptions& opt_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

struct TaskFlags {
  std::string image;
  std::string embedding;
  std::string content;
  std::string style;
  std::string mask;
  std::string text;
  double style_weight = 1.0;
  double content_weight = 0.0;
  double gram_content_weight = 1.0;
  std::vector<double> gram_style_weights;
  std::string csv;
  std::string spectrum_image;
};

void require_flag(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw ConfigError(std::string("config: ") + flag + " is required");
  }
}

void cmd_generate(const CommonOptions& opt, const TargetOptions& tgt,
                  const std::vector<std::string>& argv) {
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  const std::vector<TargetSet> targets = resolve_targets(tgt, encoders);
  ArtifactWriter artifacts("generate", opt, cfg, encoders, argv);
  const RunTrace trace = generate(cfg, encoders.ptrs, targets);
  artifacts.write_trace(trace);
  artifacts.finish();
}

void cmd_reconstruct(const CommonOptions& opt, const TaskFlags& flags,
                     const std::vector<std::string>& argv) {
  if (flags.image.empty() == flags.embedding.empty()) {
    throw ConfigError(
        "config: reconstruct needs exactly one of --image or --embedding");
  }
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  ArtifactWriter artifacts("reconstruct", opt, cfg, encoders, argv);

  ReconstructResult result =
      flags.image.empty()
          ? reconstruct_from_embedding(cfg, encoders.ptrs,
                                       read_embedding(flags.embedding))
          : reconstruct(cfg, encoders.ptrs, read_png_square(flags.image));

  artifacts.write_trace(result.trace);
  nlohmann::json report;
  report["final_cosines"] = result.final_cosines;
  report["input_dims"] = result.input_dims;
  report["embed_dims"] = result.embed_dims;
  report["compression_ratio"] = result.ratio();
  {
    std::ofstream out(artifacts.path("_report.json"));
    out << report.dump(2) << "\n";
  }
  artifacts.add("report", artifacts.path("_report.json"));
  artifacts.finish();
  std::cout << report.dump(2) << "\n";
}

void cmd_modify(const CommonOptions& opt, const TargetOptions& tgt,
                const TaskFlags& flags, const std::vector<std::string>& argv) {
  require_flag(flags.image, "--image");
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  const std::vector<TargetSet> targets = resolve_targets(tgt, encoders);
  ArtifactWriter artifacts("modify", opt, cfg, encoders, argv);
  const RunTrace trace =
      modify(cfg, encoders.ptrs, targets, read_png_square(flags.image));
  artifacts.write_trace(trace);
  artifacts.finish();
}

void cmd_style(const CommonOptions& opt, const TaskFlags& flags,
               const std::vector<std::string>& argv) {
  require_flag(flags.content, "--content");
  require_flag(flags.style, "--style");
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  ArtifactWriter artifacts("style", opt, cfg, encoders, argv);
  const RunTrace trace = style_transfer_embed(
      cfg, encoders.ptrs, read_png_square(flags.content),
      read_png_square(flags.style), flags.style_weight, flags.content_weight);
  artifacts.write_trace(trace);
  artifacts.finish();
}

void cmd_gram_style(const CommonOptions& opt, const TaskFlags& flags,
                    const std::vector<std::string>& argv) {
  require_flag(flags.content, "--content");
  require_flag(flags.style, "--style");
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  if (encoders.ptrs.size() != 1) {
    throw ConfigError("config: gram-style uses exactly one encoder");
  }
  const Encoder& encoder = *encoders.ptrs[0];
  if (!encoder.has_feature_maps()) {
    throw ConfigError("config: encoder '" + encoder.name() +
                      "' has no feature maps for gram-style");
  }
  const Image content = read_png_square(flags.content);

  GramWeights weights;
  weights.content = flags.gram_content_weight;
  const size_t stages =
      encoder.feature_maps(area_resample(content, encoder.input_size())).size();
  if (flags.gram_style_weights.empty()) {
    weights.style.assign(stages, 1.0);
  } else if (flags.gram_style_weights.size() == stages) {
    weights.style = flags.gram_style_weights;
  } else {
    throw ConfigError("config: --style-weights needs " +
                      std::to_string(stages) + " values");
  }

  ArtifactWriter artifacts("gram-style", opt, cfg, encoders, argv);
  const RunTrace trace = style_transfer_gram(
      cfg, encoder, content, read_png_square(flags.style), weights);
  artifacts.write_trace(trace);
  artifacts.finish();
}

void cmd_inpaint(const CommonOptions& opt, const TargetOptions& tgt,
                 const TaskFlags& flags, const std::vector<std::string>& argv) {
  require_flag(flags.image, "--image");
  require_flag(flags.mask, "--mask");
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  const std::vector<TargetSet> targets = resolve_targets(tgt, encoders);

  Image mask = luminance(read_png_square(flags.mask));
  if (mask.width != cfg.out_size) {
    throw ConfigError("config: mask must be " + std::to_string(cfg.out_size) +
                      "x" + std::to_string(cfg.out_size) + ", got " +
                      std::to_string(mask.width) + "x" +
                      std::to_string(mask.height));
  }

  ArtifactWriter artifacts("inpaint", opt, cfg, encoders, argv);
  const RunTrace trace =
      inpaint(cfg, encoders.ptrs, targets, read_png_square(flags.image),
              expand_mask_to_canvas(mask, cfg));
  artifacts.write_trace(trace);
  artifacts.finish();
}

void cmd_spectrum(const TaskFlags& flags) {
  const SpectrumReport report =
      power_spectrum(read_png_square(flags.spectrum_image));
  std::cout << report.to_json() << "\n";
  if (!flags.csv.empty()) report.write_csv(flags.csv);
}

void cmd_ablate(const CommonOptions& opt, const TargetOptions& tgt,
                const std::vector<std::string>& argv) {
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  const std::vector<TargetSet> targets = resolve_targets(tgt, encoders);
  ArtifactWriter artifacts("ablate", opt, cfg, encoders, argv);
  const AblationReport report =
      ablation_report(standard_ablation(cfg), encoders.ptrs, targets);
  std::cout << report.to_table();
  {
    std::ofstream out(artifacts.path("_ablation.json"));
    out << report.to_json() << "\n";
  }
  artifacts.add("ablation", artifacts.path("_ablation.json"));
  artifacts.finish();
}

void cmd_embed(const CommonOptions& opt, const TaskFlags& flags) {
  if (flags.image.empty() == flags.text.empty()) {
    throw ConfigError("config: embed needs exactly one of --image or --text");
  }
  const RunConfig cfg = opt.to_run_config();
  const EncoderSet encoders = make_encoders(opt.encoders, cfg);
  if (encoders.ptrs.size() != 1) {
    throw ConfigError("config: embed uses exactly one encoder");
  }
  const Encoder& encoder = *encoders.ptrs[0];

  Embedding embedding;
  if (!flags.image.empty()) {
    Image image = read_png_square(flags.image);
    if (image.width != encoder.input_size()) {
      image = area_resample(image, encoder.input_size());
    }
    embedding = encoder.embed_image(image);
  } else {
    if (!encoder.has_text()) {
      throw ConfigError("config: encoder '" + encoder.name() +
                        "' has no text tower");
    }
    embedding = encoder.embed_text(flags.text);
  }

  const std::string out = opt.out_prefix + "_embedding.json";
  write_embedding(out, embedding.values);
  std::cout << "wrote " << out << " (dim " << embedding.dim() << ")\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> argv_copy(argv, argv + argc);

  CLI::App app{"Image synthesis by direct gradient ascent on image encoders"};
  app.require_subcommand(1);

  CommonOptions opt;
  TargetOptions tgt;
  TaskFlags flags;

  CLI::App* generate = app.add_subcommand("generate", "Synthesize from targets");
  attach_common(*generate, opt);
  attach_targets(*generate, tgt);

  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "Recover an image from its embedding");
  attach_common(*reconstruct, opt);
  reconstruct->add_option("--image", flags.image, "Reference image (PNG)");
  reconstruct->add_option("--embedding", flags.embedding,
                          "Stored embedding JSON");

  CLI::App* modify =
      app.add_subcommand("modify", "Ascend from a source image toward targets");
  attach_common(*modify, opt);
  attach_targets(*modify, tgt);
  modify->add_option("--image", flags.image, "Source image (PNG)");

  CLI::App* style = app.add_subcommand(
      "style", "Move a content image toward a style image's embedding");
  attach_common(*style, opt);
  style->add_option("--content", flags.content, "Content image (PNG)");
  style->add_option("--style", flags.style, "Style image (PNG)");
  style->add_option("--style-weight", flags.style_weight,
                    "Weight of the style embedding target");
  style->add_option("--content-weight", flags.content_weight,
                    "Weight of the content-preservation target (0 = off)");

  CLI::App* gram = app.add_subcommand(
      "gram-style", "Feature/Gram style transfer over encoder feature maps");
  attach_common(*gram, opt);
  gram->add_option("--content", flags.content, "Content image (PNG)");
  gram->add_option("--style", flags.style, "Style image (PNG)");
  gram->add_option("--content-weight", flags.gram_content_weight,
                   "Weight of the feature-match content term");
  gram->add_option("--style-weights", flags.gram_style_weights,
                   "Per-stage Gram weights (comma list)")
      ->delimiter(',');

  CLI::App* inpaint =
      app.add_subcommand("inpaint", "Fill the masked region toward targets");
  attach_common(*inpaint, opt);
  attach_targets(*inpaint, tgt);
  inpaint->add_option("--image", flags.image, "Source image (PNG)");
  inpaint->add_option("--mask", flags.mask,
                      "Mask PNG at out_size (white = free region)");

  CLI::App* spectrum =
      app.add_subcommand("spectrum", "Radial power-spectrum slope report");
  spectrum->add_option("image", flags.spectrum_image, "Image to analyze (PNG)")
      ->required();
  spectrum->add_option("--csv", flags.csv, "Also write radial bins as CSV");

  CLI::App* ablate = app.add_subcommand(
      "ablate", "Pixel vs pixel+augment vs full ascent comparison");
  attach_common(*ablate, opt);
  attach_targets(*ablate, tgt);

  CLI::App* embed =
      app.add_subcommand("embed", "Write an image or text embedding JSON");
  attach_common(*embed, opt);
  embed->add_option("--image", flags.image, "Image to embed (PNG)");
  embed->add_option("--text", flags.text, "Text to embed");

  try {
    app.parse(argc, argv);

    CLI::App* active = app.get_subcommands().at(0);
    // The config file fills in whatever flags the command line left unset.
    // CLI11 only reads config files for the app parse() ran on, so this is
    // done by hand after parsing.
    if (!opt.config_file.empty()) {
      apply_config_file(*active, opt.config_file);
    }

    const std::string command = active->get_name();
    if (command == "generate") {
      cmd_generate(opt, tgt, argv_copy);
    } else if (command == "reconstruct") {
      cmd_reconstruct(opt, flags, argv_copy);
    } else if (command == "modify") {
      cmd_modify(opt, tgt, flags, argv_copy);
    } else if (command == "style") {
      cmd_style(opt, flags, argv_copy);
    } else if (command == "gram-style") {
      cmd_gram_style(opt, flags, argv_copy);
    } else if (command == "inpaint") {
      cmd_inpaint(opt, tgt, flags, argv_copy);
    } else if (command == "spectrum") {
      cmd_spectrum(flags);
    } else if (command == "ablate") {
      cmd_ablate(opt, tgt, argv_copy);
    } else {
      cmd_embed(opt, flags);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace das::cli
