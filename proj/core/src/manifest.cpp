#include "das/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "das/error.hpp"
#include "das/prng.hpp"
#include "json.hpp"

namespace das {

namespace {

using nlohmann::json;

const char* init_kind_name(PyramidInit::Kind k) {
  return k == PyramidInit::Kind::Zeros ? "zeros" : "gaussian";
}

PyramidInit::Kind init_kind_from(const std::string& s) {
  if (s == "zeros") return PyramidInit::Kind::Zeros;
  if (s == "gaussian") return PyramidInit::Kind::Gaussian;
  throw Error("config: unknown init kind '" + s + "'");
}

const char* grad_mode_name(GradMode m) {
  return m == GradMode::RawMean ? "raw" : "normalized";
}

GradMode grad_mode_from(const std::string& s) {
  if (s == "raw") return GradMode::RawMean;
  if (s == "normalized") return GradMode::NormalizedMean;
  throw Error("config: unknown grad mode '" + s + "'");
}

json config_json(const RunConfig& cfg) {
  json j;
  j["steps"] = cfg.steps;
  j["learning_rate"] = cfg.learning_rate;
  j["resolutions"] = cfg.resolutions;
  j["shift_max"] = cfg.shift_max;
  j["noise_std"] = cfg.noise_std;
  j["batch"] = cfg.batch;
  j["out_size"] = cfg.out_size;
  j["seed"] = cfg.seed;
  j["init"] = init_kind_name(cfg.init.kind);
  j["init_sigma"] = cfg.init.sigma;
  j["grad_mode"] = grad_mode_name(cfg.grad_mode);
  j["augment"] = cfg.augment;
  return j;
}

RunConfig config_from(const json& j) {
  RunConfig cfg;
  cfg.steps = j.at("steps").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.resolutions = j.at("resolutions").get<std::vector<int>>();
  cfg.shift_max = j.at("shift_max").get<int>();
  cfg.noise_std = j.at("noise_std").get<double>();
  cfg.batch = j.at("batch").get<int>();
  cfg.out_size = j.at("out_size").get<int>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.init.kind = init_kind_from(j.at("init").get<std::string>());
  cfg.init.sigma = j.at("init_sigma").get<double>();
  cfg.grad_mode = grad_mode_from(j.at("grad_mode").get<std::string>());
  cfg.augment = j.at("augment").get<bool>();
  return cfg;
}

}  // namespace

std::string config_to_json(const RunConfig& cfg) {
  return config_json(cfg).dump(2);
}

RunConfig config_from_json(const std::string& text) {
  return config_from(json::parse(text));
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config_json(config);
  j["encoders"] = json::array();
  for (const EncoderDescriptor& e : encoders) {
    json je;
    je["name"] = e.name;
    je["weight_path"] = e.weight_path;
    je["weight_checksum"] = e.weight_checksum;
    j["encoders"].push_back(je);
  }
  j["artifacts"] = json::array();
  for (const auto& [role, path] : artifacts) {
    j["artifacts"].push_back({{"role", role}, {"path", path}});
  }
  j["timestamp"] = timestamp;
  j["seconds"] = seconds;
  return j.dump(2);
}

RunManifest RunManifest::from_json(const std::string& text) {
  json j = json::parse(text);
  RunManifest m;
  m.version = j.at("version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config = config_from(j.at("config"));
  for (const json& je : j.at("encoders")) {
    EncoderDescriptor e;
    e.name = je.at("name").get<std::string>();
    e.weight_path = je.at("weight_path").get<std::string>();
    e.weight_checksum = je.at("weight_checksum").get<std::string>();
    m.encoders.push_back(std::move(e));
  }
  for (const json& ja : j.at("artifacts")) {
    m.artifacts.emplace_back(ja.at("role").get<std::string>(),
                             ja.at("path").get<std::string>());
  }
  m.timestamp = j.at("timestamp").get<std::string>();
  m.seconds = j.at("seconds").get<double>();
  return m;
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), "manifest: cannot write " + path);
  out << to_json() << "\n";
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "manifest: cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "checksum: cannot read " + path);
  uint64_t h = 0xCBF29CE484222325ull;
  char chunk[4096];
  while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(chunk[i]);
      h *= 0x100000001B3ull;
    }
  }
  return h;
}

std::string hex_u64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_trace_jsonl(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  require(out.good(), "trace: cannot write " + path);
  for (const StepRecord& s : trace.steps) {
    json j;
    j["step"] = s.step;
    j["objective"] = s.objective;
    j["encoder_scores"] = s.encoder_scores;
    j["grad_norm"] = s.grad_norm;
    j["component_grad_norms"] = s.component_grad_norms;
    out << j.dump() << "\n";
  }
}

}  // namespace das
