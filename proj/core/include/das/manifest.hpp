#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "das/optimizer.hpp"

namespace das {

// Identity of one encoder in a run: its registry name plus, for file-backed
// encoders, the weight path and a checksum of the file bytes.
struct EncoderDescriptor {
  std::string name;
  std::string weight_path;
  std::string weight_checksum;  // fnv1a64 of the file, hex; empty if none
};

// Everything needed to reproduce a run bit-exactly on the same build: the
// subcommand, the original argv, the resolved config (seed included), the
// encoder identities, and where the artifacts were written. The timestamp
// and duration are informational and excluded from reproducibility checks.
struct RunManifest {
  std::string version = "1";
  std::string command;
  std::vector<std::string> argv;
  RunConfig config;
  std::vector<EncoderDescriptor> encoders;
  std::vector<std::pair<std::string, std::string>> artifacts;  // role, path
  std::string timestamp;  // ISO-8601 UTC
  double seconds = 0.0;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);

// FNV-1a over the raw bytes of a file; throws if the file cannot be read.
uint64_t file_checksum(const std::string& path);
std::string hex_u64(uint64_t v);

std::string utc_timestamp();

// One JSON object per step: step, objective, encoder_scores, grad_norm,
// component_grad_norms.
void write_trace_jsonl(const std::string& path, const RunTrace& trace);

}  // namespace das
