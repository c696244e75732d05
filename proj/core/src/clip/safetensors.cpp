#include "das/clip/safetensors.hpp"

#include <cstring>
#include <fstream>

#include "das/error.hpp"
#include "json.hpp"

namespace das::clip {

namespace {

using nlohmann::json;

uint64_t read_le_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void write_le_u64(std::ofstream& out, uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

}  // namespace

int64_t SafeTensors::Entry::element_count() const {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

SafeTensors SafeTensors::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "safetensors: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  require(bytes.size() >= 8, "safetensors: " + path + " is truncated");

  const uint64_t header_len = read_le_u64(bytes.data());
  require(8 + header_len <= bytes.size(),
          "safetensors: header overruns file in " + path);

  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
  } catch (const json::exception& e) {
    throw Error("safetensors: bad header in " + path + ": " + e.what());
  }

  SafeTensors st;
  st.data_.assign(bytes.begin() + 8 + header_len, bytes.end());
  for (const auto& [name, meta] : header.items()) {
    if (name == "__metadata__") continue;
    Entry e;
    e.dtype = meta.at("dtype").get<std::string>();
    require(e.dtype == "F32" || e.dtype == "F64",
            "safetensors: unsupported dtype " + e.dtype + " for " + name);
    e.shape = meta.at("shape").get<std::vector<int64_t>>();
    const auto offs = meta.at("data_offsets").get<std::vector<uint64_t>>();
    require(offs.size() == 2 && offs[0] <= offs[1] &&
                offs[1] <= st.data_.size(),
            "safetensors: bad data offsets for " + name);
    e.begin = offs[0];
    e.end = offs[1];
    const uint64_t elem = e.dtype == "F32" ? 4 : 8;
    require(e.end - e.begin ==
                static_cast<uint64_t>(e.element_count()) * elem,
            "safetensors: size/shape mismatch for " + name);
    st.entries_.emplace(name, std::move(e));
  }
  return st;
}

bool SafeTensors::contains(const std::string& name) const {
  return entries_.count(name) > 0;
}

const SafeTensors::Entry& SafeTensors::entry(const std::string& name) const {
  auto it = entries_.find(name);
  require(it != entries_.end(), "safetensors: missing tensor " + name);
  return it->second;
}

std::vector<std::string> SafeTensors::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::vector<double> SafeTensors::tensor(const std::string& name) const {
  const Entry& e = entry(name);
  const int64_t n = e.element_count();
  std::vector<double> out(static_cast<size_t>(n));
  const uint8_t* src = data_.data() + e.begin;
  if (e.dtype == "F32") {
    for (int64_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, src + 4 * i, 4);
      out[static_cast<size_t>(i)] = f;
    }
  } else {
    std::memcpy(out.data(), src, static_cast<size_t>(n) * 8);
  }
  return out;
}

std::vector<double> SafeTensors::tensor(
    const std::string& name, const std::vector<int64_t>& expect_shape) const {
  const Entry& e = entry(name);
  require(e.shape == expect_shape, "safetensors: unexpected shape for " + name);
  return tensor(name);
}

void write_safetensors(
    const std::string& path,
    const std::vector<std::pair<std::string,
                                std::pair<std::vector<int64_t>,
                                          std::vector<double>>>>& tensors) {
  nlohmann::json header;
  uint64_t offset = 0;
  for (const auto& [name, payload] : tensors) {
    const auto& [shape, values] = payload;
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    require(static_cast<size_t>(n) == values.size(),
            "safetensors: shape/value mismatch for " + name);
    nlohmann::json meta;
    meta["dtype"] = "F64";
    meta["shape"] = shape;
    meta["data_offsets"] = {offset, offset + values.size() * 8};
    header[name] = meta;
    offset += values.size() * 8;
  }
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "safetensors: cannot write " + path);
  write_le_u64(out, header_text.size());
  out.write(header_text.data(),
            static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, payload] : tensors) {
    out.write(reinterpret_cast<const char*>(payload.second.data()),
              static_cast<std::streamsize>(payload.second.size() * 8));
  }
  require(out.good(), "safetensors: write failed for " + path);
}

}  // namespace das::clip
