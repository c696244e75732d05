#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace das::clip {

// Minimal safetensors support: an 8-byte little-endian header length, a JSON
// header mapping tensor names to {dtype, shape, data_offsets}, then the raw
// data buffer. Only F32 and F64 tensors are handled; everything is widened
// to double on read.
class SafeTensors {
 public:
  struct Entry {
    std::string dtype;
    std::vector<int64_t> shape;
    uint64_t begin = 0;  // offsets into the data buffer
    uint64_t end = 0;

    int64_t element_count() const;
  };

  static SafeTensors load(const std::string& path);

  bool contains(const std::string& name) const;
  const Entry& entry(const std::string& name) const;  // throws if absent
  std::vector<std::string> names() const;

  // Reads a tensor as doubles, validating the expected shape when given.
  std::vector<double> tensor(const std::string& name) const;
  std::vector<double> tensor(const std::string& name,
                             const std::vector<int64_t>& expect_shape) const;

 private:
  std::map<std::string, Entry> entries_;
  std::vector<uint8_t> data_;
};

// Writes F64 tensors (name -> shape, values) in safetensors layout; used by
// the converter path and test fixtures.
void write_safetensors(
    const std::string& path,
    const std::vector<std::pair<std::string,
                                std::pair<std::vector<int64_t>,
                                          std::vector<double>>>>& tensors);

}  // namespace das::clip
