#pragma once

#include <map>
#include <string>
#include <vector>

namespace das::clip {

// Byte-level BPE tokenizer in the CLIP style: text is lowercased and
// whitespace-cleaned, split into words, mapped byte-by-byte into printable
// stand-in characters, closed with an end-of-word marker, then merged by
// rank. The vocabulary is derived from the merge list:
//   256 byte symbols, 256 byte+</w> symbols, one entry per merge, then
//   <|startoftext|> and <|endoftext|>.
class Tokenizer {
 public:
  // Merge list file: first line is a header, each following non-empty line
  // is "left right".
  static Tokenizer load(const std::string& merges_path);

  int vocab_size() const { return static_cast<int>(id_of_.size()); }
  int sot_id() const { return sot_id_; }
  int eot_id() const { return eot_id_; }

  // Token ids for the cleaned text, without specials.
  std::vector<int> tokenize(const std::string& text) const;

  // <|startoftext|> + tokens + <|endoftext|>, zero-padded to `context`.
  // Throws when the sequence does not fit.
  std::vector<int> encode(const std::string& text, int context) const;

 private:
  std::map<std::string, int> id_of_;
  std::map<std::pair<std::string, std::string>, int> merge_rank_;
  std::vector<std::string> byte_symbol_;  // 256 stand-in characters
  int sot_id_ = 0;
  int eot_id_ = 0;
};

}  // namespace das::clip
