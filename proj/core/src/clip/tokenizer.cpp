#include "das/clip/tokenizer.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include "das/error.hpp"

namespace das::clip {

namespace {

std::string codepoint_utf8(int cp) {
  std::string s;
  if (cp < 0x80) {
    s.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return s;
}

// GPT-2 byte-to-symbol table: printable latin-1 bytes keep their codepoint,
// the rest are moved to 256+n. Construction order defines symbol ids, so it
// must not change.
std::vector<std::pair<int, int>> byte_symbol_table() {
  std::vector<int> bs;
  for (int b = '!'; b <= '~'; ++b) bs.push_back(b);
  for (int b = 0xA1; b <= 0xAC; ++b) bs.push_back(b);
  for (int b = 0xAE; b <= 0xFF; ++b) bs.push_back(b);
  std::vector<bool> used(256, false);
  for (int b : bs) used[b] = true;
  std::vector<std::pair<int, int>> table;  // byte, codepoint
  for (int b : bs) table.emplace_back(b, b);
  int n = 0;
  for (int b = 0; b < 256; ++b) {
    if (!used[b]) table.emplace_back(b, 256 + n++);
  }
  return table;
}

bool ascii_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Lowercase + collapse whitespace runs to single spaces + trim.
std::string clean(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// ASCII-oriented version of the CLIP word pattern: contractions, letter
// runs (non-ASCII bytes count as letters), single digits, and runs of other
// non-space characters.
std::vector<std::string> split_words(const std::string& text) {
  static const char* kContractions[] = {"'s", "'t", "'re", "'ve",
                                        "'m", "'ll", "'d"};
  std::vector<std::string> words;
  size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = text[i];
    if (c == ' ') {
      ++i;
      continue;
    }
    if (c == '\'') {
      bool matched = false;
      for (const char* suffix : kContractions) {
        const size_t len = std::char_traits<char>::length(suffix);
        if (text.compare(i, len, suffix) == 0) {
          words.emplace_back(suffix);
          i += len;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (ascii_letter(c)) {
      size_t j = i;
      while (j < text.size() && ascii_letter(text[j])) ++j;
      words.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (ascii_digit(c)) {
      words.emplace_back(1, static_cast<char>(c));
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size() && text[j] != ' ' &&
           !ascii_letter(text[j]) && !ascii_digit(text[j])) {
      ++j;
    }
    words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

}  // namespace

Tokenizer Tokenizer::load(const std::string& merges_path) {
  std::ifstream in(merges_path);
  require(in.good(), "tokenizer: cannot open " + merges_path);

  Tokenizer tok;
  tok.byte_symbol_.resize(256);
  std::vector<std::string> vocab;
  for (const auto& [byte, cp] : byte_symbol_table()) {
    tok.byte_symbol_[byte] = codepoint_utf8(cp);
    vocab.push_back(tok.byte_symbol_[byte]);
  }
  for (int i = 0; i < 256; ++i) vocab.push_back(vocab[i] + "</w>");

  std::string line;
  std::getline(in, line);  // header line
  int rank = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t space = line.find(' ');
    require(space != std::string::npos && space > 0 && space + 1 < line.size(),
            "tokenizer: bad merge line '" + line + "'");
    const std::string left = line.substr(0, space);
    const std::string right = line.substr(space + 1);
    tok.merge_rank_[{left, right}] = rank++;
    vocab.push_back(left + right);
  }
  vocab.push_back("<|startoftext|>");
  vocab.push_back("<|endoftext|>");

  for (size_t i = 0; i < vocab.size(); ++i) {
    tok.id_of_[vocab[i]] = static_cast<int>(i);
  }
  tok.sot_id_ = static_cast<int>(vocab.size()) - 2;
  tok.eot_id_ = static_cast<int>(vocab.size()) - 1;
  return tok;
}

std::vector<int> Tokenizer::tokenize(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& word : split_words(clean(text))) {
    std::vector<std::string> symbols;
    for (unsigned char c : word) symbols.push_back(byte_symbol_[c]);
    symbols.back() += "</w>";

    while (symbols.size() >= 2) {
      int best_rank = std::numeric_limits<int>::max();
      size_t best = 0;
      for (size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto it = merge_rank_.find({symbols[i], symbols[i + 1]});
        if (it != merge_rank_.end() && it->second < best_rank) {
          best_rank = it->second;
          best = i;
        }
      }
      if (best_rank == std::numeric_limits<int>::max()) break;
      const std::string first = symbols[best];
      const std::string second = symbols[best + 1];
      std::vector<std::string> merged;
      for (size_t i = 0; i < symbols.size();) {
        if (i + 1 < symbols.size() && symbols[i] == first &&
            symbols[i + 1] == second) {
          merged.push_back(first + second);
          i += 2;
        } else {
          merged.push_back(symbols[i]);
          i += 1;
        }
      }
      symbols = std::move(merged);
    }

    for (const std::string& s : symbols) {
      auto it = id_of_.find(s);
      require(it != id_of_.end(), "tokenizer: symbol not in vocabulary");
      ids.push_back(it->second);
    }
  }
  return ids;
}

std::vector<int> Tokenizer::encode(const std::string& text, int context) const {
  require(context >= 2, "tokenizer: context must be >= 2");
  std::vector<int> tokens = tokenize(text);
  require(static_cast<int>(tokens.size()) + 2 <= context,
          "tokenizer: prompt exceeds context length " +
              std::to_string(context));
  std::vector<int> out;
  out.reserve(context);
  out.push_back(sot_id_);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.push_back(eot_id_);
  out.resize(context, 0);
  return out;
}

}  // namespace das::clip
