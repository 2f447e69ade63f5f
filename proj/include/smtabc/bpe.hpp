#pragma once

/*
 * Byte-pair encoding over raw text. No normalization, no dummy prefix:
 * the only rewrite is space -> the marker "<n>", applied before symbol
 * splitting and undone by decode. Input that already contains the literal
 * marker is rejected, which keeps decode(encode(x)) == x unconditional.
 * Symbols are UTF-8 code points; each corpus entry is one sequence and
 * pairs never cross entry boundaries.
 */

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smtabc/error.hpp"

namespace smtabc {

class TokenizerError : public Error {
 public:
  explicit TokenizerError(const std::string& msg) : Error(msg) {}
};

// Input symbol that cannot be represented: a code point outside the
// trained alphabet, an invalid UTF-8 byte, or the reserved marker.
class UnknownCharError : public TokenizerError {
 public:
  UnknownCharError(std::string symbol, std::size_t offset,
                   const std::string& msg)
      : TokenizerError(msg), symbol(std::move(symbol)), offset(offset) {}
  std::string symbol;
  std::size_t offset;  // byte offset into the original text
};

class BadIdError : public TokenizerError {
 public:
  BadIdError(long long id, const std::string& msg)
      : TokenizerError(msg), id(id) {}
  long long id;
};

inline constexpr std::string_view kSpaceSymbol = "<n>";

struct Vocab {
  std::string space_symbol{kSpaceSymbol};
  std::vector<std::pair<std::string, std::string>> merges;
  std::vector<std::string> tokens;  // index == id; unique strings

  std::unordered_map<std::string, int> token_to_id;
  // (left id, right id) -> merge rank; rebuilt on load
  std::unordered_map<long long, int> pair_rank;

  std::size_t size() const { return tokens.size(); }
  void rebuild_maps();
};

Vocab train_bpe(const std::vector<std::string>& corpus,
                std::size_t vocab_size);
std::vector<int> encode(const Vocab& v, const std::string& text);
std::string decode(const Vocab& v, const std::vector<int>& ids);

std::string vocab_to_json(const Vocab& v);
Vocab vocab_from_json(const std::string& json_text);

// Symbol stream the tokenizer operates on: code points with spaces
// already replaced by the marker, paired with byte offsets.
std::vector<std::pair<std::string, std::size_t>> split_symbols(
    const std::string& text);

}  // namespace smtabc
