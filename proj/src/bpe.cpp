#include "smtabc/bpe.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace smtabc {
namespace {

// Length of the UTF-8 sequence starting at text[pos]; 0 if malformed.
std::size_t cp_len(std::string_view text, std::size_t pos) {
  auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(text[i]);
  };
  unsigned char b0 = byte(pos);
  std::size_t len;
  if (b0 < 0x80)
    len = 1;
  else if ((b0 & 0xE0) == 0xC0)
    len = 2;
  else if ((b0 & 0xF0) == 0xE0)
    len = 3;
  else if ((b0 & 0xF8) == 0xF0)
    len = 4;
  else
    return 0;
  if (pos + len > text.size()) return 0;
  for (std::size_t i = 1; i < len; ++i)
    if ((byte(pos + i) & 0xC0) != 0x80) return 0;
  return len;
}

long long pair_key(int l, int r) {
  return (static_cast<long long>(l) << 32) | static_cast<unsigned int>(r);
}

std::vector<int> to_ids(const Vocab& v, const std::string& text) {
  std::vector<int> ids;
  for (const auto& [sym, off] : split_symbols(text)) {
    auto it = v.token_to_id.find(sym);
    if (it == v.token_to_id.end())
      throw UnknownCharError(
          sym, off, "symbol \"" + sym + "\" at byte " + std::to_string(off) +
                        " is not in the vocabulary");
    ids.push_back(it->second);
  }
  return ids;
}

// One left-to-right pass replacing every (l, r) adjacency with `merged`.
void apply_merge(std::vector<int>& seq, int l, int r, int merged) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < seq.size();) {
    if (i + 1 < seq.size() && seq[i] == l && seq[i + 1] == r) {
      seq[w++] = merged;
      i += 2;
    } else {
      seq[w++] = seq[i++];
    }
  }
  seq.resize(w);
}

}  // namespace

void Vocab::rebuild_maps() {
  token_to_id.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i)
    token_to_id.emplace(tokens[i], static_cast<int>(i));
  pair_rank.clear();
  for (std::size_t m = 0; m < merges.size(); ++m) {
    auto li = token_to_id.find(merges[m].first);
    auto ri = token_to_id.find(merges[m].second);
    if (li == token_to_id.end() || ri == token_to_id.end())
      throw ConfigError("merge " + std::to_string(m) +
                        " references a token missing from the vocabulary");
    long long key = pair_key(li->second, ri->second);
    // First rank wins; a later duplicate pair could never fire anyway.
    pair_rank.emplace(key, static_cast<int>(m));
  }
}

std::vector<std::pair<std::string, std::size_t>> split_symbols(
    const std::string& text) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text.compare(pos, kSpaceSymbol.size(), kSpaceSymbol) == 0)
      throw UnknownCharError(
          std::string(kSpaceSymbol), pos,
          "literal \"" + std::string(kSpaceSymbol) + "\" at byte " +
              std::to_string(pos) + " collides with the space marker");
    if (text[pos] == ' ') {
      out.emplace_back(std::string(kSpaceSymbol), pos);
      ++pos;
      continue;
    }
    std::size_t len = cp_len(text, pos);
    if (len == 0)
      throw UnknownCharError(text.substr(pos, 1), pos,
                             "invalid UTF-8 byte at offset " +
                                 std::to_string(pos));
    out.emplace_back(text.substr(pos, len), pos);
    pos += len;
  }
  return out;
}

Vocab train_bpe(const std::vector<std::string>& corpus,
                std::size_t vocab_size) {
  if (corpus.empty()) throw ConfigError("training corpus is empty");

  std::vector<std::vector<std::string>> sym_seqs;
  sym_seqs.reserve(corpus.size());
  std::set<std::string> alphabet{std::string(kSpaceSymbol)};
  for (const auto& line : corpus) {
    std::vector<std::string> seq;
    for (auto& [sym, off] : split_symbols(line)) {
      alphabet.insert(sym);
      seq.push_back(std::move(sym));
    }
    sym_seqs.push_back(std::move(seq));
  }
  if (vocab_size < alphabet.size())
    throw ConfigError("vocab_size " + std::to_string(vocab_size) +
                      " is below the base alphabet size " +
                      std::to_string(alphabet.size()));

  Vocab v;
  v.tokens.assign(alphabet.begin(), alphabet.end());  // set order == lex
  v.rebuild_maps();

  std::vector<std::vector<int>> seqs;
  seqs.reserve(sym_seqs.size());
  for (const auto& ss : sym_seqs) {
    std::vector<int> ids;
    ids.reserve(ss.size());
    for (const auto& s : ss) ids.push_back(v.token_to_id.at(s));
    seqs.push_back(std::move(ids));
  }

  while (v.tokens.size() < vocab_size) {
    std::unordered_map<long long, long long> counts;
    for (const auto& seq : seqs)
      for (std::size_t i = 0; i + 1 < seq.size(); ++i)
        ++counts[pair_key(seq[i], seq[i + 1])];

    // Highest count wins; ties go to the lexicographically smallest
    // (left, right) token strings so training is deterministic.
    bool found = false;
    long long best_count = 0;
    int best_l = 0, best_r = 0;
    for (const auto& [key, count] : counts) {
      if (count < 2) continue;
      int l = static_cast<int>(key >> 32);
      int r = static_cast<int>(key & 0xFFFFFFFFLL);
      if (!found || count > best_count ||
          (count == best_count &&
           std::tie(v.tokens[l], v.tokens[r]) <
               std::tie(v.tokens[best_l], v.tokens[best_r]))) {
        found = true;
        best_count = count;
        best_l = l;
        best_r = r;
      }
    }
    if (!found) break;

    std::string merged_str = v.tokens[best_l] + v.tokens[best_r];
    int merged_id;
    auto existing = v.token_to_id.find(merged_str);
    if (existing != v.token_to_id.end()) {
      // Same string reachable through two merge paths; reuse the id so
      // ids stay dense and token strings unique.
      merged_id = existing->second;
    } else {
      merged_id = static_cast<int>(v.tokens.size());
      v.tokens.push_back(merged_str);
      v.token_to_id.emplace(merged_str, merged_id);
    }
    v.merges.emplace_back(v.tokens[best_l], v.tokens[best_r]);
    v.pair_rank.emplace(pair_key(best_l, best_r),
                        static_cast<int>(v.merges.size()) - 1);
    for (auto& seq : seqs) apply_merge(seq, best_l, best_r, merged_id);
  }
  return v;
}

std::vector<int> encode(const Vocab& v, const std::string& text) {
  std::vector<int> seq = to_ids(v, text);
  // Lowest-rank pair first reproduces the training replacement order.
  while (seq.size() >= 2) {
    int best_rank = -1;
    int best_l = 0, best_r = 0;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      auto it = v.pair_rank.find(pair_key(seq[i], seq[i + 1]));
      if (it != v.pair_rank.end() &&
          (best_rank < 0 || it->second < best_rank)) {
        best_rank = it->second;
        best_l = seq[i];
        best_r = seq[i + 1];
      }
    }
    if (best_rank < 0) break;
    apply_merge(seq, best_l, best_r,
                v.token_to_id.at(v.tokens[best_l] + v.tokens[best_r]));
  }
  return seq;
}

std::string decode(const Vocab& v, const std::vector<int>& ids) {
  std::string joined;
  for (long long id : ids) {
    if (id < 0 || id >= static_cast<long long>(v.tokens.size()))
      throw BadIdError(id, "token id " + std::to_string(id) +
                               " is outside 0.." +
                               std::to_string(v.tokens.size() - 1));
    joined += v.tokens[static_cast<std::size_t>(id)];
  }
  std::string out;
  out.reserve(joined.size());
  std::size_t pos = 0;
  while (pos < joined.size()) {
    if (joined.compare(pos, v.space_symbol.size(), v.space_symbol) == 0) {
      out += ' ';
      pos += v.space_symbol.size();
    } else {
      out += joined[pos++];
    }
  }
  return out;
}

std::string vocab_to_json(const Vocab& v) {
  nlohmann::json j;
  j["space_symbol"] = v.space_symbol;
  j["merges"] = nlohmann::json::array();
  for (const auto& [l, r] : v.merges)
    j["merges"].push_back(nlohmann::json::array({l, r}));
  j["tokens"] = v.tokens;
  return j.dump();
}

Vocab vocab_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("vocabulary JSON is malformed: ") +
                      e.what());
  }
  Vocab v;
  try {
    v.space_symbol = j.at("space_symbol").get<std::string>();
    for (const auto& m : j.at("merges")) {
      if (!m.is_array() || m.size() != 2)
        throw ConfigError("each merge must be a [left, right] pair");
      v.merges.emplace_back(m[0].get<std::string>(),
                            m[1].get<std::string>());
    }
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("vocabulary JSON is malformed: ") +
                      e.what());
  }
  v.rebuild_maps();
  if (v.token_to_id.size() != v.tokens.size())
    throw ConfigError("vocabulary contains duplicate token strings");
  return v;
}

}  // namespace smtabc
