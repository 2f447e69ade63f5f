#pragma once

/*
 * ABC notation parsing for the multi-track subset used by the toolkit.
 *
 * A tune is a block of header lines (X:, T:, K:, %%directives, ...)
 * followed by one or more tracks. Multi-track tunes introduce each track
 * with a "V:" line; single-track tunes go straight into the music body.
 * Track bodies are split into bars on barline tokens with longest match
 * first, so ":|" is never read as ":" + "|". Text inside "..." chord
 * symbols or !...! decorations is never split on.
 *
 * Parsing keeps every byte: bar contents hold whatever sits between
 * barlines (including newlines and inline fields), and whatever follows a
 * track's last barline is kept as trailing text, so serialize(parse(text))
 * reproduces the input exactly.
 */

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smtabc/error.hpp"

namespace smtabc {

enum class BarLine {
  Regular,      // |
  Double,       // ||
  Final,        // |]
  Opening,      // [|
  RepeatStart,  // |:
  RepeatEnd,    // :|
  RepeatBoth,   // ::
};

std::string_view barline_token(BarLine b);

// Longest barline token starting at text[pos] in the normal (unquoted)
// state, or nullopt.
std::optional<BarLine> match_barline(std::string_view text, std::size_t pos);

struct Bar {
  std::string content;  // never contains a barline token
  BarLine right_barline = BarLine::Regular;

  bool operator==(const Bar&) const = default;
};

struct Track {
  // Full "V:" line for labelled tracks, empty for the implicit track of a
  // single-track tune.
  std::string voice_label;
  std::vector<Bar> bars;
  // Text after the last barline (usually just a newline). Preserved for
  // byte-exact serialization; excluded from structural equality.
  std::string trailing;
};

struct Tune {
  std::vector<std::string> headers;  // raw lines, newline stripped
  std::vector<Track> tracks;
  std::string source_id;
};

enum class ParseErrorKind { NoBody, EmptyBarStream, InvalidUtf8 };

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& msg)
      : Error(msg), kind(kind) {}
  ParseErrorKind kind;
};

Tune parse_tune(const std::string& text, const std::string& source_id = "");
std::string serialize_tune(const Tune& t);

// Equality on headers, voice labels and bars; trailing whitespace is
// serialization detail and does not participate.
bool structurally_equal(const Tune& a, const Tune& b);

// Splits a track body into bars plus trailing text. Exposed for the SMT
// group splitter and the repetition metric, which need the same
// quote-aware barline scan.
struct BarSplit {
  std::vector<Bar> bars;
  std::string trailing;
};
BarSplit split_bars(std::string_view body);

// One file may hold many tunes separated by blank lines.
std::vector<std::string> split_tune_texts(const std::string& file_text);
std::string join_tune_texts(const std::vector<std::string>& texts);

bool valid_utf8(std::string_view text);

}  // namespace smtabc
