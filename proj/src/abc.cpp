#include "smtabc/abc.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace smtabc {

namespace {

// Two-character tokens first: the match loop tries these in order and
// falls back to "|".
constexpr std::array<std::pair<std::string_view, BarLine>, 7> kBarlines = {{
    {"||", BarLine::Double},
    {"|]", BarLine::Final},
    {"[|", BarLine::Opening},
    {"|:", BarLine::RepeatStart},
    {":|", BarLine::RepeatEnd},
    {"::", BarLine::RepeatBoth},
    {"|", BarLine::Regular},
}};

bool is_voice_line(std::string_view line) {
  return line.size() >= 2 && line[0] == 'V' && line[1] == ':';
}

// Header lines: "letter:" fields and %-directives/comments. V: lines are
// handled separately because they open tracks.
bool is_header_line(std::string_view line) {
  if (!line.empty() && line[0] == '%') return true;
  return line.size() >= 2 && std::isalpha(static_cast<unsigned char>(line[0])) &&
         line[1] == ':';
}

struct Line {
  std::size_t begin;  // offset of first char
  std::size_t end;    // offset one past last char, excluding '\n'
};

std::vector<Line> scan_lines(const std::string& text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back({pos, text.size()});
      break;
    }
    lines.push_back({pos, nl});
    pos = nl + 1;
  }
  return lines;
}

std::string_view line_view(const std::string& text, Line ln) {
  return std::string_view(text).substr(ln.begin, ln.end - ln.begin);
}

// Offset right after the line, including its newline when present.
std::size_t line_past_end(const std::string& text, Line ln) {
  return ln.end < text.size() && text[ln.end] == '\n' ? ln.end + 1 : ln.end;
}

Track make_track(const std::string& voice_label, std::string_view body) {
  BarSplit split = split_bars(body);
  if (split.bars.empty()) {
    throw ParseError(ParseErrorKind::EmptyBarStream,
                     "track has no bars: " +
                         (voice_label.empty() ? std::string("<implicit>")
                                              : voice_label));
  }
  Track track;
  track.voice_label = voice_label;
  track.bars = std::move(split.bars);
  track.trailing = std::move(split.trailing);
  return track;
}

}  // namespace

std::string_view barline_token(BarLine b) {
  for (const auto& [tok, kind] : kBarlines) {
    if (kind == b) return tok;
  }
  return "|";
}

std::optional<BarLine> match_barline(std::string_view text, std::size_t pos) {
  for (const auto& [tok, kind] : kBarlines) {
    if (text.compare(pos, tok.size(), tok) == 0) return kind;
  }
  return std::nullopt;
}

BarSplit split_bars(std::string_view body) {
  BarSplit out;
  std::string content;
  bool in_quote = false;
  bool in_decoration = false;
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (in_quote) {
      content.push_back(c);
      if (c == '"') in_quote = false;
      ++i;
      continue;
    }
    if (in_decoration) {
      content.push_back(c);
      if (c == '!') in_decoration = false;
      ++i;
      continue;
    }
    if (auto bar = match_barline(body, i)) {
      out.bars.push_back({std::move(content), *bar});
      content.clear();
      i += barline_token(*bar).size();
      continue;
    }
    if (c == '"') in_quote = true;
    if (c == '!') in_decoration = true;
    content.push_back(c);
    ++i;
  }
  out.trailing = std::move(content);
  return out;
}

bool valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t extra;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      if (c < 0xC2) return false;  // overlong
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      if (c > 0xF4) return false;  // beyond U+10FFFF
    } else {
      return false;
    }
    for (std::size_t k = 1; k <= extra; ++k) {
      if (i + k >= text.size()) return false;
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

Tune parse_tune(const std::string& text, const std::string& source_id) {
  if (!valid_utf8(text)) {
    throw ParseError(ParseErrorKind::InvalidUtf8, "input is not valid UTF-8");
  }
  std::vector<Line> lines = scan_lines(text);

  Tune tune;
  tune.source_id = source_id;

  // Header block: maximal prefix of header-shaped, non-voice lines.
  std::size_t idx = 0;
  while (idx < lines.size()) {
    std::string_view lv = line_view(text, lines[idx]);
    if (is_voice_line(lv) || !is_header_line(lv)) break;
    tune.headers.emplace_back(lv);
    ++idx;
  }
  if (idx >= lines.size()) {
    throw ParseError(ParseErrorKind::NoBody, "no music lines follow headers");
  }

  // Locate every voice line from here on. Anything before the first one is
  // the body of an implicit unlabelled track.
  std::vector<std::size_t> voice_lines;
  for (std::size_t j = idx; j < lines.size(); ++j) {
    if (is_voice_line(line_view(text, lines[j]))) voice_lines.push_back(j);
  }

  if (voice_lines.empty()) {
    std::string_view body =
        std::string_view(text).substr(lines[idx].begin);
    tune.tracks.push_back(make_track("", body));
    return tune;
  }

  if (voice_lines.front() != idx) {
    std::string_view body = std::string_view(text).substr(
        lines[idx].begin, lines[voice_lines.front()].begin - lines[idx].begin);
    tune.tracks.push_back(make_track("", body));
  }
  for (std::size_t v = 0; v < voice_lines.size(); ++v) {
    Line vline = lines[voice_lines[v]];
    std::size_t body_begin = line_past_end(text, vline);
    std::size_t body_end = v + 1 < voice_lines.size()
                               ? lines[voice_lines[v + 1]].begin
                               : text.size();
    std::string_view body =
        std::string_view(text).substr(body_begin, body_end - body_begin);
    tune.tracks.push_back(
        make_track(std::string(line_view(text, vline)), body));
  }
  return tune;
}

std::string serialize_tune(const Tune& t) {
  std::string out;
  for (const std::string& h : t.headers) {
    out += h;
    out += '\n';
  }
  for (const Track& track : t.tracks) {
    if (!track.voice_label.empty()) {
      out += track.voice_label;
      out += '\n';
    }
    for (const Bar& bar : track.bars) {
      out += bar.content;
      out += barline_token(bar.right_barline);
    }
    out += track.trailing;
  }
  return out;
}

bool structurally_equal(const Tune& a, const Tune& b) {
  if (a.headers != b.headers) return false;
  if (a.tracks.size() != b.tracks.size()) return false;
  for (std::size_t i = 0; i < a.tracks.size(); ++i) {
    if (a.tracks[i].voice_label != b.tracks[i].voice_label) return false;
    if (a.tracks[i].bars != b.tracks[i].bars) return false;
  }
  return true;
}

std::vector<std::string> split_tune_texts(const std::string& file_text) {
  std::vector<std::string> tunes;
  std::string current;
  bool current_has_content = false;

  std::size_t pos = 0;
  while (pos <= file_text.size()) {
    std::size_t nl = file_text.find('\n', pos);
    std::string_view line =
        std::string_view(file_text)
            .substr(pos, (nl == std::string::npos ? file_text.size() : nl) - pos);
    bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (blank) {
      if (current_has_content) {
        tunes.push_back(std::move(current));
        current.clear();
        current_has_content = false;
      }
    } else {
      current.append(line);
      current.push_back('\n');
      current_has_content = true;
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  if (current_has_content) tunes.push_back(std::move(current));
  return tunes;
}

std::string join_tune_texts(const std::vector<std::string>& texts) {
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) out += '\n';
    out += texts[i];
    if (out.empty() || out.back() != '\n') out += '\n';
  }
  return out;
}

}  // namespace smtabc
