#include "smtabc/smt.hpp"

#include <algorithm>
#include <cstddef>
#include <sstream>

namespace smtabc {
namespace {

bool contains_marker(std::string_view text) {
  return text.find(kGroupMarker) != std::string_view::npos;
}

bool whitespace_only(std::string_view text) {
  return text.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::string SkipReport::to_json_string() const {
  std::ostringstream out;
  out << "{\"total\":" << total << ",\"converted\":" << converted
      << ",\"skipped\":" << skipped << ",\"skip_reasons\":{";
  bool first = true;
  for (const auto& [reason, count] : skip_reasons) {
    if (!first) out << ',';
    first = false;
    out << '"' << reason << "\":" << count;
  }
  out << "}}";
  return out.str();
}

SyncTune synchronize(const Tune& t) {
  if (t.tracks.empty())
    throw MisalignedError("no_tracks", "tune has no tracks");

  const std::size_t n_bars = t.tracks.front().bars.size();
  std::size_t unlabelled = 0;
  for (const auto& tr : t.tracks) {
    if (tr.bars.size() != n_bars)
      throw MisalignedError(
          "misaligned",
          "track bar counts differ: " + std::to_string(n_bars) + " vs " +
              std::to_string(tr.bars.size()));
    if (!whitespace_only(tr.trailing))
      throw MisalignedError("trailing_content",
                            "track has content after its last barline");
    if (tr.voice_label.empty()) ++unlabelled;
    if (contains_marker(tr.voice_label))
      throw ReservedSymbolError("voice label contains the group marker");
    // Scan the reconstructed bar stream, not individual contents: the
    // marker's own '|' splits as a barline, so "a<|>b" parses into bars
    // "a<" and ">b" that only reassemble into a marker around it.
    std::string stream;
    for (const auto& bar : tr.bars) {
      stream += bar.content;
      stream += barline_token(bar.right_barline);
    }
    if (contains_marker(stream))
      throw ReservedSymbolError("bar content contains the group marker");
  }
  for (const auto& h : t.headers)
    if (contains_marker(h))
      throw ReservedSymbolError("header contains the group marker");
  // A single voice may stay anonymous; with several, each group entry
  // needs a V: line to map back to.
  if (t.tracks.size() > 1 && unlabelled > 0)
    throw MisalignedError("unlabeled_track",
                          "multi-track tune has an unlabelled track");

  SyncTune s;
  s.headers = t.headers;
  s.n_tracks = static_cast<int>(t.tracks.size());
  for (const auto& tr : t.tracks) s.voice_labels.push_back(tr.voice_label);
  s.groups.resize(n_bars);
  for (std::size_t b = 0; b < n_bars; ++b) {
    s.groups[b].entries.reserve(t.tracks.size());
    for (const auto& tr : t.tracks) s.groups[b].entries.push_back(tr.bars[b]);
  }
  return s;
}

std::string render_smt(const SyncTune& s) {
  std::string out;
  for (const auto& h : s.headers) {
    out += h;
    out += '\n';
  }
  for (const auto& label : s.voice_labels) {
    if (!label.empty()) {
      out += label;
      out += '\n';
    }
  }
  for (const auto& g : s.groups) {
    out += kGroupMarker;
    for (const auto& bar : g.entries) {
      out += bar.content;
      out += barline_token(bar.right_barline);
    }
    out += kGroupMarker;
    out += '\n';
  }
  return out;
}

Tune desynchronize(const std::string& text, int n_tracks) {
  const std::size_t mark = kGroupMarker.size();
  const std::size_t first = text.find(kGroupMarker);
  if (first == std::string::npos)
    throw InverseError("no groups in synchronized text");

  // Header region: complete lines above the line holding the first
  // marker. Only whitespace may precede that marker on its own line.
  std::size_t body_start = text.rfind('\n', first);
  body_start = body_start == std::string::npos ? 0 : body_start + 1;
  if (text.find_first_not_of(" \t", body_start) != first)
    throw InverseError("content precedes the first group marker");

  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < body_start) {
    std::size_t nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }

  // The trailing run of V: lines in the header region names the tracks.
  std::size_t label_begin = lines.size();
  while (label_begin > 0 && lines[label_begin - 1].rfind("V:", 0) == 0)
    --label_begin;

  std::vector<std::string> labels;
  if (n_tracks > 0) {
    // Exactly n_tracks labels; fewer V: lines than tracks leaves the
    // remainder anonymous (only legal for a single track).
    std::size_t available = lines.size() - label_begin;
    std::size_t take = std::min<std::size_t>(available, n_tracks);
    label_begin = lines.size() - take;
    for (std::size_t i = label_begin; i < lines.size(); ++i)
      labels.push_back(lines[i]);
    while (labels.size() < static_cast<std::size_t>(n_tracks))
      labels.insert(labels.begin(), "");
  } else {
    for (std::size_t i = label_begin; i < lines.size(); ++i)
      labels.push_back(lines[i]);
    if (labels.empty()) labels.push_back("");
  }
  const std::size_t n = labels.size();
  if (n > 1)
    for (const auto& l : labels)
      if (l.empty())
        throw InverseError("multi-track form with an unlabelled track");

  Tune t;
  for (std::size_t i = 0; i < label_begin; ++i) t.headers.push_back(lines[i]);
  t.tracks.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.tracks[i].voice_label = labels[i];

  // Group scan: markers delimit each group; whitespace (including line
  // breaks) may separate groups, so bar content may itself span lines.
  pos = first;
  while (true) {
    pos = text.find_first_not_of(" \t\r\n", pos);
    if (pos == std::string::npos) break;
    if (text.compare(pos, mark, kGroupMarker) != 0)
      throw InverseError("unexpected content between groups");
    std::size_t close = text.find(kGroupMarker, pos + mark);
    if (close == std::string::npos)
      throw InverseError("group does not end with the group marker");
    std::string_view inner{text};
    inner = inner.substr(pos + mark, close - pos - mark);

    BarSplit split = split_bars(inner);
    if (split.bars.size() != n)
      throw InverseError("group holds " + std::to_string(split.bars.size()) +
                         " bars for " + std::to_string(n) + " tracks");
    if (!split.trailing.empty())
      throw InverseError("group has content after the last barline");
    for (std::size_t k = 0; k < n; ++k)
      t.tracks[k].bars.push_back(split.bars[k]);
    pos = close + mark;
  }
  if (t.tracks.front().bars.empty())
    throw InverseError("no groups in synchronized text");
  for (auto& tr : t.tracks) tr.trailing = "\n";
  return t;
}

std::pair<std::vector<SyncTune>, SkipReport> batch_convert(
    const std::vector<Tune>& tunes) {
  std::vector<SyncTune> out;
  SkipReport report;
  report.total = static_cast<long long>(tunes.size());
  for (const auto& t : tunes) {
    try {
      out.push_back(synchronize(t));
      ++report.converted;
    } catch (const MisalignedError& e) {
      ++report.skipped;
      ++report.skip_reasons[e.reason];
    } catch (const ReservedSymbolError&) {
      ++report.skipped;
      ++report.skip_reasons["reserved_symbol"];
    }
  }
  return {std::move(out), report};
}

}  // namespace smtabc
