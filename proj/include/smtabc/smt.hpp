#pragma once

/*
 * Synchronized multi-track form: bars with the same index in every track
 * are concatenated (each keeping its right barline) and wrapped in a pair
 * of "<|>" markers, one group per line. Headers and V: lines are emitted
 * first, unchanged.
 */

#include <map>
#include <string>
#include <vector>

#include "smtabc/abc.hpp"

namespace smtabc {

struct BarGroup {
  std::vector<Bar> entries;  // one per track, in track order

  bool operator==(const BarGroup&) const = default;
};

struct SyncTune {
  std::vector<std::string> headers;       // byte-identical to the source tune
  std::vector<std::string> voice_labels;  // one per track; "" when unlabelled
  int n_tracks = 0;
  std::vector<BarGroup> groups;
};

struct SkipReport {
  long long total = 0;
  long long converted = 0;
  long long skipped = 0;
  std::map<std::string, long long> skip_reasons;

  std::string to_json_string() const;
};

// Tune cannot be synchronized; the reason becomes a SkipReport bucket.
class MisalignedError : public Error {
 public:
  MisalignedError(std::string reason, const std::string& msg)
      : Error(msg), reason(std::move(reason)) {}
  std::string reason;
};

// The group marker is reserved: source text that already contains it
// cannot be converted reversibly.
class ReservedSymbolError : public Error {
 public:
  explicit ReservedSymbolError(const std::string& msg) : Error(msg) {}
};

class InverseError : public Error {
 public:
  explicit InverseError(const std::string& msg) : Error(msg) {}
};

inline constexpr std::string_view kGroupMarker = "<|>";

SyncTune synchronize(const Tune& t);
std::string render_smt(const SyncTune& s);

// Inverse of render_smt(synchronize(...)). n_tracks <= 0 takes the track
// count from the trailing run of V: lines above the first group.
Tune desynchronize(const std::string& text, int n_tracks = 0);

std::pair<std::vector<SyncTune>, SkipReport> batch_convert(
    const std::vector<Tune>& tunes);

}  // namespace smtabc
