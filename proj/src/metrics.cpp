#include "smtabc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "smtabc/abc.hpp"

namespace smtabc {
namespace {

// Nearest-rank percentile: smallest value whose rank covers p percent.
long long nearest_rank(const std::vector<long long>& sorted, double p) {
  std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace

CoverageReport length_coverage(const std::vector<std::vector<int>>& corpus,
                               long long context_length) {
  if (corpus.empty())
    throw EmptyCorpusError("length_coverage needs at least one sequence");

  std::vector<long long> lengths;
  lengths.reserve(corpus.size());
  long long covered = 0;
  for (const auto& seq : corpus) {
    long long len = static_cast<long long>(seq.size());
    lengths.push_back(len);
    if (len <= context_length) ++covered;
  }
  std::sort(lengths.begin(), lengths.end());

  CoverageReport r;
  r.context_length = context_length;
  r.n_sequences = static_cast<long long>(corpus.size());
  r.covered_fraction =
      static_cast<double>(covered) / static_cast<double>(r.n_sequences);
  r.p50 = nearest_rank(lengths, 50.0);
  r.p90 = nearest_rank(lengths, 90.0);
  r.p99 = nearest_rank(lengths, 99.0);
  return r;
}

bool contains_repeat_sign(const std::string& piece) {
  Tune t;
  try {
    t = parse_tune(piece);
  } catch (const ParseError&) {
    return false;
  }
  for (const auto& track : t.tracks)
    for (const auto& bar : track.bars)
      if (bar.right_barline == BarLine::RepeatEnd) return true;
  return false;
}

double repetition_rate(const std::vector<std::string>& pieces) {
  if (pieces.empty())
    throw EmptyCorpusError("repetition_rate needs at least one piece");
  long long hits = 0;
  for (const auto& p : pieces)
    if (contains_repeat_sign(p)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pieces.size());
}

}  // namespace smtabc
