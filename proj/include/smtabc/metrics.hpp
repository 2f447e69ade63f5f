#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smtabc/error.hpp"

namespace smtabc {

class EmptyCorpusError : public Error {
 public:
  explicit EmptyCorpusError(const std::string& msg) : Error(msg) {}
};

struct CoverageReport {
  long long context_length = 0;
  double covered_fraction = 0.0;  // sequences with length <= context
  long long n_sequences = 0;
  long long p50 = 0, p90 = 0, p99 = 0;  // nearest-rank length percentiles
};

CoverageReport length_coverage(const std::vector<std::vector<int>>& corpus,
                               long long context_length);

// True when the piece's barline stream contains the repeat sign ":|".
// Decorations and quoted chord text cannot trigger it; "::" does not
// count. Unparseable text yields false.
bool contains_repeat_sign(const std::string& piece);

// Fraction of pieces containing at least one repeat sign.
double repetition_rate(const std::vector<std::string>& pieces);

}  // namespace smtabc
