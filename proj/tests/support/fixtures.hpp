#pragma once

// Deterministic generators shared by the unit and acceptance binaries.
// Every generator takes or fixes a seed so repeated runs are identical.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "smtabc/fit.hpp"
#include "smtabc/laws.hpp"

namespace fixtures {

// Bar content over a safe alphabet: no barline characters outside the
// quoted/decorated islands, no '<' or '>'.
inline std::string bar_content(std::mt19937& rng) {
  static const char notes[] = "ABCDEFGabcdefg";
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_int_distribution<int> pick(0, 13);
  std::uniform_int_distribution<int> pct(0, 99);
  std::string s;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    s += notes[pick(rng)];
    int p = pct(rng);
    if (p < 12)
      s += '2';
    else if (p < 16)
      s += '/';
  }
  int p = pct(rng);
  if (p < 8) s = "\"G|7\"" + s;   // chord symbol hiding a barline
  if (p >= 8 && p < 14) s = "!f|f!" + s;  // decoration hiding a barline
  return s;
}

inline std::string pick_barline(std::mt19937& rng, bool final_bar) {
  std::uniform_int_distribution<int> pct(0, 99);
  int p = pct(rng);
  if (final_bar) {
    if (p < 60) return "|]";
    if (p < 80) return "|";
    if (p < 90) return "||";
    return ":|";
  }
  if (p < 72) return "|";
  if (p < 80) return "||";
  if (p < 86) return ":|";
  if (p < 92) return "|:";
  if (p < 96) return "::";
  return "[|";
}

struct TuneSpec {
  int n_tracks = 1;
  int n_bars = 1;
  bool label_single = true;  // emit V:1 even for one track
};

inline std::string tune_text(std::mt19937& rng, int idx, const TuneSpec& spec,
                             int misaligned_extra_bars = 0) {
  static const char* keys[] = {"C", "G", "D", "Am", "Em"};
  std::string text;
  text += "X:" + std::to_string(idx + 1) + "\n";
  text += "T:Tune " + std::to_string(idx + 1) + "\n";
  text += "M:4/4\n";
  text += "L:1/8\n";
  text += std::string("K:") + keys[idx % 5] + "\n";

  // Per-track right barlines are shared so bar STREAMS align; the final
  // group keeps per-track variety only in content.
  std::vector<std::string> barlines;
  for (int b = 0; b < spec.n_bars; ++b)
    barlines.push_back(pick_barline(rng, b + 1 == spec.n_bars));

  for (int tr = 0; tr < spec.n_tracks; ++tr) {
    if (spec.n_tracks > 1 || spec.label_single)
      text += "V:" + std::to_string(tr + 1) + "\n";
    int extra = (tr == 0) ? misaligned_extra_bars : 0;
    std::string body;
    for (int b = 0; b < spec.n_bars + extra; ++b) {
      body += bar_content(rng);
      body += b < spec.n_bars ? barlines[b] : std::string("|");
    }
    // "c" + ":|" opens the line with "c:", which the parser must read as
    // a header field. Pad such lines so they stay body lines.
    if (body.size() >= 2 && body[1] == ':') body = "G" + body;
    text += body;
    text += "\n";
  }
  return text;
}

inline std::vector<std::string> aligned_corpus(int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> tracks(1, 8);
  std::uniform_int_distribution<int> bars(1, 64);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<std::string> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    TuneSpec spec;
    spec.n_tracks = tracks(rng);
    spec.n_bars = bars(rng);
    spec.label_single = coin(rng) == 1;
    out.push_back(tune_text(rng, i, spec));
  }
  return out;
}

// `count` tunes with exactly `misaligned` of them (spread evenly) having
// one track longer than the rest.
inline std::vector<std::string> skip_corpus(int count, int misaligned,
                                            unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> tracks(2, 6);
  std::uniform_int_distribution<int> bars(2, 24);
  std::vector<std::string> out;
  out.reserve(count);
  int stride = count / misaligned;
  for (int i = 0; i < count; ++i) {
    TuneSpec spec;
    spec.n_tracks = tracks(rng);
    spec.n_bars = bars(rng);
    bool broken = (i % stride == 0) && (i / stride < misaligned);
    out.push_back(tune_text(rng, i, spec, broken ? 1 : 0));
  }
  return out;
}

// Text lines for tokenizer training: notes, spaces, barlines, and some
// multi-byte code points. Never contains '<' or '>'.
inline std::vector<std::string> token_corpus(int lines, unsigned seed) {
  std::mt19937 rng(seed);
  static const char* pieces[] = {"C2",  "D",  "E/",  "F2",  "G",   "A",
                                 "Bc",  "d2", "e",   "f/",  "g4",  "ab",
                                 "z2",  "[CEG]", "(3DEF", "~G2"};
  static const char* seps[] = {" ", "|", " | ", "||", ":|", "|:"};
  static const char* rare[] = {"\xC3\xA9", "\xE2\x99\xA9"};  // é, quarter note
  std::uniform_int_distribution<int> n_pieces(2, 12);
  std::uniform_int_distribution<int> piece(0, 15);
  std::uniform_int_distribution<int> sep(0, 5);
  std::uniform_int_distribution<int> pct(0, 99);
  std::vector<std::string> out;
  out.reserve(lines);
  for (int i = 0; i < lines; ++i) {
    std::string line;
    if (pct(rng) < 6) line += "K:G ";
    int n = n_pieces(rng);
    for (int j = 0; j < n; ++j) {
      line += pieces[piece(rng)];
      if (pct(rng) < 3) line += rare[pct(rng) % 2];
      if (j + 1 < n) line += seps[sep(rng)];
    }
    line += "\n";
    out.push_back(std::move(line));
  }
  return out;
}

// `with_repeat` pieces contain the repeat sign as a real barline; the
// rest end on a final barline instead.
inline std::vector<std::string> repetition_corpus(int count, int with_repeat,
                                                  unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::string body = bar_content(rng) + "|" + bar_content(rng);
    body += (i < with_repeat) ? ":|" : "|]";
    out.push_back("X:" + std::to_string(i + 1) + "\nK:C\n" + body + "\n");
  }
  return out;
}

inline const smtabc::LawParams& chinchilla_truth() {
  static const smtabc::LawParams p = [] {
    smtabc::LawParams q;
    q.variant = smtabc::LawVariant::Chinchilla;
    q.a_coef = 400.0;
    q.b_coef = 410.0;
    q.e_const = 1.7;
    q.alpha = 0.34;
    q.beta = 0.28;
    return q;
  }();
  return p;
}

inline std::vector<smtabc::LossObservation> chinchilla_grid(
    const double (&ns)[4], unsigned seed) {
  const smtabc::LawParams& p = chinchilla_truth();
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.001);
  std::vector<smtabc::LossObservation> obs;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 6; ++j) {
      double d = 2e8 * std::pow(100.0, j / 5.0);
      smtabc::LossObservation o;
      o.n = ns[i];
      o.d = d;
      o.u_d = d;
      o.loss = smtabc::chinchilla_loss(p, o.n, o.d) * std::exp(noise(rng));
      o.run_id = "n" + std::to_string(i) + "_d" + std::to_string(j);
      obs.push_back(std::move(o));
    }
  }
  return obs;
}

// 4 model sizes x 6 data sizes, single epoch, 0.1% multiplicative
// log-normal noise. Holding out the largest two N leaves two train N
// levels, and two levels pin A/N^alpha only jointly with E: the fit can
// land anywhere on that trade-off. The tight N spacing keeps every such
// landing's held-out extrapolation short-range, so prediction quality
// stays high even though individual coefficients are not identified.
inline std::vector<smtabc::LossObservation> chinchilla_fixture(
    unsigned seed = 1234) {
  const double ns[4] = {1.0e8, 1.2e8, 1.44e8, 1.728e8};
  return chinchilla_grid(ns, seed);
}

// Same grid shape over a 1000x N range: with all four levels in the
// train set the coefficients are individually identified, which is what
// the parameter-recovery tests need.
inline std::vector<smtabc::LossObservation> chinchilla_wide_fixture(
    unsigned seed = 555) {
  const double ns[4] = {1e7, 1e8, 1e9, 1e10};
  return chinchilla_grid(ns, seed);
}

inline const smtabc::LawParams& sms_truth() {
  static const smtabc::LawParams p = [] {
    smtabc::LawParams q;
    q.variant = smtabc::LawVariant::SMS;
    q.a_coef = 400.0;
    q.b_coef = 410.0;
    q.e_const = 1.7;
    q.alpha = 0.34;
    q.beta = 0.28;
    q.d_coef = 5e4;
    q.k_eff = 0.55;
    q.overfit.k_d = 2e-11;
    q.overfit.k_n = 0.06;
    q.overfit.k_u = 0.3;
    q.overfit.k_in = -5.2;
    q.activation = smtabc::Activation::GELU;
    return q;
  }();
  return p;
}

// 5 model sizes x 2 unique-data budgets x 10 epoch counts: repetition
// saturates D'' and the gated linear term bends every curve upward past
// its minimum. 0.2% noise.
inline std::vector<smtabc::LossObservation> sms_fixture(
    unsigned seed = 4321) {
  const smtabc::LawParams& p = sms_truth();
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.002);
  const double ns[] = {1e7, 3e7, 1e8, 3e8, 1e9};
  const double us[] = {2e9, 8e9};
  const double epochs[] = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0,
                           6.0, 8.0};
  std::vector<smtabc::LossObservation> obs;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int e = 0; e < 10; ++e) {
        smtabc::LossObservation o;
        o.n = ns[i];
        o.u_d = us[j];
        o.d = epochs[e] * us[j];
        o.loss =
            smtabc::sms_loss(p, o.n, o.d, o.u_d) * std::exp(noise(rng));
        o.run_id = "n" + std::to_string(i) + "_u" + std::to_string(j);
        obs.push_back(std::move(o));
      }
    }
  }
  return obs;
}

}  // namespace fixtures
