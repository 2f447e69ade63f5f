#include "smtabc/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "smtabc/abc.hpp"
#include "smtabc/bpe.hpp"
#include "smtabc/error.hpp"
#include "smtabc/fit.hpp"
#include "smtabc/laws.hpp"
#include "smtabc/metrics.hpp"
#include "smtabc/optimal.hpp"
#include "smtabc/smt.hpp"

namespace smtabc::cli {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open \"" + path + "\" for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open \"" + path + "\" for writing");
  out << content;
  if (!out) throw ConfigError("write to \"" + path + "\" failed");
}

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Lines with their terminators kept, so training corpora round-trip.
std::vector<std::string> split_lines_keep_ends(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos + 1));
    pos = nl + 1;
  }
  return lines;
}

struct ConvertArgs {
  std::string input, output, report;
  bool invert = false;
  int tracks = 0;
};

int run_convert(const ConvertArgs& a, bool quiet) {
  std::string text = read_file(a.input);
  std::vector<std::string> texts = split_tune_texts(text);

  if (a.invert) {
    std::vector<std::string> out;
    for (const auto& t : texts)
      out.push_back(serialize_tune(desynchronize(t, a.tracks)));
    write_file(a.output, join_tune_texts(out));
    if (!quiet)
      std::cout << "{\"inverted\":" << out.size() << "}" << std::endl;
    return 0;
  }

  std::vector<Tune> tunes;
  long long parse_failures = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      tunes.push_back(parse_tune(texts[i], std::to_string(i)));
    } catch (const ParseError&) {
      ++parse_failures;
    }
  }
  auto [synced, report] = batch_convert(tunes);
  report.total += parse_failures;
  report.skipped += parse_failures;
  if (parse_failures > 0) report.skip_reasons["parse_error"] = parse_failures;

  std::vector<std::string> out;
  out.reserve(synced.size());
  for (const auto& s : synced) out.push_back(render_smt(s));
  write_file(a.output, join_tune_texts(out));

  std::string report_json = report.to_json_string();
  if (!a.report.empty()) write_file(a.report, report_json + "\n");
  if (!quiet) std::cout << report_json << std::endl;
  return 0;
}

struct TokenizeArgs {
  std::string mode;  // train | encode | decode
  std::string input, vocab, output;
  long long vocab_size = 2000;
};

int run_tokenize(const TokenizeArgs& a, bool quiet) {
  if (a.mode == "train") {
    std::vector<std::string> corpus =
        split_lines_keep_ends(read_file(a.input));
    Vocab v = train_bpe(corpus, static_cast<std::size_t>(a.vocab_size));
    write_file(a.vocab, vocab_to_json(v) + "\n");
    if (!quiet)
      std::cout << "{\"tokens\":" << v.tokens.size()
                << ",\"merges\":" << v.merges.size() << "}" << std::endl;
    return 0;
  }
  Vocab v = vocab_from_json(read_file(a.vocab));
  if (a.mode == "encode") {
    std::vector<int> ids = encode(v, read_file(a.input));
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(ids[i]);
    }
    out += '\n';
    if (a.output.empty())
      std::cout << out;
    else
      write_file(a.output, out);
    return 0;
  }
  // decode
  std::istringstream in(read_file(a.input));
  std::vector<int> ids;
  long long id;
  while (in >> id) ids.push_back(static_cast<int>(id));
  if (!in.eof()) throw ConfigError("id stream contains a non-integer");
  std::string text = decode(v, ids);
  if (a.output.empty())
    std::cout << text;
  else
    write_file(a.output, text);
  return 0;
}

struct StatsArgs {
  std::string input, vocab, csv;
  long long context_length = 8192;
};

int run_stats(const StatsArgs& a, const std::string& format) {
  std::vector<std::string> pieces = split_tune_texts(read_file(a.input));
  if (pieces.empty()) throw EmptyCorpusError("no pieces in input");
  double rep = repetition_rate(pieces);

  bool have_cov = !a.vocab.empty();
  CoverageReport cov;
  std::map<long long, long long> hist;
  if (have_cov) {
    Vocab v = vocab_from_json(read_file(a.vocab));
    std::vector<std::vector<int>> seqs;
    seqs.reserve(pieces.size());
    for (const auto& p : pieces) seqs.push_back(encode(v, p));
    cov = length_coverage(seqs, a.context_length);
    for (const auto& s : seqs) ++hist[static_cast<long long>(s.size())];
  } else if (!a.csv.empty()) {
    throw ConfigError("--csv needs --vocab to define token lengths");
  }

  if (!a.csv.empty()) {
    std::string csv = "length,count\n";
    for (const auto& [len, count] : hist)
      csv += std::to_string(len) + "," + std::to_string(count) + "\n";
    write_file(a.csv, csv);
  }

  if (format == "csv") {
    std::cout << "n_pieces," << pieces.size() << "\n";
    std::cout << "repetition_rate," << csv_num(rep) << "\n";
    if (have_cov) {
      std::cout << "context_length," << cov.context_length << "\n";
      std::cout << "covered_fraction," << csv_num(cov.covered_fraction)
                << "\n";
      std::cout << "p50," << cov.p50 << "\n";
      std::cout << "p90," << cov.p90 << "\n";
      std::cout << "p99," << cov.p99 << "\n";
    }
  } else {
    nlohmann::json j;
    j["n_pieces"] = pieces.size();
    j["repetition_rate"] = rep;
    if (have_cov) {
      j["coverage"] = {{"context_length", cov.context_length},
                       {"covered_fraction", cov.covered_fraction},
                       {"n_sequences", cov.n_sequences},
                       {"p50", cov.p50},
                       {"p90", cov.p90},
                       {"p99", cov.p99}};
    } else {
      j["coverage"] = nullptr;
    }
    std::cout << j.dump() << std::endl;
  }
  return 0;
}

struct FitArgs {
  std::string law, input, out;
  std::string test_split = "largest-n";
  bool early_stop = false;
  int threads = 0;
};

int run_fit(const FitArgs& a, bool quiet) {
  LawVariant variant = variant_from_name(a.law);
  std::vector<LossObservation> obs =
      observations_from_jsonl(read_file(a.input));
  SplitMode split =
      a.test_split == "none" ? SplitMode::None : SplitMode::LargestN;
  FitConfig cfg;
  cfg.early_stop_detection = a.early_stop;
  cfg.threads = a.threads;
  FitReport report = fit_law(variant, obs, split, cfg);
  std::string json = fit_report_to_json(report) + "\n";
  if (a.out.empty()) {
    std::cout << json;
  } else {
    write_file(a.out, json);
    if (!quiet)
      std::cout << "{\"train_r2\":" << report.train_r2
                << ",\"test_r2\":" << report.test_r2 << "}" << std::endl;
  }
  return 0;
}

struct PredictArgs {
  std::string params;
  double n = 0.0, d = 0.0, u_d = 0.0;
};

int run_predict(const PredictArgs& a) {
  LawParams p = law_params_from_json(read_file(a.params));
  double u = a.u_d > 0.0 ? a.u_d : 1.0;
  if (p.variant != LawVariant::Chinchilla && !(a.u_d > 0.0))
    throw DomainError("this variant needs --u-d");
  nlohmann::json j;
  j["loss"] = law_loss(p, a.n, a.d, u);
  std::cout << j.dump() << std::endl;
  return 0;
}

struct OptimalArgs {
  std::string params, sweep;
  double flops = 0.0, u_d = 0.0;
};

int run_optimal(const OptimalArgs& a) {
  LawParams p = law_params_from_json(read_file(a.params));
  AllocationResult r;
  if (p.variant == LawVariant::Chinchilla) {
    r = closed_form_allocation(p, a.flops);
    if (a.u_d > 0.0) r.epochs = r.d_opt / a.u_d;
  } else {
    r = constrained_search(p, a.flops, a.u_d);
  }

  if (!a.sweep.empty()) {
    double budget = a.flops / 6.0;
    double lo = std::log(1e6), hi = std::log(budget);
    if (!(hi > lo)) throw DomainError("budget too small for a sweep");
    const int points = 200;
    std::string csv = "n,d,loss\n";
    for (int i = 0; i < points; ++i) {
      double ln_n = lo + (hi - lo) * i / (points - 1);
      double n = std::exp(ln_n);
      double d = budget / n;
      double loss =
          law_loss(p, n, d, a.u_d > 0.0 ? a.u_d : 1.0);
      csv += csv_num(n) + "," + csv_num(d) + "," + csv_num(loss) + "\n";
    }
    write_file(a.sweep, csv);
  }

  std::cout << allocation_to_json(r) << std::endl;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"SMT-ABC toolkit: notation transforms, tokenization, "
               "corpus statistics, and scaling-law fitting"};
  app.require_subcommand(1);

  long long seed = 0;  // reserved for randomized inputs; nothing here
                       // draws randomness yet
  bool quiet = false;
  std::string format = "json";
  app.add_option("--seed", seed, "Seed for randomized generation");
  app.add_flag("--quiet", quiet, "Suppress progress output");
  app.add_option("--output-format", format, "stats output format")
      ->check(CLI::IsMember({"json", "csv"}));

  ConvertArgs conv;
  auto* c = app.add_subcommand("convert",
                               "Convert between tune and synchronized form");
  c->add_option("--input", conv.input, "Input .abc path")->required();
  c->add_option("--output", conv.output, "Output path")->required();
  c->add_flag("--invert", conv.invert, "Synchronized form back to tunes");
  c->add_option("--tracks", conv.tracks,
                "Track count for --invert (0 = infer from V: lines)");
  c->add_option("--report", conv.report, "Write the skip report JSON here");

  TokenizeArgs tok;
  auto* t = app.add_subcommand("tokenize", "Train or apply the tokenizer");
  t->require_subcommand(1);
  auto* tt = t->add_subcommand("train", "Train a vocabulary");
  tt->add_option("--input", tok.input, "Training text path")->required();
  tt->add_option("--vocab", tok.vocab, "Vocabulary output path")->required();
  tt->add_option("--vocab-size", tok.vocab_size, "Target vocabulary size");
  auto* te = t->add_subcommand("encode", "Encode text to token ids");
  te->add_option("--input", tok.input, "Text path")->required();
  te->add_option("--vocab", tok.vocab, "Vocabulary path")->required();
  te->add_option("--output", tok.output, "Id output path (default stdout)");
  auto* td = t->add_subcommand("decode", "Decode token ids to text");
  td->add_option("--input", tok.input, "Id list path")->required();
  td->add_option("--vocab", tok.vocab, "Vocabulary path")->required();
  td->add_option("--output", tok.output, "Text output path (default stdout)");

  StatsArgs st;
  auto* s = app.add_subcommand("stats", "Corpus statistics");
  s->add_option("--input", st.input, "Corpus path")->required();
  s->add_option("--vocab", st.vocab,
                "Vocabulary for token-length statistics");
  s->add_option("--context-length", st.context_length,
                "Context length for coverage");
  s->add_option("--csv", st.csv, "Write a length histogram CSV here");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a loss law to a loss log");
  f->add_option("--law", fit.law, "chinchilla|dc|dpp|nd|sms")->required();
  f->add_option("--input", fit.input, "JSON-lines loss log")->required();
  f->add_option("--test-split", fit.test_split, "largest-n|none")
      ->check(CLI::IsMember({"largest-n", "none"}));
  f->add_option("--out", fit.out, "Fit report path (default stdout)");
  f->add_flag("--early-stop", fit.early_stop,
              "Restrict fit and metrics to points before each curve's "
              "loss minimum");
  f->add_option("--threads", fit.threads, "Worker threads (0 = all)");

  PredictArgs pred;
  auto* pr = app.add_subcommand("predict", "Evaluate a fitted law");
  pr->add_option("--params", pred.params, "Parameter JSON path")->required();
  pr->add_option("--n", pred.n, "Parameter count N")->required();
  pr->add_option("--d", pred.d, "Training tokens D")->required();
  pr->add_option("--u-d", pred.u_d, "Unique tokens per epoch U_D");

  OptimalArgs opt;
  auto* op = app.add_subcommand("optimal", "Compute-optimal N/D split");
  op->add_option("--params", opt.params, "Parameter JSON path")->required();
  op->add_option("--flops", opt.flops, "FLOPs budget C")->required();
  op->add_option("--u-d", opt.u_d, "Unique tokens per epoch U_D");
  op->add_option("--sweep", opt.sweep, "Write an (N, D, loss) CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (app.got_subcommand(c)) return run_convert(conv, quiet);
    if (app.got_subcommand(t)) {
      tok.mode = tt->parsed() ? "train" : te->parsed() ? "encode" : "decode";
      return run_tokenize(tok, quiet);
    }
    if (app.got_subcommand(s)) return run_stats(st, format);
    if (app.got_subcommand(f)) return run_fit(fit, quiet);
    if (app.got_subcommand(pr)) return run_predict(pred);
    if (app.got_subcommand(op)) return run_optimal(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}

}  // namespace smtabc::cli
