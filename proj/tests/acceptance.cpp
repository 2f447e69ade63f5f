// Acceptance gate: one line per criterion, exit 0 only when all pass.
//
// Every tolerance is pinned here as a literal next to its check. Each
// criterion runs in isolation; an exception is a failure, not a crash.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "smtabc/abc.hpp"
#include "smtabc/bpe.hpp"
#include "smtabc/fit.hpp"
#include "smtabc/laws.hpp"
#include "smtabc/lbfgs.hpp"
#include "smtabc/metrics.hpp"
#include "smtabc/optimal.hpp"
#include "smtabc/smt.hpp"
#include "support/fixtures.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void need(bool cond, const std::string& what) {
  if (!cond) throw Failure(what);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// The SMS fits are the expensive part of the gate and two criteria need
// identical ones; fit once, reuse. Arguments are fixed so the cached
// report is the report either caller would compute.
const smtabc::FitReport& sms_fixture_fit() {
  static const smtabc::FitReport report = [] {
    smtabc::FitConfig cfg;
    return smtabc::fit_law(smtabc::LawVariant::SMS, fixtures::sms_fixture(),
                           smtabc::SplitMode::LargestN, cfg);
  }();
  return report;
}

// 1. Parse -> synchronize -> render -> desynchronize reproduces every
//    tune byte for byte; 500 tunes in under 5 s.
void check_smt_round_trip() {
  const auto corpus = fixtures::aligned_corpus(500, 9001);
  const auto t0 = Clock::now();
  int bad = 0;
  for (const auto& text : corpus) {
    smtabc::Tune t = smtabc::parse_tune(text);
    std::string rendered = smtabc::render_smt(smtabc::synchronize(t));
    smtabc::Tune back = smtabc::desynchronize(rendered);
    if (smtabc::serialize_tune(back) != text ||
        !smtabc::structurally_equal(back, t)) {
      ++bad;
    }
  }
  const double secs = seconds_since(t0);
  need(bad == 0, std::to_string(bad) + " of 500 tunes failed to round trip");
  need(secs < 5.0, "round trip took " + fmt(secs) + "s, budget 5s");
}

// 2. A corpus built with exactly 1% misaligned tunes reports
//    skipped/total == 0.010.
void check_skip_accounting() {
  const auto texts = fixtures::skip_corpus(1000, 10, 777);
  std::vector<smtabc::Tune> tunes;
  tunes.reserve(texts.size());
  for (const auto& text : texts) tunes.push_back(smtabc::parse_tune(text));
  const auto [converted, report] = smtabc::batch_convert(tunes);
  need(report.total == 1000, "total = " + std::to_string(report.total));
  need(report.skipped == 10, "skipped = " + std::to_string(report.skipped));
  need(report.converted == 990,
       "converted = " + std::to_string(report.converted));
  const double rate =
      static_cast<double>(report.skipped) / static_cast<double>(report.total);
  need(rate == 0.010, "skip rate " + fmt(rate) + " != 0.010");
}

// 3. Every emitted group holds exactly n_tracks barline-terminated
//    segments, checked on the structure and again on the rendered text.
void check_group_alignment() {
  const auto corpus = fixtures::aligned_corpus(300, 31);
  long long groups = 0;
  long long violations = 0;
  const std::string marker(smtabc::kGroupMarker);
  for (const auto& text : corpus) {
    smtabc::SyncTune s = smtabc::synchronize(smtabc::parse_tune(text));
    for (const auto& g : s.groups) {
      if (static_cast<int>(g.entries.size()) != s.n_tracks) ++violations;
    }
    std::istringstream lines(smtabc::render_smt(s));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.rfind(marker, 0) != 0) continue;
      ++groups;
      if (line.size() < 2 * marker.size() ||
          line.compare(line.size() - marker.size(), marker.size(), marker) !=
              0) {
        ++violations;
        continue;
      }
      const auto split = smtabc::split_bars(
          line.substr(marker.size(), line.size() - 2 * marker.size()));
      if (static_cast<int>(split.bars.size()) != s.n_tracks ||
          !split.trailing.empty()) {
        ++violations;
      }
    }
  }
  need(groups > 0, "no groups were emitted");
  need(violations == 0,
       std::to_string(violations) + " alignment violations in " +
           std::to_string(groups) + " groups");
}

// 4. Tokenizer: decode(encode(x)) == x on 10,000 lines, and retraining
//    from the same corpus reproduces the merge list exactly.
void check_tokenizer() {
  const auto lines = fixtures::token_corpus(10000, 424242);
  const smtabc::Vocab v = smtabc::train_bpe(lines, 600);
  int bad = 0;
  for (const auto& line : lines) {
    if (smtabc::decode(v, smtabc::encode(v, line)) != line) ++bad;
  }
  need(bad == 0,
       std::to_string(bad) + " of 10000 lines failed to round trip");
  const smtabc::Vocab again = smtabc::train_bpe(lines, 600);
  need(again.merges == v.merges, "retraining changed the merge list");
  need(again.tokens == v.tokens, "retraining changed the token list");
}

// 5. Huber value is continuous across |r| = delta.
void check_huber_continuity() {
  const double delta = 1e-3;
  const double below = std::nextafter(delta, 0.0);
  const double above = std::nextafter(delta, 1.0);
  const double gap =
      std::fabs(smtabc::huber(above, delta) - smtabc::huber(below, delta));
  need(gap < 1e-15, "value gap at delta = " + fmt(gap));
}

// 6. R^2 of the perfect predictor is 1, of the mean predictor 0.
void check_r_squared_sanity() {
  const std::vector<double> y = {1.0, 2.0, 3.0, 5.0};
  const double perfect = smtabc::r_squared(y, y);
  need(std::fabs(perfect - 1.0) < 1e-12, "perfect = " + fmt(perfect));
  const double mean = (1.0 + 2.0 + 3.0 + 5.0) / 4.0;
  const std::vector<double> m(y.size(), mean);
  const double at_mean = smtabc::r_squared(m, y);
  need(std::fabs(at_mean) < 1e-12, "mean predictor = " + fmt(at_mean));
}

// 7. Optimizer benchmarks: 1-D quadratic, Rosenbrock, first-step
//    direction, and agreement with a small-step gradient-descent oracle
//    on an ill-conditioned quadratic.
void check_optimizer() {
  {
    const auto f = [](const std::vector<double>& v) {
      return (v[0] - 3.0) * (v[0] - 3.0);
    };
    const auto g = [](const std::vector<double>& v) {
      return std::vector<double>{2.0 * (v[0] - 3.0)};
    };
    const auto t0 = Clock::now();
    const auto r = smtabc::lbfgs_minimize(f, g, {0.0});
    const double secs = seconds_since(t0);
    need(std::fabs(r.x[0] - 3.0) <= 1e-6,
         "quadratic minimum at " + fmt(r.x[0]));
    need(r.iterations <= 50,
         "quadratic used " + std::to_string(r.iterations) + " iterations");
    need(secs < 1.0, "quadratic took " + fmt(secs) + "s");
  }
  {
    const auto f = [](const std::vector<double>& v) {
      const double a = 1.0 - v[0];
      const double b = v[1] - v[0] * v[0];
      return a * a + 100.0 * b * b;
    };
    const auto g = [](const std::vector<double>& v) {
      const double b = v[1] - v[0] * v[0];
      return std::vector<double>{
          -2.0 * (1.0 - v[0]) - 400.0 * v[0] * b, 200.0 * b};
    };
    smtabc::LbfgsConfig cfg;
    cfg.max_iterations = 1000;
    const auto t0 = Clock::now();
    const auto r = smtabc::lbfgs_minimize(f, g, {-1.2, 1.0}, cfg);
    const double secs = seconds_since(t0);
    need(r.objective < 1e-8, "rosenbrock objective " + fmt(r.objective));
    need(std::fabs(r.x[0] - 1.0) <= 1e-4 && std::fabs(r.x[1] - 1.0) <= 1e-4,
         "rosenbrock ended at (" + fmt(r.x[0]) + ", " + fmt(r.x[1]) + ")");
    need(secs < 1.0, "rosenbrock took " + fmt(secs) + "s");
  }
  const auto f = [](const std::vector<double>& v) {
    return 0.5 * (v[0] * v[0] + 100.0 * v[1] * v[1]);
  };
  const auto g = [](const std::vector<double>& v) {
    return std::vector<double>{v[0], 100.0 * v[1]};
  };
  {
    smtabc::LbfgsConfig cfg;
    cfg.history = 1;
    cfg.scale_initial_hessian = false;
    cfg.max_iterations = 1;
    const std::vector<double> x0 = {1.0, 1.0};
    const auto r = smtabc::lbfgs_minimize(f, g, x0, cfg);
    const std::vector<double> step = {r.x[0] - x0[0], r.x[1] - x0[1]};
    const std::vector<double> descent = {-1.0, -100.0};
    const double dot = step[0] * descent[0] + step[1] * descent[1];
    const double ns = std::hypot(step[0], step[1]);
    const double nd = std::hypot(descent[0], descent[1]);
    need(ns > 0.0, "first step was zero");
    const double cosine = dot / (ns * nd);
    need(cosine > 0.99, "first-step cosine " + fmt(cosine));
  }
  {
    std::vector<double> x = {1.0, 1.0};
    for (int i = 0; i < 4000; ++i) {
      const auto gr = g(x);
      x[0] -= 0.009 * gr[0];
      x[1] -= 0.009 * gr[1];
    }
    const auto r = smtabc::lbfgs_minimize(f, g, {1.0, 1.0});
    need(std::fabs(r.x[0] - x[0]) <= 1e-5 && std::fabs(r.x[1] - x[1]) <= 1e-5,
         "oracle (" + fmt(x[0]) + ", " + fmt(x[1]) + ") vs (" + fmt(r.x[0]) +
             ", " + fmt(r.x[1]) + ")");
  }
}

// 8. Continuous data discount: exact identity at d == u_d, a stable
//    k -> 1 limit, and monotone concave growth in d.
void check_data_discount() {
  const double u = 1e9;
  for (double k : {1e-6, 1e-3, 0.1, 0.5, 0.9, 1.0 - 1e-9, 1.0}) {
    need(smtabc::effective_data_continuous(u, u, k) == u,
         "identity failed at k = " + fmt(k));
  }
  for (double d : {3e8, 5e9, 2e10}) {
    const double near_one = smtabc::effective_data_continuous(u, d, 1.0 - 1e-9);
    const double at_one = smtabc::effective_data_continuous(u, d, 1.0);
    need(at_one == d, "k = 1 must return d unchanged");
    need(std::fabs(near_one - at_one) / at_one < 1e-6,
         "k -> 1 limit off by " + fmt(std::fabs(near_one - at_one) / at_one));
  }
  const int points = 100;
  const double lo = 1e8, hi = 2e10, k = 0.5;
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) {
    const double d = lo + (hi - lo) * i / (points - 1);
    v[i] = smtabc::effective_data_continuous(u, d, k);
  }
  int violations = 0;
  for (int i = 1; i < points; ++i) {
    if (!(v[i] > v[i - 1])) ++violations;
  }
  for (int i = 1; i + 1 < points; ++i) {
    if (!(v[i + 1] - 2.0 * v[i] + v[i - 1] < 0.0)) ++violations;
  }
  need(violations == 0,
       std::to_string(violations) + " monotonicity/concavity violations");
}

// 9. Fits recover the generator: held-out R^2 >= 0.99 and mean log-scale
//    Huber <= 1e-5 on the power-law fixture; the two-stage fit recovers
//    the overfit coefficient signs and ordering; all in under 60 s.
void check_synthetic_recovery() {
  const auto t0 = Clock::now();
  smtabc::FitConfig cfg;
  const auto r = smtabc::fit_law(smtabc::LawVariant::Chinchilla,
                                 fixtures::chinchilla_fixture(),
                                 smtabc::SplitMode::LargestN, cfg);
  need(r.test_r2 >= 0.99, "held-out r2 = " + fmt(r.test_r2));
  need(r.test_huber_log <= 1e-5, "held-out huber = " + fmt(r.test_huber_log));
  const auto& o = sms_fixture_fit().params.overfit;
  need(o.k_d > 0.0 && o.k_n > 0.0 && o.k_u > 0.0,
       "overfit signs: k_d = " + fmt(o.k_d) + ", k_n = " + fmt(o.k_n) +
           ", k_u = " + fmt(o.k_u));
  need(o.k_u > o.k_n && o.k_n > o.k_d,
       "overfit ordering: k_d = " + fmt(o.k_d) + ", k_n = " + fmt(o.k_n) +
           ", k_u = " + fmt(o.k_u));
  const double secs = seconds_since(t0);
  need(secs < 60.0, "recovery took " + fmt(secs) + "s, budget 60s");
}

// 10. On data with repetition and overfitting structure the richer
//     variants win: SMS > NDTerm > Chinchilla on held-out R^2.
void check_law_family_ordering() {
  const auto obs = fixtures::sms_fixture();
  smtabc::FitConfig cfg;
  const double sms = sms_fixture_fit().test_r2;
  const double nd = smtabc::fit_law(smtabc::LawVariant::NDTerm, obs,
                                    smtabc::SplitMode::LargestN, cfg)
                        .test_r2;
  const double chin = smtabc::fit_law(smtabc::LawVariant::Chinchilla, obs,
                                      smtabc::SplitMode::LargestN, cfg)
                          .test_r2;
  need(sms > nd && nd > chin, "held-out r2: sms = " + fmt(sms) +
                                  ", ndterm = " + fmt(nd) +
                                  ", chinchilla = " + fmt(chin));
}

// 11. Closed-form allocation agrees with a 10^4-point grid oracle within
//     1% on n_opt; the budget identity holds to 1e-9 relative and the
//     exponents sum to exactly 1.
void check_compute_optimal() {
  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> log_coef(2.0, 7.0);
  std::uniform_real_distribution<double> e_const(0.5, 3.0);
  std::uniform_real_distribution<double> expo(0.2, 0.5);
  const double flops = 1e21;
  const double budget = flops / 6.0;
  for (int trial = 0; trial < 5; ++trial) {
    smtabc::LawParams p;
    p.variant = smtabc::LawVariant::Chinchilla;
    p.a_coef = std::exp(log_coef(rng));
    p.b_coef = std::exp(log_coef(rng));
    p.e_const = e_const(rng);
    p.alpha = expo(rng);
    p.beta = expo(rng);
    const auto r = smtabc::closed_form_allocation(p, flops);

    const int grid = 10000;
    const double ln_lo = std::log(1e3);
    const double ln_hi = std::log(budget);
    double best_loss = std::numeric_limits<double>::infinity();
    double best_n = 0.0;
    int best_i = -1;
    for (int i = 0; i < grid; ++i) {
      const double n = std::exp(ln_lo + (ln_hi - ln_lo) * i / (grid - 1));
      const double loss = smtabc::chinchilla_loss(p, n, budget / n);
      if (loss < best_loss) {
        best_loss = loss;
        best_n = n;
        best_i = i;
      }
    }
    need(best_i > 0 && best_i < grid - 1,
         "trial " + std::to_string(trial) + ": grid optimum at the edge");
    need(std::fabs(r.n_opt - best_n) / r.n_opt <= 0.01,
         "trial " + std::to_string(trial) + ": closed form " + fmt(r.n_opt) +
             " vs grid " + fmt(best_n));
    need(std::fabs(6.0 * r.n_opt * r.d_opt - flops) <= 1e-9 * flops,
         "trial " + std::to_string(trial) + ": budget identity violated");
    need(r.a_exp + r.b_exp == 1.0,
         "trial " + std::to_string(trial) + ": a + b = " +
             fmt(r.a_exp + r.b_exp));
  }
}

// 12. A 1,000-piece set built with 443 repeat-sign pieces measures rate
//     0.443 exactly.
void check_repetition_rate() {
  const auto pieces = fixtures::repetition_corpus(1000, 443, 99);
  const double rate = smtabc::repetition_rate(pieces);
  need(rate == 443.0 / 1000.0, "rate = " + fmt(rate));
}

// 13. Forward and central finite differences of every variant's fitting
//     objective agree to 1e-4 relative (gradient 2-norms) at 20 random
//     points per variant. Observed losses are placed a fixed log offset
//     from the model so every residual sits in Huber's linear region.
void check_gradient_consistency() {
  using smtabc::LawVariant;
  const LawVariant variants[] = {
      LawVariant::Chinchilla, LawVariant::DataConstrained,
      LawVariant::ContinuousDPrime, LawVariant::NDTerm, LawVariant::SMS};
  const double delta = 1e-3;
  std::vector<std::string> problems;
  for (const LawVariant variant : variants) {
    std::mt19937 rng(1300 + static_cast<int>(variant));
    std::uniform_real_distribution<double> log_coef(-1.0, 2.0);
    std::uniform_real_distribution<double> log_e(-1.0, 1.0);
    std::uniform_real_distribution<double> expo(0.2, 0.5);
    std::uniform_real_distribution<double> kval(0.3, 0.8);
    std::uniform_real_distribution<double> log_rstar(-1.0, 1.5);
    std::uniform_real_distribution<double> n_val(50.0, 5000.0);
    std::uniform_real_distribution<double> u_val(20.0, 500.0);
    std::uniform_real_distribution<double> epochs_val(0.2, 3.0);
    std::uniform_real_distribution<double> offset(0.1, 0.6);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x;
      switch (variant) {
        case LawVariant::Chinchilla:
          x = {log_coef(rng), log_coef(rng), log_e(rng), expo(rng),
               expo(rng)};
          break;
        case LawVariant::DataConstrained:
          x = {log_coef(rng), log_coef(rng), log_e(rng), expo(rng),
               expo(rng), log_rstar(rng), log_rstar(rng)};
          break;
        case LawVariant::ContinuousDPrime: {
          const double k = kval(rng);
          x = {log_coef(rng), log_coef(rng), log_e(rng), expo(rng),
               expo(rng), std::log(k / (1.0 - k))};
          break;
        }
        default: {
          const double k = kval(rng);
          x = {log_coef(rng), log_coef(rng), log_coef(rng), log_e(rng),
               expo(rng), expo(rng), std::log(k / (1.0 - k))};
          break;
        }
      }
      const smtabc::LawParams p = smtabc::unpack_params(variant, x);
      std::vector<smtabc::LossObservation> obs(4);
      for (auto& o : obs) {
        o.n = n_val(rng);
        o.u_d = u_val(rng);
        double epochs = epochs_val(rng);
        while (std::fabs(epochs - 1.0) < 0.05) epochs = epochs_val(rng);
        o.d = epochs * o.u_d;
        const double sign = coin(rng) == 0 ? -1.0 : 1.0;
        o.loss = smtabc::law_loss(p, o.n, o.d, o.u_d) *
                 std::exp(sign * offset(rng));
      }
      const auto f = [&](const std::vector<double>& v) {
        return smtabc::lse_objective(variant, v, obs, delta);
      };
      const double f0 = f(x);
      double diff_sq = 0.0;
      double ctr_sq = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::fabs(x[i]));
        std::vector<double> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fp = f(xp);
        const double fm = f(xm);
        const double fwd = (fp - f0) / h;
        const double ctr = (fp - fm) / (2.0 * h);
        diff_sq += (fwd - ctr) * (fwd - ctr);
        ctr_sq += ctr * ctr;
      }
      const double rel =
          std::sqrt(diff_sq) / std::max(1e-12, std::sqrt(ctr_sq));
      if (!(rel < 1e-4)) {
        problems.push_back(smtabc::variant_name(variant) + " trial " +
                           std::to_string(trial) + ": rel = " + fmt(rel));
      }
    }
  }
  std::string detail;
  for (const auto& s : problems) detail += (detail.empty() ? "" : "; ") + s;
  need(problems.empty(), detail);
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void()> body;
  };
  const std::vector<Criterion> criteria = {
      {"smt round trip", check_smt_round_trip},
      {"skip accounting", check_skip_accounting},
      {"group alignment", check_group_alignment},
      {"tokenizer round trip and determinism", check_tokenizer},
      {"huber continuity", check_huber_continuity},
      {"r squared sanity", check_r_squared_sanity},
      {"optimizer benchmarks", check_optimizer},
      {"data discount properties", check_data_discount},
      {"synthetic recovery", check_synthetic_recovery},
      {"law family ordering", check_law_family_ordering},
      {"compute optimal agreement", check_compute_optimal},
      {"repetition rate", check_repetition_rate},
      {"gradient consistency", check_gradient_consistency},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    std::string detail;
    try {
      criteria[i].body();
    } catch (const std::exception& e) {
      detail = e.what();
    } catch (...) {
      detail = "unknown exception";
    }
    const double secs = seconds_since(t0);
    if (detail.empty()) {
      std::printf("[PASS] %02zu %s (%.2fs)\n", i + 1, criteria[i].name, secs);
    } else {
      std::printf("[FAIL] %02zu %s: %s\n", i + 1, criteria[i].name,
                  detail.c_str());
      ++failed;
    }
    std::fflush(stdout);
  }
  if (failed == 0) {
    std::printf("all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  }
  return failed == 0 ? 0 : 1;
}
