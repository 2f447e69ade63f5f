#include "smtabc/fit.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "smtabc/lbfgs.hpp"

namespace smtabc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double safe_log(double v) { return std::log(std::max(v, 1e-300)); }

struct ObsCache {
  double n, d, u_d, loss;
  double ln_n, ln_d, ln_u, ln_loss;
};

std::vector<ObsCache> build_cache(const std::vector<LossObservation>& obs) {
  std::vector<ObsCache> c;
  c.reserve(obs.size());
  for (const auto& o : obs)
    c.push_back({o.n, o.d, o.u_d, o.loss, std::log(o.n), std::log(o.d),
                 std::log(o.u_d), std::log(o.loss)});
  return c;
}

double lse(const double* terms, int count) {
  double m = terms[0];
  for (int i = 1; i < count; ++i) m = std::max(m, terms[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < count; ++i) s += std::exp(terms[i] - m);
  return m + std::log(s);
}

// rstar * (1 - exp(-r / rstar)), the saturating repetition discount.
double rd_star_term(double rstar, double r) {
  return rstar * (-std::expm1(-r / rstar));
}

// ln D'' without leaving log space prematurely; k in (0, 1].
double ln_d_continuous(double u_d, double d, double ln_u, double ln_d,
                       double k) {
  if (d == u_d || k >= 1.0) return (k >= 1.0) ? ln_d : ln_u;
  double one_minus_kx = -std::expm1((d / u_d) * std::log1p(k - 1.0));
  return ln_u + std::log(one_minus_kx) - std::log1p(-k);
}

double objective_cached(LawVariant variant, const std::vector<double>& x,
                        const std::vector<ObsCache>& cache, double delta) {
  int idx = 0;
  double log_d_coef = 0.0;
  if (variant == LawVariant::NDTerm || variant == LawVariant::SMS)
    log_d_coef = x[idx++];
  double log_a = x[idx++], log_b = x[idx++], log_e = x[idx++];
  double alpha = x[idx++], beta = x[idx++];
  double rd_star = 0.0, rn_star = 0.0, k = 1.0;
  if (variant == LawVariant::DataConstrained) {
    rd_star = std::exp(x[idx++]);
    rn_star = std::exp(x[idx++]);
    if (!(alpha > 0.0) || !(beta > 0.0)) return kInf;
  } else if (variant != LawVariant::Chinchilla) {
    k = sigmoid(x[idx++]);
    if (!(k > 0.0)) return kInf;
  }

  double total = 0.0;
  double terms[4];
  for (const auto& o : cache) {
    int count = 0;
    switch (variant) {
      case LawVariant::Chinchilla:
        terms[0] = log_a - alpha * o.ln_n;
        terms[1] = log_b - beta * o.ln_d;
        terms[2] = log_e;
        count = 3;
        break;
      case LawVariant::DataConstrained: {
        double ln_g = (std::log(alpha) - std::log(beta) + log_a - log_b) /
                      (alpha + beta);
        double ln_nopt =
            (1.0 + beta / alpha) * ln_g + (beta / alpha) * o.ln_u;
        double ln_un = std::min(ln_nopt, o.ln_n);
        double r_n = std::expm1(o.ln_n - ln_un);  // exp(x) - 1, >= 0
        double ln_np =
            ln_un + std::log1p(rd_star_term(rn_star, r_n));
        double r_d = std::max(std::expm1(o.ln_d - o.ln_u), 0.0);
        double ln_dp =
            o.ln_u + std::log1p(rd_star_term(rd_star, r_d));
        terms[0] = log_a - alpha * ln_np;
        terms[1] = log_b - beta * ln_dp;
        terms[2] = log_e;
        count = 3;
        break;
      }
      case LawVariant::ContinuousDPrime:
      case LawVariant::NDTerm:
      case LawVariant::SMS: {
        double ln_dpp = ln_d_continuous(o.u_d, o.d, o.ln_u, o.ln_d, k);
        if (variant == LawVariant::ContinuousDPrime) {
          terms[0] = log_a - alpha * o.ln_n;
          terms[1] = log_b - beta * ln_dpp;
          terms[2] = log_e;
          count = 3;
        } else {
          terms[0] = log_d_coef - alpha * o.ln_n - beta * ln_dpp;
          terms[1] = log_a - alpha * o.ln_n;
          terms[2] = log_b - beta * ln_dpp;
          terms[3] = log_e;
          count = 4;
        }
        break;
      }
    }
    double r = lse(terms, count) - o.ln_loss;
    if (!std::isfinite(r)) return kInf;
    total += huber(r, delta);
  }
  return total;
}

struct StartResult {
  double objective = kInf;
  std::vector<double> x;
  std::vector<double> trace;
};

std::vector<StartResult> run_starts(
    const ObjectiveFn& objective,
    const std::vector<std::vector<double>>& grid, const FitConfig& cfg) {
  LbfgsConfig lcfg;
  lcfg.history = cfg.lbfgs_history;
  lcfg.learning_rate = cfg.lbfgs_learning_rate;
  lcfg.max_iterations = cfg.max_iterations;

  std::vector<StartResult> results(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    GradientFn fd = [&](const std::vector<double>& x) {
      return central_difference_gradient(objective, x);
    };
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) break;
      try {
        LbfgsResult r = lbfgs_minimize(objective, fd, grid[i], lcfg);
        results[i] = {r.objective, std::move(r.x), std::move(r.trace)};
      } catch (const Error&) {
        // start was unusable (non-finite objective); leave it at +inf
      }
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  std::size_t n_threads = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                                          : (hw ? hw : 1);
  n_threads = std::min(n_threads, grid.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

// Least squares by Householder QR with column normalization; nullopt on
// a (numerically) rank-deficient design.
std::optional<std::array<double, 4>> ols4(
    const std::vector<std::array<double, 4>>& rows,
    const std::vector<double>& y) {
  const std::size_t m = rows.size();
  if (m < 4) return std::nullopt;

  std::array<double, 4> col_norm{};
  for (int j = 0; j < 4; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += rows[i][j] * rows[i][j];
    col_norm[j] = std::sqrt(s);
    if (!(col_norm[j] > 0.0)) return std::nullopt;
  }

  std::vector<std::array<double, 4>> a(rows);
  std::vector<double> b(y);
  for (std::size_t i = 0; i < m; ++i)
    for (int j = 0; j < 4; ++j) a[i][j] /= col_norm[j];

  for (int j = 0; j < 4; ++j) {
    double sigma = 0.0;
    for (std::size_t i = j; i < m; ++i) sigma += a[i][j] * a[i][j];
    double norm = std::sqrt(sigma);
    if (norm < 1e-10) return std::nullopt;
    double alpha = a[j][j] > 0.0 ? -norm : norm;
    std::vector<double> v(m, 0.0);
    v[j] = a[j][j] - alpha;
    for (std::size_t i = j + 1; i < m; ++i) v[i] = a[i][j];
    double vtv = 0.0;
    for (std::size_t i = j; i < m; ++i) vtv += v[i] * v[i];
    if (vtv > 0.0) {
      for (int c = j; c < 4; ++c) {
        double vta = 0.0;
        for (std::size_t i = j; i < m; ++i) vta += v[i] * a[i][c];
        double f = 2.0 * vta / vtv;
        for (std::size_t i = j; i < m; ++i) a[i][c] -= f * v[i];
      }
      double vtb = 0.0;
      for (std::size_t i = j; i < m; ++i) vtb += v[i] * b[i];
      double f = 2.0 * vtb / vtv;
      for (std::size_t i = j; i < m; ++i) b[i] -= f * v[i];
    }
  }

  std::array<double, 4> c{};
  for (int j = 3; j >= 0; --j) {
    double s = b[j];
    for (int k2 = j + 1; k2 < 4; ++k2) s -= a[j][k2] * c[k2];
    if (std::abs(a[j][j]) < 1e-10) return std::nullopt;
    c[j] = s / a[j][j];
  }
  for (int j = 0; j < 4; ++j) c[j] /= col_norm[j];
  return c;
}

std::vector<double> distinct_sorted(const std::vector<LossObservation>& obs,
                                    double LossObservation::* field) {
  std::vector<double> v;
  for (const auto& o : obs) v.push_back(o.*field);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

struct MetricSet {
  double r2 = kNaN;
  double huber_loss_scale = kNaN;
  double huber_log_scale = kNaN;
};

MetricSet evaluate_metrics(const LawParams& p,
                           const std::vector<LossObservation>& obs,
                           double delta) {
  MetricSet m;
  if (obs.empty()) return m;
  std::vector<double> pred, actual;
  double h_loss = 0.0, h_log = 0.0;
  for (const auto& o : obs) {
    double yhat = law_loss(p, o.n, o.d, o.u_d);
    pred.push_back(yhat);
    actual.push_back(o.loss);
    h_loss += huber(yhat - o.loss, delta);
    h_log += huber(safe_log(yhat) - std::log(o.loss), delta);
  }
  m.huber_loss_scale = h_loss / static_cast<double>(obs.size());
  m.huber_log_scale = h_log / static_cast<double>(obs.size());
  try {
    m.r2 = r_squared(pred, actual);
  } catch (const DegenerateDataError&) {
    // constant observations: leave r2 as NaN
  }
  return m;
}

}  // namespace

double huber(double residual, double delta) {
  double r = std::abs(residual);
  if (r <= delta) return 0.5 * r * r;
  return delta * (r - 0.5 * delta);
}

double r_squared(const std::vector<double>& predictions,
                 const std::vector<double>& observations) {
  if (predictions.size() != observations.size())
    throw DomainError("prediction/observation size mismatch");
  if (observations.size() < 2)
    throw DegenerateDataError("r_squared needs at least two observations");
  double mean = 0.0;
  for (double o : observations) mean += o;
  mean /= static_cast<double>(observations.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    ss_res += (observations[i] - predictions[i]) *
              (observations[i] - predictions[i]);
    ss_tot += (observations[i] - mean) * (observations[i] - mean);
  }
  if (ss_tot == 0.0)
    throw DegenerateDataError("observations are constant");
  return 1.0 - ss_res / ss_tot;
}

std::vector<double> pack_params(const LawParams& p) {
  std::vector<double> x;
  if (p.variant == LawVariant::NDTerm || p.variant == LawVariant::SMS)
    x.push_back(safe_log(p.d_coef));
  x.push_back(safe_log(p.a_coef));
  x.push_back(safe_log(p.b_coef));
  x.push_back(safe_log(p.e_const));
  x.push_back(p.alpha);
  x.push_back(p.beta);
  if (p.variant == LawVariant::DataConstrained) {
    x.push_back(safe_log(p.rd_star));
    x.push_back(safe_log(p.rn_star));
  } else if (p.variant != LawVariant::Chinchilla) {
    double k = std::clamp(p.k_eff, 1e-12, 1.0 - 1e-12);
    x.push_back(std::log(k / (1.0 - k)));
  }
  return x;
}

LawParams unpack_params(LawVariant variant, const std::vector<double>& x) {
  LawParams p;
  p.variant = variant;
  std::size_t idx = 0;
  if (variant == LawVariant::NDTerm || variant == LawVariant::SMS)
    p.d_coef = std::exp(x[idx++]);
  p.a_coef = std::exp(x[idx++]);
  p.b_coef = std::exp(x[idx++]);
  p.e_const = std::exp(x[idx++]);
  p.alpha = x[idx++];
  p.beta = x[idx++];
  if (variant == LawVariant::DataConstrained) {
    p.rd_star = std::exp(x[idx++]);
    p.rn_star = std::exp(x[idx++]);
  } else if (variant != LawVariant::Chinchilla) {
    p.k_eff = sigmoid(x[idx++]);
  }
  return p;
}

double lse_objective(LawVariant variant, const std::vector<double>& packed,
                     const std::vector<LossObservation>& obs, double delta) {
  return objective_cached(variant, packed, build_cache(obs), delta);
}

std::vector<std::vector<double>> initial_grid(LawVariant variant) {
  const double coef[] = {0.0, 5.0, 10.0};
  const double exps[] = {0.2, 0.35, 0.5};
  const double log_rstar = std::log(10.0);
  bool has_d =
      variant == LawVariant::NDTerm || variant == LawVariant::SMS;
  std::vector<double> d_axis = has_d ? std::vector<double>{0.0, 5.0, 10.0}
                                     : std::vector<double>{0.0};
  std::vector<std::vector<double>> grid;
  for (double ld : d_axis)
    for (double la : coef)
      for (double lb : coef)
        for (double le : coef)
          for (double a : exps)
            for (double b : exps) {
              std::vector<double> x;
              if (has_d) x.push_back(ld);
              x.push_back(la);
              x.push_back(lb);
              x.push_back(le);
              x.push_back(a);
              x.push_back(b);
              if (variant == LawVariant::DataConstrained) {
                x.push_back(log_rstar);
                x.push_back(log_rstar);
              } else if (variant != LawVariant::Chinchilla) {
                x.push_back(0.0);  // logit k -> k = 0.5
              }
              grid.push_back(std::move(x));
            }
  return grid;
}

double detect_early_stop(std::vector<LossObservation> run) {
  if (run.size() < 3)
    throw TooFewPointsError("early-stop detection needs >= 3 points");
  std::sort(run.begin(), run.end(),
            [](const LossObservation& a, const LossObservation& b) {
              return a.d < b.d;
            });
  std::size_t best = 0;
  double best_val = kInf;
  for (std::size_t i = 0; i < run.size(); ++i) {
    double s = run[i].loss;
    int cnt = 1;
    if (i > 0) {
      s += run[i - 1].loss;
      ++cnt;
    }
    if (i + 1 < run.size()) {
      s += run[i + 1].loss;
      ++cnt;
    }
    double v = s / cnt;
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  return run[best].d;
}

std::vector<LossObservation> observations_from_jsonl(
    const std::string& text) {
  std::vector<LossObservation> out;
  std::size_t pos = 0;
  long long line_no = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    ++line_no;
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      LossObservation o;
      o.n = j.at("n").get<double>();
      o.d = j.at("d").get<double>();
      o.u_d = j.at("u_d").get<double>();
      o.loss = j.at("loss").get<double>();
      if (j.contains("run_id")) o.run_id = j["run_id"].get<std::string>();
      out.push_back(std::move(o));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("loss log line " + std::to_string(line_no) +
                        " is malformed: " + e.what());
    }
  }
  return out;
}

FitReport fit_law(LawVariant variant,
                  const std::vector<LossObservation>& observations,
                  SplitMode split, const FitConfig& cfg) {
  for (const auto& o : observations)
    if (!(o.n > 0.0) || !(o.d > 0.0) || !(o.u_d > 0.0) || !(o.loss > 0.0) ||
        !std::isfinite(o.loss))
      throw DomainError("observations must have positive finite fields");

  // Canonical order makes the fit independent of input ordering.
  std::vector<LossObservation> obs(observations);
  std::sort(obs.begin(), obs.end(),
            [](const LossObservation& a, const LossObservation& b) {
              return std::tie(a.n, a.u_d, a.d, a.loss, a.run_id) <
                     std::tie(b.n, b.u_d, b.d, b.loss, b.run_id);
            });

  auto ns = distinct_sorted(obs, &LossObservation::n);
  auto ds = distinct_sorted(obs, &LossObservation::d);
  if (ns.size() < 2 || ds.size() < 3)
    throw InsufficientDataError(
        "need >= 2 distinct N and >= 3 distinct D values");

  std::vector<LossObservation> train, test;
  if (split == SplitMode::LargestN) {
    if (ns.size() < 3)
      throw InsufficientDataError(
          "largest-n split needs >= 3 distinct N values");
    double cut = ns[ns.size() - 2];
    for (const auto& o : obs)
      (o.n >= cut ? test : train).push_back(o);
  } else {
    train = obs;
  }
  {
    auto tns = distinct_sorted(train, &LossObservation::n);
    auto tds = distinct_sorted(train, &LossObservation::d);
    if (tns.size() < 2 || tds.size() < 3)
      throw InsufficientDataError(
          "training split needs >= 2 distinct N and >= 3 distinct D");
  }

  // Early-stop bookkeeping per (N, U_D) curve. Curves too short to
  // smooth are treated as all pre-stop.
  auto split_stop = [](const std::vector<LossObservation>& set,
                       std::vector<LossObservation>& pre,
                       std::vector<LossObservation>& post) {
    std::map<std::pair<double, double>, std::vector<LossObservation>> runs;
    for (const auto& o : set) runs[{o.n, o.u_d}].push_back(o);
    for (auto& [key, run] : runs) {
      double d_stop = run.size() >= 3 ? detect_early_stop(run) : kInf;
      for (const auto& o : run)
        (o.d <= d_stop ? pre : post).push_back(o);
    }
  };
  std::vector<LossObservation> pre_train, post_train, pre_test, post_test;
  split_stop(train, pre_train, post_train);
  split_stop(test, pre_test, post_test);

  // The two-stage variant's core is always fitted on the pre-overfit
  // region; otherwise a strong tail rise drags the power law into
  // non-physical shapes (negative exponents) that stage 2 cannot repair.
  const bool trim_stage1 =
      cfg.early_stop_detection || variant == LawVariant::SMS;
  const std::vector<LossObservation>& stage1 = trim_stage1 ? pre_train : train;
  if (stage1.empty())
    throw InsufficientDataError("no observations left for stage 1");

  std::vector<ObsCache> cache = build_cache(stage1);
  ObjectiveFn objective = [&](const std::vector<double>& x) {
    return objective_cached(variant, x, cache, cfg.huber_delta);
  };

  std::vector<std::vector<double>> grid =
      cfg.init_grid.empty() ? initial_grid(variant) : cfg.init_grid;
  std::vector<StartResult> results = run_starts(objective, grid, cfg);

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].objective < results[best].objective) best = i;
  if (!std::isfinite(results[best].objective))
    throw NoConvergenceError("no starting point produced a finite fit");

  FitReport report;
  report.params = unpack_params(variant, results[best].x);
  report.objective_trace = std::move(results[best].trace);

  if (variant == LawVariant::SMS) {
    // Residual regression over the post-early-stop points. The linear
    // form is c0*D + c1*lnN + c2*(-lnU_D) + c3; k_in enters negatively.
    std::vector<std::array<double, 4>> rows;
    std::vector<double> resid;
    LawParams core = report.params;
    for (const auto& o : post_train) {
      rows.push_back(
          {o.d, std::log(o.n), -std::log(o.u_d), 1.0});
      resid.push_back(o.loss - nd_term_loss(core, o.n, o.d, o.u_d));
    }
    if (auto c = ols4(rows, resid)) {
      report.params.overfit.k_d = (*c)[0];
      report.params.overfit.k_n = (*c)[1];
      report.params.overfit.k_u = (*c)[2];
      report.params.overfit.k_in = -(*c)[3];
    }
  }

  const std::vector<LossObservation>& train_eval =
      cfg.early_stop_detection ? pre_train : train;
  const std::vector<LossObservation>& test_eval =
      cfg.early_stop_detection ? pre_test : test;
  MetricSet tr = evaluate_metrics(report.params, train_eval, cfg.huber_delta);
  MetricSet te = evaluate_metrics(report.params, test_eval, cfg.huber_delta);
  report.train_r2 = tr.r2;
  report.train_huber = tr.huber_loss_scale;
  report.train_huber_log = tr.huber_log_scale;
  report.test_r2 = te.r2;
  report.test_huber = te.huber_loss_scale;
  report.test_huber_log = te.huber_log_scale;
  report.n_train = static_cast<long long>(train_eval.size());
  report.n_test = static_cast<long long>(test_eval.size());
  return report;
}

std::string fit_report_to_json(const FitReport& r) {
  nlohmann::json j;
  j["params"] = nlohmann::json::parse(law_params_to_json(r.params));
  j["train_r2"] = r.train_r2;
  j["train_huber"] = r.train_huber;
  j["train_huber_log"] = r.train_huber_log;
  j["test_r2"] = r.test_r2;
  j["test_huber"] = r.test_huber;
  j["test_huber_log"] = r.test_huber_log;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["objective_trace"] = r.objective_trace;
  return j.dump();
}

}  // namespace smtabc
