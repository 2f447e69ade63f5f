#pragma once

/*
 * Loss-law fitting. Stage 1 minimizes the sum of Huber losses between
 * log-sum-exp model predictions and log observed losses over a
 * deterministic grid of starting points (multi-start L-BFGS, finite
 * difference gradients). For the SMS variant a second stage regresses
 * the loss-scale residuals of the fitted core on [D, ln N, -ln U_D, 1]
 * over the points past each run's early-stop minimum, yielding the
 * overfit coefficients.
 *
 * Positivity is enforced by parameterization, not constraints: the
 * packed vector carries log coefficients and logit(k_eff).
 */

#include <string>
#include <vector>

#include "smtabc/error.hpp"
#include "smtabc/laws.hpp"

namespace smtabc {

struct LossObservation {
  double n = 0.0;     // parameter count
  double d = 0.0;     // training tokens
  double u_d = 0.0;   // unique tokens per epoch
  double loss = 0.0;  // observed validation loss
  std::string run_id;
};

enum class SplitMode { LargestN, None };

struct FitConfig {
  double huber_delta = 1e-3;
  int lbfgs_history = 10;
  double lbfgs_learning_rate = 1e-1;
  int max_iterations = 200;
  bool early_stop_detection = false;  // restrict fit and metrics to
                                      // points at or before each run's
                                      // loss minimum
  int threads = 0;  // 0 = hardware concurrency
  // Starting points in packed space; empty selects the built-in grid.
  std::vector<std::vector<double>> init_grid;
};

struct FitReport {
  LawParams params;
  double train_r2 = 0.0, train_huber = 0.0, train_huber_log = 0.0;
  double test_r2 = 0.0, test_huber = 0.0, test_huber_log = 0.0;
  long long n_train = 0, n_test = 0;
  std::vector<double> objective_trace;  // winning start, non-increasing
};

class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& msg) : Error(msg) {}
};
class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};
class NoConvergenceError : public Error {
 public:
  explicit NoConvergenceError(const std::string& msg) : Error(msg) {}
};
class TooFewPointsError : public Error {
 public:
  explicit TooFewPointsError(const std::string& msg) : Error(msg) {}
};

double huber(double residual, double delta);
// 1 - SS_res/SS_tot; throws DegenerateDataError on constant observations.
double r_squared(const std::vector<double>& predictions,
                 const std::vector<double>& observations);

// Packed layouts (stage-1 optimization space):
//   Chinchilla:       [log A, log B, log E, alpha, beta]
//   DataConstrained:  [log A, log B, log E, alpha, beta,
//                      log rd_star, log rn_star]
//   ContinuousDPrime: [log A, log B, log E, alpha, beta, logit k]
//   NDTerm / SMS:     [log d, log A, log B, log E, alpha, beta, logit k]
std::vector<double> pack_params(const LawParams& p);
LawParams unpack_params(LawVariant variant, const std::vector<double>& x);

// Sum over observations of Huber_delta(LSE(log terms) - log loss).
// Returns +inf when the candidate leaves the evaluable domain.
double lse_objective(LawVariant variant, const std::vector<double>& packed,
                     const std::vector<LossObservation>& obs, double delta);

std::vector<std::vector<double>> initial_grid(LawVariant variant);

// D at the minimum of the 3-point moving average of loss along one
// (N, U_D) curve; points with larger D form the overfit regression set.
double detect_early_stop(std::vector<LossObservation> run);

FitReport fit_law(LawVariant variant,
                  const std::vector<LossObservation>& observations,
                  SplitMode split, const FitConfig& cfg = {});

std::vector<LossObservation> observations_from_jsonl(
    const std::string& text);
std::string fit_report_to_json(const FitReport& r);

}  // namespace smtabc
