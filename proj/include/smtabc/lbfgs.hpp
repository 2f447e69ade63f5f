#pragma once

/*
 * Limited-memory BFGS with the two-loop recursion. The inverse Hessian
 * is never formed: the last `history` (s, y) pairs reconstruct H*g, with
 * H0 = gamma*I, gamma = s'y / y'y (unit when scale_initial_hessian is
 * off). Steps are Armijo-backtracked from a unit trial; the very first
 * step has no curvature pair yet and is scaled by the learning rate.
 */

#include <functional>
#include <vector>

#include "smtabc/error.hpp"

namespace smtabc {

class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& msg) : Error(msg) {}
};

using ObjectiveFn = std::function<double(const std::vector<double>&)>;
using GradientFn =
    std::function<std::vector<double>(const std::vector<double>&)>;

struct LbfgsConfig {
  int history = 10;
  double learning_rate = 1e-1;  // scales the first trial step only
  int max_iterations = 200;
  double grad_tolerance = 1e-8;     // on the gradient 2-norm
  bool scale_initial_hessian = true;
};

struct LbfgsResult {
  std::vector<double> x;
  double objective = 0.0;
  std::vector<double> trace;  // objective at x0, then after each step
  int iterations = 0;
  bool converged = false;  // gradient tolerance reached
};

LbfgsResult lbfgs_minimize(const ObjectiveFn& f, const GradientFn& grad,
                           std::vector<double> x0,
                           const LbfgsConfig& cfg = {});

// Central differences with per-coordinate step 1e-6 * (1 + |x_i|).
std::vector<double> central_difference_gradient(const ObjectiveFn& f,
                                                const std::vector<double>& x);

}  // namespace smtabc
