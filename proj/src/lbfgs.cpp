#include "smtabc/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace smtabc {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double norm1(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion: returns H*g for the implicit inverse Hessian.
std::vector<double> apply_inverse_hessian(const std::deque<Pair>& pairs,
                                          std::vector<double> q,
                                          bool scale) {
  std::vector<double> alpha(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    alpha[i] = pairs[i].rho * dot(pairs[i].s, q);
    for (std::size_t k = 0; k < q.size(); ++k)
      q[k] -= alpha[i] * pairs[i].y[k];
  }
  if (scale && !pairs.empty()) {
    const Pair& last = pairs.back();
    double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double beta = pairs[i].rho * dot(pairs[i].y, q);
    for (std::size_t k = 0; k < q.size(); ++k)
      q[k] += (alpha[i] - beta) * pairs[i].s[k];
  }
  return q;
}

}  // namespace

std::vector<double> central_difference_gradient(
    const ObjectiveFn& f, const std::vector<double>& x) {
  std::vector<double> g(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = 1e-6 * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + h;
    double fp = f(probe);
    probe[i] = x[i] - h;
    double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

LbfgsResult lbfgs_minimize(const ObjectiveFn& f, const GradientFn& grad,
                           std::vector<double> x0, const LbfgsConfig& cfg) {
  if (cfg.history < 1) throw ConfigError("lbfgs history must be >= 1");

  LbfgsResult res;
  res.x = std::move(x0);
  double fx = f(res.x);
  if (!std::isfinite(fx))
    throw NonFiniteError("objective is not finite at the starting point");
  res.trace.push_back(fx);

  std::vector<double> g = grad(res.x);
  std::deque<Pair> pairs;
  constexpr double kArmijoC = 1e-4;
  constexpr int kMaxHalvings = 20;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (norm2(g) < cfg.grad_tolerance) {
      res.converged = true;
      break;
    }

    std::vector<double> dir =
        apply_inverse_hessian(pairs, g, cfg.scale_initial_hessian);
    for (double& v : dir) v = -v;
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      // Curvature information went stale; fall back to steepest descent.
      pairs.clear();
      dir = g;
      for (double& v : dir) v = -v;
      slope = dot(g, dir);
      if (!(slope < 0.0)) break;  // zero gradient
    }

    // No curvature pair yet: the unit trial would be a raw gradient step
    // of arbitrary size, so scale it by the learning rate and clamp.
    double step = pairs.empty()
                      ? cfg.learning_rate * std::min(1.0, 1.0 / norm1(g))
                      : 1.0;

    double f_new = 0.0;
    bool accepted = false;
    std::vector<double> x_new(res.x.size());
    for (int h = 0; h <= kMaxHalvings; ++h) {
      for (std::size_t k = 0; k < res.x.size(); ++k)
        x_new[k] = res.x[k] + step * dir[k];
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + kArmijoC * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search exhausted; keep the best point

    std::vector<double> g_new = grad(x_new);
    Pair p;
    p.s.resize(res.x.size());
    p.y.resize(res.x.size());
    for (std::size_t k = 0; k < res.x.size(); ++k) {
      p.s[k] = x_new[k] - res.x[k];
      p.y[k] = g_new[k] - g[k];
    }
    double sy = dot(p.s, p.y);
    if (sy > 1e-10 * norm2(p.s) * norm2(p.y)) {
      p.rho = 1.0 / sy;
      pairs.push_back(std::move(p));
      if (pairs.size() > static_cast<std::size_t>(cfg.history))
        pairs.pop_front();
    }

    res.x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
    res.trace.push_back(fx);
    res.iterations = iter + 1;
  }

  res.objective = fx;
  return res;
}

}  // namespace smtabc
