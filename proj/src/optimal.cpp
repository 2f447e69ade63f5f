#include "smtabc/optimal.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace smtabc {
namespace {

void fill_exponents(const LawParams& p, AllocationResult& r,
                    bool require_coefs) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0))
    throw DomainError("allocation needs positive alpha and beta");
  r.a_exp = p.beta / (p.alpha + p.beta);
  r.b_exp = 1.0 - r.a_exp;
  if (p.a_coef > 0.0 && p.b_coef > 0.0) {
    r.g_const = std::pow(p.alpha * p.a_coef / (p.beta * p.b_coef),
                         1.0 / (p.alpha + p.beta));
  } else if (require_coefs) {
    throw DomainError("allocation needs positive A and B");
  } else {
    r.g_const = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

AllocationResult closed_form_allocation(const LawParams& p, double flops) {
  if (p.variant != LawVariant::Chinchilla)
    throw DomainError(
        "the closed form only covers the plain power-law variant");
  if (!(flops > 0.0)) throw DomainError("FLOPs budget must be positive");

  AllocationResult r;
  fill_exponents(p, r, true);
  double budget = flops / 6.0;
  r.n_opt = r.g_const * std::pow(budget, r.a_exp);
  r.d_opt = std::pow(budget, r.b_exp) / r.g_const;
  r.predicted_loss = chinchilla_loss(p, r.n_opt, r.d_opt);
  r.epochs = std::numeric_limits<double>::quiet_NaN();
  return r;
}

AllocationResult constrained_search(const LawParams& p, double flops,
                                    double u_d) {
  if (!(flops > 0.0)) throw DomainError("FLOPs budget must be positive");
  bool needs_u = p.variant != LawVariant::Chinchilla;
  if (needs_u && !(u_d > 0.0))
    throw DomainError("this variant needs a positive U_D");

  AllocationResult r;
  fill_exponents(p, r, false);

  double budget = flops / 6.0;
  double lo = std::log(1e6);
  double hi = std::log(budget);
  if (!(hi > lo))
    throw DomainError("budget too small for the search bracket");

  auto eval = [&](double ln_n) {
    double n = std::exp(ln_n);
    double d = budget / n;
    return law_loss(p, n, d, needs_u ? u_d : 1.0);
  };

  // Golden-section: unimodal on this bracket for the supported laws.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double span = hi - lo;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = eval(c), fd = eval(d);
  double tol = 1e-6 * std::max(1.0, (std::abs(lo) + std::abs(hi)) / 2.0);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }
  double ln_n_opt = (a + b) / 2.0;
  r.at_bound = (ln_n_opt - lo) < 1e-4 * span || (hi - ln_n_opt) < 1e-4 * span;
  r.n_opt = std::exp(ln_n_opt);
  r.d_opt = budget / r.n_opt;
  r.predicted_loss = law_loss(p, r.n_opt, r.d_opt, needs_u ? u_d : 1.0);
  r.epochs = u_d > 0.0 ? r.d_opt / u_d
                       : std::numeric_limits<double>::quiet_NaN();
  return r;
}

long long param_count(const ModelConfig& cfg) {
  if (cfg.hidden <= 0 || cfg.layers < 0 || cfg.ff_hidden <= 0 ||
      cfg.heads <= 0 || cfg.head_size <= 0 || cfg.vocab <= 0)
    throw DomainError("model dimensions must be positive");
  long long attn = 4 * cfg.hidden * cfg.heads * cfg.head_size;
  long long mlp = 3 * cfg.hidden * cfg.ff_hidden;
  long long norms = 2 * cfg.hidden;
  return cfg.vocab * cfg.hidden + cfg.layers * (attn + mlp + norms);
}

std::string allocation_to_json(const AllocationResult& r) {
  nlohmann::json j;
  j["n_opt"] = r.n_opt;
  j["d_opt"] = r.d_opt;
  j["predicted_loss"] = r.predicted_loss;
  j["epochs"] = r.epochs;
  j["g_const"] = r.g_const;
  j["a_exp"] = r.a_exp;
  j["b_exp"] = r.b_exp;
  j["at_bound"] = r.at_bound;
  return j.dump();
}

}  // namespace smtabc
