#include "smtabc/laws.hpp"

#include <cmath>

#include <json.hpp>

namespace smtabc {
namespace {

constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
constexpr double kLeakySlope = 0.01;

void require_positive(double v, const char* name) {
  if (!(v > 0.0))
    throw DomainError(std::string(name) + " must be positive, got " +
                      std::to_string(v));
}

// Compute-optimal N for a data budget of U_D tokens under the current
// power-law core; needed by the N' discount, so it is recomputed from
// the candidate parameters on every evaluation.
double n_opt_for_data(const LawParams& p, double u_d) {
  require_positive(p.a_coef, "A");
  require_positive(p.b_coef, "B");
  require_positive(p.alpha, "alpha");
  require_positive(p.beta, "beta");
  double g = std::pow(p.alpha * p.a_coef / (p.beta * p.b_coef),
                      1.0 / (p.alpha + p.beta));
  return std::pow(g, 1.0 + p.beta / p.alpha) *
         std::pow(u_d, p.beta / p.alpha);
}

double core_loss(const LawParams& p, double n_eff, double d_eff) {
  return p.a_coef / std::pow(n_eff, p.alpha) +
         p.b_coef / std::pow(d_eff, p.beta) + p.e_const;
}

}  // namespace

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::GELU:
      // Exact Gaussian CDF form x * Phi(x).
      return x * 0.5 * std::erfc(-x / std::sqrt(2.0));
    case Activation::ReLU:
      return x > 0.0 ? x : 0.0;
    case Activation::LeakyReLU:
      return x > 0.0 ? x : kLeakySlope * x;
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::SELU:
      return x > 0.0 ? kSeluLambda * x
                     : kSeluLambda * kSeluAlpha * std::expm1(x);
    case Activation::Sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
  }
  throw DomainError("unknown activation");
}

double chinchilla_loss(const LawParams& p, double n, double d) {
  require_positive(n, "N");
  require_positive(d, "D");
  return core_loss(p, n, d);
}

double effective_data_discrete(double u_d, double r_d, double rd_star) {
  require_positive(u_d, "U_D");
  require_positive(rd_star, "rd_star");
  if (r_d < 0.0) throw DomainError("R_D must be non-negative");
  return u_d + u_d * rd_star * (-std::expm1(-r_d / rd_star));
}

double effective_params(double n, double u_n, double rn_star) {
  require_positive(n, "N");
  require_positive(u_n, "U_N");
  require_positive(rn_star, "rn_star");
  double r_n = std::max(n / u_n - 1.0, 0.0);
  return u_n + u_n * rn_star * (-std::expm1(-r_n / rn_star));
}

double effective_data_continuous(double u_d, double d, double k_eff) {
  require_positive(u_d, "U_D");
  if (d < 0.0) throw DomainError("D must be non-negative");
  if (!(k_eff > 0.0) || k_eff > 1.0)
    throw DomainError("k_eff must lie in (0, 1]");
  if (d == u_d) return u_d;  // (1 - k)/(1 - k) cancels for every k
  if (k_eff == 1.0) return d;
  // 1 - k^x as -expm1(x * log1p(k - 1)) stays accurate as k -> 1.
  double x = d / u_d;
  return u_d * (-std::expm1(x * std::log1p(k_eff - 1.0))) /
         (1.0 - k_eff);
}

double data_constrained_loss(const LawParams& p, double n, double d,
                             double u_d) {
  require_positive(n, "N");
  require_positive(d, "D");
  require_positive(u_d, "U_D");
  double r_d = std::max(d / u_d - 1.0, 0.0);
  double d_eff = effective_data_discrete(u_d, r_d, p.rd_star);
  double u_n = std::min(n_opt_for_data(p, u_d), n);
  double n_eff = effective_params(n, u_n, p.rn_star);
  return core_loss(p, n_eff, d_eff);
}

double continuous_dprime_loss(const LawParams& p, double n, double d,
                              double u_d) {
  require_positive(n, "N");
  require_positive(d, "D");
  return core_loss(p, n, effective_data_continuous(u_d, d, p.k_eff));
}

double nd_term_loss(const LawParams& p, double n, double d, double u_d) {
  require_positive(n, "N");
  require_positive(d, "D");
  double d_eff = effective_data_continuous(u_d, d, p.k_eff);
  return p.d_coef / (std::pow(n, p.alpha) * std::pow(d_eff, p.beta)) +
         core_loss(p, n, d_eff);
}

double overfit_term(const LawParams& p, double n, double d, double u_d) {
  require_positive(n, "N");
  require_positive(u_d, "U_D");
  if (d < 0.0) throw DomainError("D must be non-negative");
  double z = p.overfit.k_d * d + p.overfit.k_n * std::log(n) -
             p.overfit.k_u * std::log(u_d) - p.overfit.k_in;
  return apply_activation(p.activation, z);
}

double sms_loss(const LawParams& p, double n, double d, double u_d) {
  return nd_term_loss(p, n, d, u_d) + overfit_term(p, n, d, u_d);
}

double law_loss(const LawParams& p, double n, double d, double u_d) {
  switch (p.variant) {
    case LawVariant::Chinchilla:
      return chinchilla_loss(p, n, d);
    case LawVariant::DataConstrained:
      return data_constrained_loss(p, n, d, u_d);
    case LawVariant::ContinuousDPrime:
      return continuous_dprime_loss(p, n, d, u_d);
    case LawVariant::NDTerm:
      return nd_term_loss(p, n, d, u_d);
    case LawVariant::SMS:
      return sms_loss(p, n, d, u_d);
  }
  throw DomainError("unknown law variant");
}

std::string variant_name(LawVariant v) {
  switch (v) {
    case LawVariant::Chinchilla: return "chinchilla";
    case LawVariant::DataConstrained: return "dc";
    case LawVariant::ContinuousDPrime: return "dpp";
    case LawVariant::NDTerm: return "nd";
    case LawVariant::SMS: return "sms";
  }
  throw DomainError("unknown law variant");
}

LawVariant variant_from_name(const std::string& name) {
  if (name == "chinchilla") return LawVariant::Chinchilla;
  if (name == "dc") return LawVariant::DataConstrained;
  if (name == "dpp") return LawVariant::ContinuousDPrime;
  if (name == "nd") return LawVariant::NDTerm;
  if (name == "sms") return LawVariant::SMS;
  throw ConfigError("unknown law variant \"" + name +
                    "\"; expected chinchilla|dc|dpp|nd|sms");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::GELU: return "gelu";
    case Activation::ReLU: return "relu";
    case Activation::LeakyReLU: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::SELU: return "selu";
    case Activation::Sigmoid: return "sigmoid";
  }
  throw DomainError("unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "gelu") return Activation::GELU;
  if (name == "relu") return Activation::ReLU;
  if (name == "leaky_relu") return Activation::LeakyReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "selu") return Activation::SELU;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation \"" + name + "\"");
}

std::string law_params_to_json(const LawParams& p) {
  nlohmann::json j;
  j["variant"] = variant_name(p.variant);
  j["a"] = p.a_coef;
  j["b"] = p.b_coef;
  j["e"] = p.e_const;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  switch (p.variant) {
    case LawVariant::Chinchilla:
      break;
    case LawVariant::DataConstrained:
      j["rd_star"] = p.rd_star;
      j["rn_star"] = p.rn_star;
      break;
    case LawVariant::ContinuousDPrime:
      j["k_eff"] = p.k_eff;
      break;
    case LawVariant::NDTerm:
      j["d"] = p.d_coef;
      j["k_eff"] = p.k_eff;
      break;
    case LawVariant::SMS:
      j["d"] = p.d_coef;
      j["k_eff"] = p.k_eff;
      j["overfit"] = {{"k_d", p.overfit.k_d},
                      {"k_n", p.overfit.k_n},
                      {"k_u", p.overfit.k_u},
                      {"k_in", p.overfit.k_in}};
      j["activation"] = activation_name(p.activation);
      break;
  }
  return j.dump();
}

LawParams law_params_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("parameter JSON is malformed: ") +
                      e.what());
  }
  LawParams p;
  try {
    p.variant = variant_from_name(j.at("variant").get<std::string>());
    p.a_coef = j.at("a").get<double>();
    p.b_coef = j.at("b").get<double>();
    p.e_const = j.at("e").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.beta = j.at("beta").get<double>();
    if (j.contains("d")) p.d_coef = j["d"].get<double>();
    if (j.contains("k_eff")) p.k_eff = j["k_eff"].get<double>();
    if (j.contains("rd_star")) p.rd_star = j["rd_star"].get<double>();
    if (j.contains("rn_star")) p.rn_star = j["rn_star"].get<double>();
    if (j.contains("overfit")) {
      const auto& o = j["overfit"];
      p.overfit.k_d = o.at("k_d").get<double>();
      p.overfit.k_n = o.at("k_n").get<double>();
      p.overfit.k_u = o.at("k_u").get<double>();
      p.overfit.k_in = o.at("k_in").get<double>();
    }
    if (j.contains("activation"))
      p.activation = activation_from_name(j["activation"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("parameter JSON is malformed: ") +
                      e.what());
  }
  return p;
}

}  // namespace smtabc
