#pragma once

/*
 * Loss-law evaluators. The family shares the power-law core
 * A/N^alpha + B/D^beta + E and differs in how data and parameters are
 * discounted for repetition:
 *   - Chinchilla: raw N, D.
 *   - DataConstrained: N', D' with saturating exponential discounts.
 *   - ContinuousDPrime: D'' = ((1 - k^{D/U_D}) / (1 - k)) * U_D.
 *   - NDTerm: ContinuousDPrime plus a d/(N^alpha * D''^beta) cross term.
 *   - SMS: NDTerm plus an activation-gated linear overfitting term in
 *     raw D, ln N, ln U_D.
 */

#include <string>

#include "smtabc/error.hpp"

namespace smtabc {

enum class LawVariant { Chinchilla, DataConstrained, ContinuousDPrime,
                        NDTerm, SMS };

enum class Activation { GELU, ReLU, LeakyReLU, Tanh, SELU, Sigmoid };

struct OverfitParams {
  double k_d = 0.0;   // slope on raw training tokens D
  double k_n = 0.0;   // slope on ln N
  double k_u = 0.0;   // slope on ln U_D (entering negatively)
  double k_in = 0.0;  // intercept (entering negatively)
};

struct LawParams {
  LawVariant variant = LawVariant::Chinchilla;
  double a_coef = 0.0;
  double b_coef = 0.0;
  double e_const = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double d_coef = 0.0;   // NDTerm / SMS
  double k_eff = 1.0;    // D'' laws; 1 means no repetition discount
  double rd_star = 0.0;  // DataConstrained
  double rn_star = 0.0;  // DataConstrained
  OverfitParams overfit;  // SMS
  Activation activation = Activation::GELU;
};

double apply_activation(Activation act, double x);

double chinchilla_loss(const LawParams& p, double n, double d);

// D' = U_D + U_D * rd_star * (1 - exp(-R_D / rd_star)).
double effective_data_discrete(double u_d, double r_d, double rd_star);
// Same shape with U_N = min(N_opt, N) supplied by the caller.
double effective_params(double n, double u_n, double rn_star);
// D'' = ((1 - k^{D/U_D}) / (1 - k)) * U_D; k == 1 returns the limit D.
double effective_data_continuous(double u_d, double d, double k_eff);

double data_constrained_loss(const LawParams& p, double n, double d,
                             double u_d);
double continuous_dprime_loss(const LawParams& p, double n, double d,
                              double u_d);
double nd_term_loss(const LawParams& p, double n, double d, double u_d);
double overfit_term(const LawParams& p, double n, double d, double u_d);
double sms_loss(const LawParams& p, double n, double d, double u_d);

// Dispatch on p.variant; u_d is ignored by Chinchilla.
double law_loss(const LawParams& p, double n, double d, double u_d);

std::string variant_name(LawVariant v);
LawVariant variant_from_name(const std::string& name);
std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

std::string law_params_to_json(const LawParams& p);
LawParams law_params_from_json(const std::string& json_text);

}  // namespace smtabc
