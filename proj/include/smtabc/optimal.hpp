#pragma once

/*
 * Allocation of a FLOPs budget C between parameters N and tokens D under
 * the 6*N*D accounting. For the plain power-law core the optimum is
 * closed-form: N_opt = G*(C/6)^a, D_opt = (1/G)*(C/6)^b with
 * G = (alpha*A / (beta*B))^(1/(alpha+beta)), a = beta/(alpha+beta),
 * b = alpha/(alpha+beta). Every other variant is minimized by
 * golden-section search over log N along the constraint D = C/(6N).
 */

#include <string>

#include "smtabc/laws.hpp"

namespace smtabc {

struct AllocationResult {
  double n_opt = 0.0;
  double d_opt = 0.0;
  double predicted_loss = 0.0;
  double epochs = 0.0;   // d_opt / u_d; NaN when no u_d was supplied
  double g_const = 0.0;
  double a_exp = 0.0;
  double b_exp = 0.0;    // computed as 1 - a_exp
  bool at_bound = false;  // search optimum pinned to a bracket edge
};

struct ModelConfig {
  long long hidden = 0;
  long long layers = 0;
  long long ff_hidden = 0;
  long long heads = 0;
  long long head_size = 0;
  long long vocab = 0;
};

AllocationResult closed_form_allocation(const LawParams& p, double flops);

// u_d <= 0 is only accepted for the Chinchilla variant.
AllocationResult constrained_search(const LawParams& p, double flops,
                                    double u_d);

// Tied embedding, per layer: Q,K,V,O over heads*head_size, a 3-matrix
// gated MLP to ff_hidden, and two norms.
long long param_count(const ModelConfig& cfg);

std::string allocation_to_json(const AllocationResult& r);

}  // namespace smtabc
