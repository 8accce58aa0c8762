#include "semcom/optim.hpp"

#include <cmath>

#include "semcom/errors.hpp"

namespace semcom {

void sgd_step(std::vector<Tensor>& params, double lr) {
  for (const auto& p : params) {
    if (!p.has_grad())
      throw ContractError("sgd_step: parameter gradient not populated");
  }
  for (auto& p : params) {
    const auto& g = p.grad();
    auto& v = p.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    p.zero_grad();
  }
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  if (max_norm <= 0.0)
    throw ContractError("clip_grad_norm: max_norm must be positive");
  double total_sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad())
      throw ContractError("clip_grad_norm: parameter gradient not populated");
    for (double g : p.grad()) total_sq += g * g;
  }
  double norm = std::sqrt(total_sq);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (auto& p : params)
      for (double& g : p.mutable_grad()) g *= scale;
  }
  return norm;
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace semcom
