#include "semcom/attack.hpp"

#include <algorithm>
#include <cmath>

#include "semcom/errors.hpp"

namespace semcom {

void AttackConfig::validate() const {
  if (epsilon < 0.0) throw ConfigError("attack: epsilon must be >= 0");
  if (norm_order != 2)
    throw ConfigError("attack: only the L2 budget (norm_order 2) is supported");
  if (steps < 1) throw ConfigError("attack: steps must be >= 1");
  if (alpha < 0.0) throw ConfigError("attack: alpha must be >= 0");
}

double AttackConfig::step_size() const {
  return alpha > 0.0 ? alpha : epsilon / static_cast<double>(steps);
}

double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

Tensor fgsm_step(const LossFn& loss, const Tensor& s, double alpha) {
  Tensor input = s.detach_copy(true);
  Tensor l = loss(input);
  if (l.numel() != 1)
    throw ContractError("fgsm_step: loss function must return a scalar");
  l.backward();
  const auto& g = input.grad();
  std::vector<double> out = input.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(g[i]))
      throw NumericError("fgsm_step: non-finite gradient at coordinate " +
                         std::to_string(i));
    out[i] += alpha * (g[i] >= 0.0 ? 1.0 : -1.0);
  }
  return Tensor::from_data(s.shape(), std::move(out));
}

std::vector<double> project_l2(std::vector<double> delta, double epsilon) {
  if (epsilon < 0.0) throw ConfigError("project: epsilon must be >= 0");
  if (epsilon == 0.0) {
    std::fill(delta.begin(), delta.end(), 0.0);
    return delta;
  }
  double norm = l2_norm(delta);
  if (norm <= epsilon) return delta;
  double factor = epsilon / norm;
  for (double& x : delta) x *= factor;
  return delta;
}

std::vector<double> generate_semantic_noise(const LossFn& loss,
                                            const Tensor& s,
                                            const AttackConfig& cfg) {
  cfg.validate();
  double alpha = cfg.step_size();
  const auto& original = s.data();
  Tensor current = s.detach_copy(false);
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    Tensor stepped = fgsm_step(loss, current, alpha);
    std::vector<double> delta = stepped.data();
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= original[i];
    delta = project_l2(std::move(delta), cfg.epsilon);
    std::vector<double> next(original.size());
    for (std::size_t i = 0; i < next.size(); ++i)
      next[i] = std::clamp(original[i] + delta[i], 0.0, 1.0);
    current = Tensor::from_data(s.shape(), std::move(next));
  }
  std::vector<double> delta = current.data();
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= original[i];
  return delta;
}

Tensor apply_perturbation(const Tensor& s, const std::vector<double>& delta) {
  if (delta.size() != s.numel())
    throw ContractError("apply_perturbation: delta length " +
                        std::to_string(delta.size()) +
                        " does not match input of shape " +
                        shape_to_string(s.shape()));
  std::vector<double> out = s.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += delta[i];
  return Tensor::from_data(s.shape(), std::move(out));
}

}  // namespace semcom
