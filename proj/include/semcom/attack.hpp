#ifndef SEMCOM_ATTACK_HPP
#define SEMCOM_ATTACK_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "semcom/tensor.hpp"

namespace semcom {

// Budgeted input-space attack settings. alpha defaults to epsilon / steps so
// the power budget is spread uniformly over the iterations.
struct AttackConfig {
  double epsilon = 0.012;
  int norm_order = 2;  // only the L2 ball is supported
  std::size_t steps = 5;
  double alpha = 0.0;  // 0 = derive as epsilon / steps

  void validate() const;  // throws ConfigError
  double step_size() const;
  bool operator==(const AttackConfig&) const = default;
};

// Scalar task loss of the frozen system as a function of the input image.
// The callable must build a fresh graph on each call; the input tensor it
// receives has gradient tracking enabled.
using LossFn = std::function<Tensor(const Tensor&)>;

// One gradient-sign ascent step: s + alpha * sign(dL/ds), with sign(0) = +1.
// Throws NumericError on a non-finite gradient.
Tensor fgsm_step(const LossFn& loss, const Tensor& s, double alpha);

// Scales delta onto the L2 ball of radius epsilon if it lies outside;
// shorter perturbations are returned unchanged.
std::vector<double> project_l2(std::vector<double> delta, double epsilon);

// Iterated sign ascent: `steps` rounds of fgsm_step, each followed by
// projection of the cumulative perturbation onto the epsilon-ball around the
// original input and a clamp of the perturbed image to [0, 1]. Returns the
// final perturbation delta = s' - s with ||delta||_2 <= epsilon. The model
// behind `loss` is read-only throughout.
std::vector<double> generate_semantic_noise(const LossFn& loss,
                                            const Tensor& s,
                                            const AttackConfig& cfg);

// Convenience: s + delta as a plain tensor.
Tensor apply_perturbation(const Tensor& s, const std::vector<double>& delta);

double l2_norm(const std::vector<double>& v);

}  // namespace semcom

#endif  // SEMCOM_ATTACK_HPP
