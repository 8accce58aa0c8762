#ifndef SEMCOM_OPTIM_HPP
#define SEMCOM_OPTIM_HPP

#include <vector>

#include "semcom/tensor.hpp"

namespace semcom {

// Plain SGD: p <- p - lr * grad(p) for each parameter, then grads are
// cleared. Every parameter must have a populated gradient.
void sgd_step(std::vector<Tensor>& params, double lr);

// Rescales all gradients jointly so their global L2 norm is at most
// max_norm; returns the pre-clip norm. max_norm must be positive.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

// Clears gradient buffers without updating values.
void zero_grads(std::vector<Tensor>& params);

}  // namespace semcom

#endif  // SEMCOM_OPTIM_HPP
