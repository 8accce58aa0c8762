#ifndef SEMCOM_GRAD_CHECK_HPP
#define SEMCOM_GRAD_CHECK_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "semcom/tensor.hpp"

namespace semcom {

struct GradCheckEntry {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool pass = false;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<GradCheckEntry> entries;  // one per coordinate of the point
};

// Compares reverse-mode gradients of a deterministic scalar-valued function
// against central finite differences at `point`. The relative error per
// coordinate is |analytic - numeric| / max(1, |analytic|, |numeric|).
// Preconditions: step in (0, 1e-3]. Throws NumericError naming the coordinate
// if a non-finite value shows up.
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& function,
                           const Tensor& point, double step = 1e-5,
                           double tol = 1e-4);

}  // namespace semcom

#endif  // SEMCOM_GRAD_CHECK_HPP
