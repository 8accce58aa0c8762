#include "semcom/grad_check.hpp"

#include <cmath>
#include <string>

#include "semcom/errors.hpp"

namespace semcom {

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& function,
                           const Tensor& point, double step, double tol) {
  if (!(step > 0.0) || step > 1e-3)
    throw ContractError("grad_check: step must be in (0, 1e-3]");

  Tensor x = point.detach_copy(true);
  Tensor loss = function(x);
  loss.backward();
  const std::vector<double> analytic = x.grad();

  GradCheckReport report;
  report.entries.reserve(point.numel());
  std::vector<double> base = point.data();
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto eval_at = [&](double v) {
      std::vector<double> shifted = base;
      shifted[i] = v;
      Tensor probe = Tensor::from_data(point.shape(), std::move(shifted));
      double out = function(probe).item();
      if (!std::isfinite(out))
        throw NumericError("grad_check: non-finite value at coordinate " +
                           std::to_string(i));
      return out;
    };
    double plus = eval_at(base[i] + step);
    double minus = eval_at(base[i] - step);
    double numeric = (plus - minus) / (2.0 * step);
    double a = analytic[i];
    if (!std::isfinite(a) || !std::isfinite(numeric))
      throw NumericError("grad_check: non-finite gradient at coordinate " +
                         std::to_string(i));
    double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
    double rel = std::fabs(a - numeric) / denom;
    report.entries.push_back({i, a, numeric, rel});
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  report.pass = report.max_rel_error < tol;
  return report;
}

}  // namespace semcom
