#include "semcom/codebook.hpp"

#include <cmath>
#include <limits>

#include "semcom/errors.hpp"

namespace semcom {

std::size_t Codebook::bits_per_index() const {
  std::size_t j = size();
  std::size_t bits = 0;
  std::size_t capacity = 1;
  while (capacity < j) {
    capacity <<= 1;
    ++bits;
  }
  return bits == 0 ? 1 : bits;
}

Codebook init_codebook(std::size_t j, std::size_t d, RngStream& rng,
                       double beta) {
  if (j < 2) throw ConfigError("codebook: size must be at least 2");
  if (d < 1) throw ConfigError("codebook: dimension must be at least 1");
  double bound = 1.0 / static_cast<double>(j);
  std::vector<double> data(j * d);
  for (double& v : data) v = rng.uniform(-bound, bound);
  Codebook cb;
  cb.vectors = Tensor::from_data({j, d}, std::move(data), true);
  cb.beta = beta;
  return cb;
}

namespace {

// Squared distances to every basis vector; argmin with smallest-index ties.
std::size_t nearest_index(const std::vector<double>& z_e, const Codebook& cb,
                          double* best_sq = nullptr,
                          double* second_sq = nullptr) {
  std::size_t j = cb.size(), d = cb.dim();
  if (z_e.size() != d)
    throw ContractError("quantize: feature length " +
                        std::to_string(z_e.size()) +
                        " does not match codebook dimension " +
                        std::to_string(d));
  const auto& e = cb.vectors.data();
  std::size_t best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  double second_v = std::numeric_limits<double>::infinity();
  for (std::size_t row = 0; row < j; ++row) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double diff = z_e[k] - e[row * d + k];
      acc += diff * diff;
    }
    if (acc < best_v) {
      second_v = best_v;
      best_v = acc;
      best = row;
    } else if (acc < second_v) {
      second_v = acc;
    }
  }
  if (best_sq) *best_sq = best_v;
  if (second_sq) *second_sq = second_v;
  return best;
}

}  // namespace

std::pair<std::size_t, std::vector<double>> quantize(
    const std::vector<double>& z_e, const Codebook& cb) {
  std::size_t idx = nearest_index(z_e, cb);
  std::size_t d = cb.dim();
  const auto& e = cb.vectors.data();
  std::vector<double> row(e.begin() + idx * d, e.begin() + (idx + 1) * d);
  return {idx, std::move(row)};
}

std::vector<std::size_t> quantize_rows(const Tensor& z_e, const Codebook& cb) {
  if (z_e.rank() != 2 || z_e.dim(1) != cb.dim())
    throw ContractError("quantize_rows: expected {rows, " +
                        std::to_string(cb.dim()) + "} features, got " +
                        shape_to_string(z_e.shape()));
  std::size_t rows = z_e.dim(0), d = cb.dim();
  const auto& zv = z_e.data();
  std::vector<std::size_t> indices(rows);
  std::vector<double> feature(d);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(zv.begin() + i * d, zv.begin() + (i + 1) * d, feature.begin());
    indices[i] = nearest_index(feature, cb);
  }
  return indices;
}

Tensor lookup_rows(const std::vector<std::size_t>& indices,
                   const Codebook& cb) {
  std::size_t d = cb.dim();
  const auto& e = cb.vectors.data();
  std::vector<double> out(indices.size() * d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= cb.size())
      throw ContractError("lookup_rows: index " + std::to_string(indices[i]) +
                          " out of range for codebook of size " +
                          std::to_string(cb.size()));
    std::copy(e.begin() + indices[i] * d, e.begin() + (indices[i] + 1) * d,
              out.begin() + i * d);
  }
  return Tensor::from_data({indices.size(), d}, std::move(out));
}

Tensor quantize_straight_through(const Tensor& z_e, const Codebook& cb,
                                 const std::vector<std::size_t>& indices) {
  if (z_e.rank() != 2 || z_e.dim(1) != cb.dim())
    throw ContractError("quantize_straight_through: features " +
                        shape_to_string(z_e.shape()) +
                        " incompatible with codebook dimension " +
                        std::to_string(cb.dim()));
  if (indices.size() != z_e.dim(0))
    throw ContractError("quantize_straight_through: " +
                        std::to_string(indices.size()) + " indices for " +
                        std::to_string(z_e.dim(0)) + " feature rows");
  return pass_through_with_values(z_e, lookup_rows(indices, cb).data());
}

Tensor quantization_loss_terms(const Tensor& z_e, const Codebook& cb,
                               const std::vector<std::size_t>& indices) {
  if (indices.size() != z_e.dim(0))
    throw ContractError("quantization_loss_terms: " +
                        std::to_string(indices.size()) + " indices for " +
                        std::to_string(z_e.dim(0)) + " feature rows");
  std::size_t rows = z_e.dim(0);
  Tensor selected = gather_rows(cb.vectors, indices);  // codebook in the graph
  Tensor codeword_term = sum_sq(sub(stop_grad(z_e), selected));
  Tensor commit_term = sum_sq(sub(z_e, stop_grad(selected)));
  Tensor total = add(codeword_term, scale(commit_term, cb.beta));
  return scale(total, 1.0 / static_cast<double>(rows));
}

Tensor codebook_loss(const Tensor& task_term, const Tensor& z_e,
                     const Codebook& cb,
                     const std::vector<std::size_t>& indices) {
  if (task_term.numel() != 1)
    throw ContractError("codebook_loss: task term must be scalar");
  return add(task_term, quantization_loss_terms(z_e, cb, indices));
}

QuantizeMargin quantize_margin(const std::vector<double>& z_e,
                               const Codebook& cb) {
  QuantizeMargin m;
  double best_sq = 0.0, second_sq = 0.0;
  m.nearest = nearest_index(z_e, cb, &best_sq, &second_sq);
  m.nearest_dist = std::sqrt(best_sq);
  m.second_dist = std::sqrt(second_sq);
  return m;
}

}  // namespace semcom
