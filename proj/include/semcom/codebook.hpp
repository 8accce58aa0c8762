#ifndef SEMCOM_CODEBOOK_HPP
#define SEMCOM_CODEBOOK_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "semcom/rng.hpp"
#include "semcom/tensor.hpp"

namespace semcom {

// Discrete feature codebook shared by transmitter and receiver. Only the
// index of the nearest basis vector goes over the wire; both ends hold
// bit-identical copies of `vectors`.
struct Codebook {
  Tensor vectors;      // {J, D}, trainable
  double beta = 0.25;  // commitment weight of the third loss term

  std::size_t size() const { return vectors.dim(0); }
  std::size_t dim() const { return vectors.dim(1); }
  std::size_t bits_per_index() const;  // ceil(log2 J)
};

// Basis vectors drawn uniform in [-1/J, 1/J].
Codebook init_codebook(std::size_t j, std::size_t d, RngStream& rng,
                       double beta = 0.25);

// Nearest basis vector by L2 distance, ties broken toward the smallest index.
// Returns (index, basis row values).
std::pair<std::size_t, std::vector<double>> quantize(
    const std::vector<double>& z_e, const Codebook& cb);

// Row-wise quantization of a {rows, D} feature matrix.
std::vector<std::size_t> quantize_rows(const Tensor& z_e, const Codebook& cb);

// Receiver-side lookup: {indices.size(), D} matrix of basis rows. Plain
// values, no gradient tracking.
Tensor lookup_rows(const std::vector<std::size_t>& indices,
                   const Codebook& cb);

// Straight-through estimator over a {rows, D} feature matrix: forward value
// is exactly the selected basis rows; backward copies the incoming gradient
// to z_e unaltered. The codebook receives no gradient through this path.
Tensor quantize_straight_through(const Tensor& z_e, const Codebook& cb,
                                 const std::vector<std::size_t>& indices);

// The two quantization terms of the training loss, averaged over feature
// rows: mean_i( ||ng[z_e_i] - e_i||^2 + beta * ||z_e_i - ng[e_i]||^2 ).
// The first addend trains the selected codebook rows (via `indices` into
// cb.vectors), the second pulls the encoder toward its codeword.
Tensor quantization_loss_terms(const Tensor& z_e, const Codebook& cb,
                               const std::vector<std::size_t>& indices);

// Full three-term training loss: task_term + quantization terms. Gradient
// routing: the decoder sees only the task term, the encoder the task and
// commitment terms, the selected codebook rows only the codeword term.
Tensor codebook_loss(const Tensor& task_term, const Tensor& z_e,
                     const Codebook& cb,
                     const std::vector<std::size_t>& indices);

// Distances from z_e to its nearest and second-nearest basis vectors.
// Perturbations smaller than half the gap cannot change the index.
struct QuantizeMargin {
  std::size_t nearest = 0;
  double nearest_dist = 0.0;
  double second_dist = 0.0;
};
QuantizeMargin quantize_margin(const std::vector<double>& z_e,
                               const Codebook& cb);

}  // namespace semcom

#endif  // SEMCOM_CODEBOOK_HPP
